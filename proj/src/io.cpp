#include "inisar/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace inisar {

namespace {

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open output file: " + path);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

std::string fmt_prob(double v) { return fmt(v, 6); }
std::string fmt_m(double v) { return fmt(v, 4); }
std::string fmt_rad(double v) { return fmt(v, 6); }

void write_points_csv(const std::string& path, const TargetScene& scene) {
    auto out = open_out(path);
    out << "xi1_m,xi2_m,xi3_m,snr_db\n";
    for (const auto& s : scene.scatterers) {
        out << fmt_m(s.coords.xi1) << ',' << fmt_m(s.coords.xi2) << ','
            << fmt_m(s.coords.xi3) << ',' << fmt(s.snr_db, 2) << '\n';
    }
}

TargetScene read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open points file: " + path);
    TargetScene scene;
    scene.label = path;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        double first;
        if (row == 1 && !parse_double(fields[0], first)) continue;  // header
        if (fields.size() != 4) {
            throw InputError("points row " + std::to_string(row) + ": expected 4 columns");
        }
        SceneScatterer s;
        if (!parse_double(fields[0], s.coords.xi1) || !parse_double(fields[1], s.coords.xi2) ||
            !parse_double(fields[2], s.coords.xi3) || !parse_double(fields[3], s.snr_db)) {
            throw InputError("points row " + std::to_string(row) + ": invalid number");
        }
        scene.scatterers.push_back(s);
    }
    if (scene.scatterers.empty()) throw InputError("points file is empty: " + path);
    for (const auto& s : scene.scatterers) {
        scene.length_m = std::max(scene.length_m, 2.0 * std::abs(s.coords.xi1));
        scene.width_m = std::max(scene.width_m, 2.0 * std::abs(s.coords.xi2));
        scene.height_m = std::max(scene.height_m, 2.0 * std::abs(s.coords.xi3));
    }
    return scene;
}

std::vector<Eigen::VectorXd> read_phases_csv(const std::string& path, int num_channels) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open phases file: " + path);
    std::vector<Eigen::VectorXd> rows;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        double first;
        if (row == 1 && !parse_double(fields[0], first)) continue;  // header
        if (static_cast<int>(fields.size()) != num_channels) {
            throw InputError("phases row " + std::to_string(row) + ": expected " +
                             std::to_string(num_channels) + " columns, got " +
                             std::to_string(fields.size()));
        }
        Eigen::VectorXd y(num_channels);
        for (int c = 0; c < num_channels; ++c) {
            if (!parse_double(fields[c], y(c))) {
                throw InputError("phases row " + std::to_string(row) + ": invalid number");
            }
            if (!(y(c) >= -M_PI && y(c) < M_PI)) {
                throw InputError("phases row " + std::to_string(row) +
                                 ": phase outside [-pi, pi)");
            }
        }
        rows.push_back(std::move(y));
    }
    if (rows.empty()) throw InputError("phases file is empty: " + path);
    return rows;
}

void write_solutions_csv(const std::string& path, const std::vector<MilsSolution>& solutions,
                         const std::vector<bool>& accepted) {
    auto out = open_out(path);
    const int m = solutions.empty() ? 0 : static_cast<int>(solutions.front().a_hat.size());
    for (int c = 0; c < m; ++c) out << "k_hat_" << c << ',';
    out << "xi1_m,xi3_m,cost,ap,accepted\n";
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        const auto& s = solutions[i];
        for (int c = 0; c < m; ++c) out << s.a_hat(c) << ',';
        out << fmt_m(s.b_hat.xi1) << ',' << fmt_m(s.b_hat.xi3) << ',' << fmt(s.cost_min, 6)
            << ',' << fmt_prob(s.ap) << ',' << (accepted[i] ? 1 : 0) << '\n';
    }
}

void write_grid_csv(const std::string& path, const PerformanceGrid& grid) {
    auto out = open_out(path);
    out << "snr_db,ap_thr,accr,cofar,n_trials,discarded\n";
    for (std::size_t s = 0; s < grid.snr_db_axis.size(); ++s) {
        for (std::size_t t = 0; t < grid.threshold_axis.size(); ++t) {
            const auto& cell = grid.cells[s][t];
            out << fmt(grid.snr_db_axis[s], 2) << ',' << fmt_prob(grid.threshold_axis[t]) << ','
                << fmt_prob(cell.accr) << ',' << fmt_prob(cell.cofar) << ',' << grid.n_trials
                << ',' << (cell.discarded ? 1 : 0) << '\n';
        }
    }
}

void write_roc_csv(const std::string& path, double snr_db, const std::vector<RocPoint>& curve) {
    auto out = open_out(path);
    out << "snr_db,accr,cofar\n";
    for (const auto& p : curve) {
        out << fmt(snr_db, 2) << ',' << fmt_prob(p.accr) << ',' << fmt_prob(p.cofar) << '\n';
    }
}

void write_thresholds_csv(const std::string& path, const std::vector<CalibrationResult>& rows) {
    auto out = open_out(path);
    out << "snr_db,ap_thr,achieved_cofar,achieved_accr,target_cofar\n";
    for (const auto& r : rows) {
        out << fmt(r.snr_db, 2) << ',' << fmt_prob(r.ap_thr) << ',' << fmt_prob(r.achieved_cofar)
            << ',' << fmt_prob(r.achieved_accr) << ',' << fmt_prob(r.target_cofar) << '\n';
    }
}

void write_report_json(const std::string& path, const ReconstructionReport& report) {
    nlohmann::json j;
    j["mode"] = to_string(report.mode);
    j["n_scatterers"] = report.scatterers.size();
    j["accepted_pct"] = std::stod(fmt(report.accepted_pct, 4));
    j["correct_pct"] = std::stod(fmt(report.correct_pct, 4));
    j["rmse_all_m"] = std::stod(fmt_m(report.rmse_all_m));
    j["rmse_correct_m"] = std::stod(fmt_m(report.rmse_correct_m));
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_scatterers_csv(const std::string& path, const ReconstructionReport& report) {
    auto out = open_out(path);
    const int m =
        report.scatterers.empty() ? 0 : static_cast<int>(report.scatterers.front().k_true.size());
    out << "xi1_true_m,xi2_true_m,xi3_true_m,xi1_est_m,xi2_est_m,xi3_est_m,ap,accepted,correct";
    for (int c = 0; c < m; ++c) out << ",k_true_" << c;
    for (int c = 0; c < m; ++c) out << ",k_hat_" << c;
    out << '\n';
    for (const auto& r : report.scatterers) {
        out << fmt_m(r.truth.xi1) << ',' << fmt_m(r.truth.xi2) << ',' << fmt_m(r.truth.xi3) << ','
            << fmt_m(r.estimate.xi1) << ',' << fmt_m(r.estimate.xi2) << ','
            << fmt_m(r.estimate.xi3) << ',' << fmt_prob(r.ap) << ',' << (r.accepted ? 1 : 0)
            << ',' << (r.correct ? 1 : 0);
        for (int c = 0; c < m; ++c) out << ',' << r.k_true(c);
        for (int c = 0; c < m; ++c) out << ',' << r.k_hat(c);
        out << '\n';
    }
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config"] = nlohmann::json::parse(manifest.config_json);
    j["seed"] = manifest.seed;
    j["outputs"] = manifest.outputs;
    j["tool_version"] = manifest.tool_version;
    j["wall_seconds"] = manifest.wall_seconds;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace inisar

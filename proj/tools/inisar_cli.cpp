#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inisar/io.hpp"
#include "inisar/model.hpp"
#include "inisar/montecarlo.hpp"
#include "inisar/quality.hpp"
#include "inisar/scene.hpp"
#include "inisar/solver.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::size_t trials = 100000;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_trials = true) {
    cmd->add_option("--config", opts.config_path, "system configuration JSON")->required();
    cmd->add_option("--out-dir", opts.out_dir, "output directory (default: current)");
    cmd->add_option("--seed", opts.seed, "master RNG seed (default: 0)");
    if (with_trials) {
        cmd->add_option("--trials", opts.trials, "Monte Carlo trials per SNR (default: 100000)");
    }
    cmd->add_option("--threads", opts.threads,
                    "cap worker threads; results do not depend on this");
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    std::filesystem::create_directories(opts.out_dir);
    return (std::filesystem::path(opts.out_dir) / name).string();
}

class ManifestScope {
public:
    ManifestScope(const CommonOpts& opts, std::string command, const inisar::SystemConfig& config)
        : opts_(opts), start_(std::chrono::steady_clock::now()) {
        manifest_.command = std::move(command);
        manifest_.config_json = config.to_json();
        manifest_.seed = opts.seed;
        manifest_.tool_version = kVersion;
    }
    void add_output(const std::string& path) { manifest_.outputs.push_back(path); }
    void finish() {
        manifest_.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        inisar::write_manifest(out_path(opts_, "manifest.json"), manifest_);
    }

private:
    const CommonOpts& opts_;
    std::chrono::steady_clock::time_point start_;
    inisar::RunManifest manifest_;
};

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int cmd_unwrap(const CommonOpts& opts, const std::string& phases_path, double snr_db,
               std::optional<double> ap_thr) {
    const auto config = inisar::SystemConfig::from_json_file(opts.config_path);
    ManifestScope manifest(opts, "unwrap", config);

    const auto rows = inisar::read_phases_csv(phases_path, config.num_channels());
    const auto nm = inisar::coherence_and_variance(inisar::snr_db_to_linear(snr_db));
    const auto dm = inisar::build_design_matrices(config);
    const inisar::MilsSolver solver(dm.B, inisar::build_covariance(config, nm.phase_variance),
                                    config.half_box_m(),
                                    inisar::integer_bounds(config, nm.phase_std()));
    std::vector<inisar::MilsSolution> solutions;
    std::vector<bool> accepted;
    for (const auto& y : rows) {
        auto sol = solver.solve(y);
        accepted.push_back(ap_thr ? inisar::accept(sol.ap, *ap_thr).accepted : true);
        solutions.push_back(std::move(sol));
    }
    const std::string path = out_path(opts, "solutions.csv");
    inisar::write_solutions_csv(path, solutions, accepted);
    manifest.add_output(path);
    manifest.finish();
    std::printf("unwrap: %zu rows -> %s\n", solutions.size(), path.c_str());
    return 0;
}

int cmd_curves(const CommonOpts& opts, const std::vector<double>& snr_list) {
    const auto config = inisar::SystemConfig::from_json_file(opts.config_path);
    ManifestScope manifest(opts, "curves", config);

    std::vector<double> thresholds;
    for (int i = 0; i <= 200; ++i) thresholds.push_back(i / 200.0);
    const auto grid =
        inisar::performance_grid(config, snr_list, thresholds, opts.trials, opts.seed);
    const std::string path = out_path(opts, "grid.csv");
    inisar::write_grid_csv(path, grid);
    manifest.add_output(path);
    manifest.finish();
    std::printf("curves: %zu SNR x %zu thresholds -> %s\n", snr_list.size(), thresholds.size(),
                path.c_str());
    return 0;
}

int cmd_roc(const CommonOpts& opts, const std::vector<double>& snr_list) {
    const auto config = inisar::SystemConfig::from_json_file(opts.config_path);
    ManifestScope manifest(opts, "roc", config);

    const std::string path = out_path(opts, "roc.csv");
    std::ofstream out(path);
    out << "snr_db,accr,cofar\n";
    for (std::size_t s = 0; s < snr_list.size(); ++s) {
        const auto curve = inisar::roc_curve(config, snr_list[s], opts.trials,
                                             inisar::TrialRng::mix(opts.seed) + s);
        char snr_buf[32];
        std::snprintf(snr_buf, sizeof(snr_buf), "%.2f", snr_list[s]);
        for (const auto& p : curve) {
            out << snr_buf << ',' << inisar::fmt_prob(p.accr) << ',' << inisar::fmt_prob(p.cofar)
                << '\n';
        }
    }
    out.close();
    manifest.add_output(path);
    manifest.finish();
    std::printf("roc: %zu SNR values -> %s\n", snr_list.size(), path.c_str());
    return 0;
}

int cmd_calibrate(const CommonOpts& opts, double cofar, const std::vector<double>& snr_list) {
    const auto config = inisar::SystemConfig::from_json_file(opts.config_path);
    ManifestScope manifest(opts, "calibrate", config);

    const auto table = inisar::calibrate_table(config, snr_list, cofar, opts.trials, opts.seed);
    const std::string path = out_path(opts, "thresholds.csv");
    inisar::write_thresholds_csv(path, table.entries);
    manifest.add_output(path);
    manifest.finish();
    for (const auto& e : table.entries) {
        std::printf("calibrate: SNR %.1f dB -> AP_thr %.4f (AccR %.3f, CoFaR %.4f)\n", e.snr_db,
                    e.ap_thr, e.achieved_accr, e.achieved_cofar);
    }
    return 0;
}

struct ReconstructOpts {
    std::string scene_path;
    bool generate_ship = false;
    std::size_t ship_points = 312;
    std::vector<double> ship_dims = {60.0, 10.0, 15.0};
    double ship_snr_db = 25.0;
    std::string mode = "after";
    std::optional<double> ap_thr;
    std::optional<double> cofar;
};

int cmd_reconstruct(const CommonOpts& opts, const ReconstructOpts& ro) {
    const auto config = inisar::SystemConfig::from_json_file(opts.config_path);
    ManifestScope manifest(opts, "reconstruct", config);

    inisar::TargetScene scene;
    if (ro.generate_ship) {
        scene = inisar::generate_ship_target(opts.seed, ro.ship_points, ro.ship_dims.at(0),
                                             ro.ship_dims.at(1), ro.ship_dims.at(2),
                                             ro.ship_snr_db);
        const std::string scene_path = out_path(opts, "scene.csv");
        inisar::write_points_csv(scene_path, scene);
        manifest.add_output(scene_path);
    } else if (!ro.scene_path.empty()) {
        scene = inisar::read_points_csv(ro.scene_path);
    } else {
        throw inisar::InputError("either a scene file or --generate-ship is required");
    }

    const auto mode = inisar::reconstruction_mode_from_string(ro.mode);
    const auto observations =
        inisar::synthesize_phases(scene, config, inisar::TrialRng::mix(opts.seed) + 1);

    inisar::ReconstructionReport report;
    if (mode == inisar::ReconstructionMode::after_ar && ro.cofar) {
        std::vector<double> snrs;
        for (const auto& s : scene.scatterers) {
            if (std::find(snrs.begin(), snrs.end(), s.snr_db) == snrs.end()) {
                snrs.push_back(s.snr_db);
            }
        }
        std::sort(snrs.begin(), snrs.end());
        const auto table = inisar::calibrate_table(config, snrs, *ro.cofar, opts.trials,
                                                   inisar::TrialRng::mix(opts.seed) + 2);
        report = inisar::reconstruct(observations, config, mode, table);
    } else {
        report = inisar::reconstruct(observations, config, mode, ro.ap_thr.value_or(0.0));
    }

    const std::string report_path = out_path(opts, "report.json");
    const std::string points_path = out_path(opts, "points.csv");
    inisar::write_report_json(report_path, report);
    inisar::write_scatterers_csv(points_path, report);
    manifest.add_output(report_path);
    manifest.add_output(points_path);
    manifest.finish();
    std::printf("reconstruct [%s]: accepted %.1f%%, correct %.1f%%, RMSE(all) %.3f m, "
                "RMSE(correct) %.3f m\n",
                inisar::to_string(mode).c_str(), report.accepted_pct, report.correct_pct,
                report.rmse_all_m, report.rmse_correct_m);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum-likelihood mixed-integer least squares phase unwrapping "
                 "for 3D interferometric ISAR"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts opts;

    auto* unwrap = app.add_subcommand("unwrap", "solve per-scatterer unwrapping from a phase CSV");
    std::string phases_path;
    double unwrap_snr = 25.0;
    std::optional<double> unwrap_thr;
    add_common(unwrap, opts, false);
    unwrap->add_option("--phases", phases_path, "wrapped-phase CSV, one column per channel")
        ->required();
    unwrap->add_option("--snr", unwrap_snr, "scatterer SNR in dB")->required();
    unwrap->add_option("--ap-thr", unwrap_thr, "accept/reject threshold on the posterior");

    auto* curves = app.add_subcommand("curves", "AccR/CoFaR grid over (SNR, threshold)");
    std::vector<double> snr_list;
    add_common(curves, opts);
    curves->add_option("--snr", snr_list, "SNR values in dB (repeatable)")->required();

    auto* roc = app.add_subcommand("roc", "CoFaR-vs-AccR curves per SNR");
    add_common(roc, opts);
    roc->add_option("--snr", snr_list, "SNR values in dB (repeatable)")->required();

    auto* calibrate = app.add_subcommand("calibrate", "fixed-CoFaR threshold calibration");
    double cofar = 0.05;
    add_common(calibrate, opts);
    calibrate->add_option("--cofar", cofar, "target conditional failure rate")->required();
    calibrate->add_option("--snr", snr_list, "SNR values in dB (repeatable)")->required();

    auto* reconstruct = app.add_subcommand("reconstruct", "end-to-end scene reconstruction");
    ReconstructOpts ro;
    add_common(reconstruct, opts);
    reconstruct->add_option("--scene", ro.scene_path, "point-cloud CSV (xi1_m,xi2_m,xi3_m,snr_db)");
    reconstruct->add_flag("--generate-ship", ro.generate_ship, "generate the procedural ship scene");
    reconstruct->add_option("--ship-points", ro.ship_points, "scatterer count (default: 312)");
    reconstruct->add_option("--ship-dims", ro.ship_dims, "ship length,width,height in m")
        ->expected(3);
    reconstruct->add_option("--ship-snr", ro.ship_snr_db, "uniform ship SNR in dB (default: 25)");
    reconstruct->add_option("--mode", ro.mode, "none | before | after")->required();
    reconstruct->add_option("--ap-thr", ro.ap_thr, "fixed acceptance threshold");
    reconstruct->add_option("--cofar", ro.cofar, "target CoFaR (fixed-CoFaR strategy)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_threads(opts.threads);
        if (unwrap->parsed()) return cmd_unwrap(opts, phases_path, unwrap_snr, unwrap_thr);
        if (curves->parsed()) return cmd_curves(opts, snr_list);
        if (roc->parsed()) return cmd_roc(opts, snr_list);
        if (calibrate->parsed()) return cmd_calibrate(opts, cofar, snr_list);
        if (reconstruct->parsed()) return cmd_reconstruct(opts, ro);
    } catch (const inisar::TargetUnreachable& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const inisar::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const inisar::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

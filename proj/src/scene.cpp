#include "inisar/scene.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "inisar/quality.hpp"
#include "inisar/rng.hpp"

namespace inisar {

std::string to_string(ReconstructionMode mode) {
    switch (mode) {
        case ReconstructionMode::no_unwrap: return "no_unwrap";
        case ReconstructionMode::before_ar: return "before_ar";
        case ReconstructionMode::after_ar: return "after_ar";
    }
    return "unknown";
}

ReconstructionMode reconstruction_mode_from_string(const std::string& s) {
    if (s == "no_unwrap" || s == "none") return ReconstructionMode::no_unwrap;
    if (s == "before_ar" || s == "before") return ReconstructionMode::before_ar;
    if (s == "after_ar" || s == "after") return ReconstructionMode::after_ar;
    throw InputError("unknown reconstruction mode: " + s);
}

TargetScene generate_ship_target(std::uint64_t seed, std::size_t n_points,
                                 double length_m, double width_m, double height_m,
                                 double snr_db) {
    if (n_points < 1) throw std::invalid_argument("n_points must be >= 1");
    if (!(length_m > 0.0 && width_m > 0.0 && height_m > 0.0)) {
        throw std::invalid_argument("ship dimensions must be positive");
    }
    const double L = length_m, W = width_m, H = height_m;
    const double hull_lo = -H / 2.0, hull_hi = -H / 2.0 + 0.35 * H;
    const double deck_hi = -H / 2.0 + 0.72 * H;

    TargetScene scene;
    scene.length_m = L;
    scene.width_m = W;
    scene.height_m = H;
    scene.label = "ship";
    scene.scatterers.reserve(n_points);

    if (n_points == 1) {
        scene.scatterers.push_back(
            SceneScatterer{ScattererCoords{0.0, 0.0, 0.5 * (hull_lo + hull_hi)}, snr_db});
        return scene;
    }

    const std::size_t n_hull = std::max<std::size_t>(1, n_points * 6 / 10);
    const std::size_t n_deck = std::max<std::size_t>(1, n_points * 3 / 10);
    const std::size_t n_body = n_hull + n_deck;  // <= n_points for n_points >= 2

    for (std::size_t i = 0; i < n_points; ++i) {
        TrialRng rng(seed, i);
        ScattererCoords p;
        if (i < n_hull) {
            // hull: full-width box with a linearly tapered bow over the last 20%
            p.xi1 = rng.uniform(-L / 2.0, L / 2.0);
            const double taper = std::min(1.0, (L / 2.0 - p.xi1) / (0.2 * L));
            p.xi2 = rng.uniform(-W / 2.0, W / 2.0) * taper;
            p.xi3 = rng.uniform(hull_lo, hull_hi);
        } else if (i < n_body) {
            // deckhouse block, mid-aft
            p.xi1 = rng.uniform(-0.30 * L, 0.05 * L);
            p.xi2 = rng.uniform(-0.3 * W, 0.3 * W);
            p.xi3 = rng.uniform(hull_hi, deck_hi);
        } else {
            // mast line
            p.xi1 = -0.05 * L;
            p.xi2 = 0.0;
            p.xi3 = rng.uniform(deck_hi, H / 2.0);
        }
        scene.scatterers.push_back(SceneScatterer{p, snr_db});
    }
    return scene;
}

std::vector<SceneObservation> synthesize_phases(const TargetScene& scene,
                                                const SystemConfig& config,
                                                std::uint64_t seed) {
    const DesignMatrices dm = build_design_matrices(config);
    const int m = config.num_channels();
    const double box = config.half_box_m();

    // one noise Cholesky factor per distinct SNR
    std::map<double, Eigen::MatrixXd> chol_by_snr;

    std::vector<SceneObservation> out;
    out.reserve(scene.scatterers.size());
    for (std::size_t i = 0; i < scene.scatterers.size(); ++i) {
        const auto& sc = scene.scatterers[i];
        if (std::abs(sc.coords.xi1) > box || std::abs(sc.coords.xi3) > box) {
            throw InputError("scatterer " + std::to_string(i) +
                             " lies outside the configured target box");
        }
        auto it = chol_by_snr.find(sc.snr_db);
        if (it == chol_by_snr.end()) {
            const NoiseModel nm = coherence_and_variance(snr_db_to_linear(sc.snr_db));
            const Eigen::MatrixXd Q = build_covariance(config, nm.phase_variance);
            it = chol_by_snr.emplace(sc.snr_db, Eigen::LLT<Eigen::MatrixXd>(Q).matrixL()).first;
        }

        TrialRng rng(seed, i);
        Eigen::VectorXd z(m);
        for (int c = 0; c < m; ++c) z(c) = rng.normal();
        const Eigen::Vector2d xi(sc.coords.xi1, sc.coords.xi3);
        const Eigen::VectorXd unwrapped = dm.B * xi + it->second * z;

        SceneObservation obs;
        obs.problem.y.resize(m);
        obs.true_a.resize(m);
        for (int c = 0; c < m; ++c) {
            obs.problem.y(c) = wrap_phase(unwrapped(c));
            obs.true_a(c) =
                static_cast<int>(std::lround((obs.problem.y(c) - unwrapped(c)) / (2.0 * M_PI)));
        }
        obs.problem.A = dm.A;
        obs.problem.B = dm.B;
        const NoiseModel nm = coherence_and_variance(snr_db_to_linear(sc.snr_db));
        obs.problem.Q_yy = build_covariance(config, nm.phase_variance);
        obs.problem.half_box_m = box;
        obs.truth = sc.coords;
        obs.snr_db = sc.snr_db;
        out.push_back(std::move(obs));
    }
    return out;
}

namespace {

ReconstructionReport run_reconstruction(const std::vector<SceneObservation>& observations,
                                        const SystemConfig& config, ReconstructionMode mode,
                                        const std::function<double(double)>& threshold_for_snr) {
    ReconstructionReport report;
    report.mode = mode;
    report.scatterers.resize(observations.size());

    // shared solver per distinct SNR
    std::map<double, MilsSolver> solver_by_snr;
    for (const auto& obs : observations) {
        if (!solver_by_snr.count(obs.snr_db)) {
            const NoiseModel nm = coherence_and_variance(snr_db_to_linear(obs.snr_db));
            solver_by_snr.emplace(
                obs.snr_db,
                MilsSolver(obs.problem.B, obs.problem.Q_yy, obs.problem.half_box_m,
                           integer_bounds(config, nm.phase_std())));
        }
    }

#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = 0; i < static_cast<long long>(observations.size()); ++i) {
        const auto& obs = observations[i];
        ScattererResult& r = report.scatterers[i];
        r.truth = obs.truth;
        r.k_true = obs.true_a;

        if (mode == ReconstructionMode::no_unwrap) {
            const Eigen::VectorXi zero = Eigen::VectorXi::Zero(obs.true_a.size());
            auto [b, cost] = conditional_real_estimate(obs.problem, zero);
            r.estimate = ScattererCoords{b(0), obs.truth.xi2, b(1)};
            r.cost = cost;
            r.k_hat = zero;
            r.accepted = true;
            r.correct = obs.true_a.isZero();
            continue;
        }

        const MilsSolver& solver = solver_by_snr.at(obs.snr_db);
        try {
            const MilsSolution sol = solver.solve(obs.problem.y);
            r.estimate = ScattererCoords{sol.b_hat.xi1, obs.truth.xi2, sol.b_hat.xi3};
            r.ap = sol.ap;
            r.cost = sol.cost_min;
            r.k_hat = sol.a_hat;
            r.correct = sol.a_hat == obs.true_a;
            r.accepted = mode == ReconstructionMode::before_ar
                             ? true
                             : accept(sol.ap, threshold_for_snr(obs.snr_db)).accepted;
        } catch (const NoAdmissibleSolution&) {
            r.estimate = ScattererCoords{0.0, obs.truth.xi2, 0.0};
            r.k_hat = Eigen::VectorXi::Zero(obs.true_a.size());
            r.accepted = false;
            r.correct = false;
        }
    }

    std::size_t accepted = 0, correct = 0;
    double sq_all = 0.0, sq_correct = 0.0;
    for (const auto& r : report.scatterers) {
        if (!r.accepted) continue;
        ++accepted;
        const double e1 = r.estimate.xi1 - r.truth.xi1;
        const double e3 = r.estimate.xi3 - r.truth.xi3;
        sq_all += e1 * e1 + e3 * e3;
        if (r.correct) {
            ++correct;
            sq_correct += e1 * e1 + e3 * e3;
        }
    }
    const double n = static_cast<double>(report.scatterers.size());
    report.accepted_pct = n > 0 ? 100.0 * static_cast<double>(accepted) / n : 0.0;
    report.correct_pct =
        accepted > 0 ? 100.0 * static_cast<double>(correct) / static_cast<double>(accepted) : 0.0;
    report.rmse_all_m = accepted > 0 ? std::sqrt(sq_all / static_cast<double>(accepted)) : 0.0;
    report.rmse_correct_m =
        correct > 0 ? std::sqrt(sq_correct / static_cast<double>(correct)) : 0.0;
    return report;
}

}  // namespace

ReconstructionReport reconstruct(const std::vector<SceneObservation>& observations,
                                 const SystemConfig& config, ReconstructionMode mode,
                                 double ap_thr) {
    return run_reconstruction(observations, config, mode, [ap_thr](double) { return ap_thr; });
}

ReconstructionReport reconstruct(const std::vector<SceneObservation>& observations,
                                 const SystemConfig& config, ReconstructionMode mode,
                                 const ThresholdTable& thresholds) {
    return run_reconstruction(observations, config, mode,
                              [&thresholds](double snr) { return thresholds.threshold_at(snr); });
}

}  // namespace inisar

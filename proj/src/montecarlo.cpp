#include "inisar/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace inisar {

namespace {

std::vector<double> threshold_sweep_grid(const TrialPool& pool) {
    std::vector<double> grid;
    grid.reserve(201 + pool.size());
    for (int i = 0; i <= 200; ++i) grid.push_back(i / 200.0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool.admissible[i]) grid.push_back(pool.ap[i]);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

}  // namespace

double ThresholdTable::threshold_at(double snr_db) const {
    if (entries.empty()) throw std::invalid_argument("empty threshold table");
    if (snr_db <= entries.front().snr_db) return entries.front().ap_thr;
    if (snr_db >= entries.back().snr_db) return entries.back().ap_thr;
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (snr_db <= entries[i].snr_db) {
            const auto& lo = entries[i - 1];
            const auto& hi = entries[i];
            const double t = (snr_db - lo.snr_db) / (hi.snr_db - lo.snr_db);
            return lo.ap_thr + t * (hi.ap_thr - lo.ap_thr);
        }
    }
    return entries.back().ap_thr;
}

TrialSimulator::TrialSimulator(const SystemConfig& config, double snr_db, double noise_scale)
    : B_(build_design_matrices(config).B),
      noise_chol_(),
      solver_([&] {
          const NoiseModel nm = coherence_and_variance(snr_db_to_linear(snr_db));
          return MilsSolver(build_design_matrices(config).B,
                            build_covariance(config, nm.phase_variance),
                            config.half_box_m(),
                            integer_bounds(config, nm.phase_std()));
      }()),
      half_box_(config.half_box_m()),
      sigma_phi_(coherence_and_variance(snr_db_to_linear(snr_db)).phase_std()),
      noise_scale_(noise_scale) {
    const Eigen::MatrixXd Q =
        build_covariance(config, sigma_phi_ * sigma_phi_);
    noise_chol_ = Eigen::LLT<Eigen::MatrixXd>(Q).matrixL();
}

TrialRecord TrialSimulator::run(std::uint64_t master_seed, std::uint64_t trial_index) const {
    TrialRng rng(master_seed, trial_index);
    const int m = static_cast<int>(B_.rows());

    TrialRecord rec;
    rec.true_xi << rng.uniform(-half_box_, half_box_), rng.uniform(-half_box_, half_box_);
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z(i) = rng.normal();

    const Eigen::VectorXd unwrapped =
        B_ * rec.true_xi + noise_scale_ * (noise_chol_ * z);
    Eigen::VectorXd y(m);
    rec.true_a.resize(m);
    for (int i = 0; i < m; ++i) {
        y(i) = wrap_phase(unwrapped(i));
        rec.true_a(i) = static_cast<int>(std::lround((y(i) - unwrapped(i)) / (2.0 * M_PI)));
    }

    try {
        rec.solution = solver_.solve(y);
        rec.admissible = true;
        rec.correct = rec.solution.a_hat == rec.true_a;
    } catch (const NoAdmissibleSolution&) {
        rec.admissible = false;
        rec.correct = false;
    }
    return rec;
}

TrialRecord simulate_trial(const SystemConfig& config, double snr_db,
                           std::uint64_t master_seed, std::uint64_t trial_index) {
    return TrialSimulator(config, snr_db).run(master_seed, trial_index);
}

TrialPool run_pool(const SystemConfig& config, double snr_db, std::size_t n_trials,
                   std::uint64_t seed, int num_threads) {
    const TrialSimulator sim(config, snr_db);
    TrialPool pool;
    pool.snr_db = snr_db;
    pool.seed = seed;
    pool.ap.resize(n_trials);
    pool.err_sq.resize(n_trials);
    pool.correct.resize(n_trials);
    pool.admissible.resize(n_trials);

#ifdef _OPENMP
    const int prev = omp_get_max_threads();
    if (num_threads > 0) omp_set_num_threads(num_threads);
#pragma omp parallel for schedule(dynamic, 64)
#else
    (void)num_threads;
#endif
    for (long long i = 0; i < static_cast<long long>(n_trials); ++i) {
        const TrialRecord rec = sim.run(seed, static_cast<std::uint64_t>(i));
        pool.admissible[i] = rec.admissible ? 1 : 0;
        pool.correct[i] = rec.correct ? 1 : 0;
        if (rec.admissible) {
            pool.ap[i] = rec.solution.ap;
            const double e1 = rec.solution.b_hat.xi1 - rec.true_xi(0);
            const double e3 = rec.solution.b_hat.xi3 - rec.true_xi(1);
            pool.err_sq[i] = e1 * e1 + e3 * e3;
        } else {
            pool.ap[i] = 0.0;
            pool.err_sq[i] = 0.0;
        }
    }
#ifdef _OPENMP
    if (num_threads > 0) omp_set_num_threads(prev);
#endif
    return pool;
}

PerformanceCell evaluate_pool(const TrialPool& pool, double threshold) {
    std::size_t accepted = 0, wrong_accepted = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool.admissible[i] && pool.ap[i] >= threshold) {
            ++accepted;
            if (!pool.correct[i]) ++wrong_accepted;
        }
    }
    PerformanceCell cell;
    cell.accr = static_cast<double>(accepted) / static_cast<double>(pool.size());
    if (accepted == 0) {
        cell.cofar = 0.0;
        cell.discarded = true;
    } else {
        cell.cofar = static_cast<double>(wrong_accepted) / static_cast<double>(accepted);
        cell.discarded = cell.accr < 0.10;
    }
    return cell;
}

PerformanceGrid performance_grid(const SystemConfig& config,
                                 const std::vector<double>& snr_db_list,
                                 const std::vector<double>& threshold_list,
                                 std::size_t n_trials, std::uint64_t seed) {
    if (snr_db_list.empty() || threshold_list.empty()) {
        throw std::invalid_argument("SNR and threshold axes must be non-empty");
    }
    if (n_trials < 1000) throw std::invalid_argument("n_trials must be >= 1000");
    if (n_trials < 10000) {
        std::fprintf(stderr, "warning: n_trials = %zu is below 10^4; grid estimates will be noisy\n",
                     n_trials);
    }
    PerformanceGrid grid;
    grid.snr_db_axis = snr_db_list;
    grid.threshold_axis = threshold_list;
    grid.n_trials = n_trials;
    grid.cells.resize(snr_db_list.size());
    for (std::size_t s = 0; s < snr_db_list.size(); ++s) {
        const TrialPool pool =
            run_pool(config, snr_db_list[s], n_trials, TrialRng::mix(seed) + s);
        grid.cells[s].reserve(threshold_list.size());
        for (double thr : threshold_list) {
            grid.cells[s].push_back(evaluate_pool(pool, thr));
        }
    }
    return grid;
}

std::vector<RocPoint> roc_curve(const SystemConfig& config, double snr_db,
                                std::size_t n_trials, std::uint64_t seed) {
    const TrialPool pool = run_pool(config, snr_db, n_trials, seed);
    std::vector<RocPoint> curve;
    for (double thr : threshold_sweep_grid(pool)) {
        const PerformanceCell cell = evaluate_pool(pool, thr);
        curve.push_back(RocPoint{thr, cell.accr, cell.cofar});
    }
    std::sort(curve.begin(), curve.end(),
              [](const RocPoint& a, const RocPoint& b) { return a.accr < b.accr; });
    return curve;
}

CalibrationResult calibrate_threshold(const SystemConfig& config, double snr_db,
                                      double target_cofar, std::size_t n_trials,
                                      std::uint64_t seed) {
    if (!(target_cofar > 0.0 && target_cofar <= 1.0)) {
        throw std::invalid_argument("target CoFaR must be in (0, 1]");
    }
    const TrialPool pool = run_pool(config, snr_db, n_trials, seed);
    for (double thr : threshold_sweep_grid(pool)) {
        const PerformanceCell cell = evaluate_pool(pool, thr);
        if (cell.accr < 0.10) continue;
        if (cell.cofar <= target_cofar) {
            const std::size_t accepted =
                static_cast<std::size_t>(cell.accr * static_cast<double>(n_trials) + 0.5);
            if (accepted < 1000) {
                std::fprintf(stderr,
                             "warning: only %zu accepted trials at the calibrated threshold; "
                             "increase n_trials for a stable CoFaR estimate\n",
                             accepted);
            }
            return CalibrationResult{snr_db, thr, cell.accr, cell.cofar, target_cofar};
        }
    }
    throw TargetUnreachable("no threshold with AccR >= 10% reaches CoFaR <= " +
                            std::to_string(target_cofar) + " at SNR " +
                            std::to_string(snr_db) + " dB");
}

ThresholdTable calibrate_table(const SystemConfig& config,
                               const std::vector<double>& snr_db_list,
                               double target_cofar, std::size_t n_trials,
                               std::uint64_t seed) {
    if (snr_db_list.empty()) throw std::invalid_argument("SNR list must be non-empty");
    ThresholdTable table;
    table.target_cofar = target_cofar;
    for (std::size_t s = 0; s < snr_db_list.size(); ++s) {
        table.entries.push_back(calibrate_threshold(config, snr_db_list[s], target_cofar,
                                                    n_trials, TrialRng::mix(seed) + s));
    }
    std::sort(table.entries.begin(), table.entries.end(),
              [](const CalibrationResult& a, const CalibrationResult& b) {
                  return a.snr_db < b.snr_db;
              });
    return table;
}

double predicted_position_rmse(const SystemConfig& config, double snr_db) {
    const NoiseModel nm = coherence_and_variance(snr_db_to_linear(snr_db));
    const DesignMatrices dm = build_design_matrices(config);
    const Eigen::MatrixXd Q = build_covariance(config, nm.phase_variance);
    const Eigen::MatrixXd Qi = Q.llt().solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
    const Eigen::Matrix2d fisher = dm.B.transpose() * Qi * dm.B;
    return std::sqrt(fisher.inverse().trace());
}

}  // namespace inisar

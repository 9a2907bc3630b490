#pragma once

#include <cstdint>
#include <vector>

#include "inisar/model.hpp"
#include "inisar/rng.hpp"
#include "inisar/solver.hpp"

namespace inisar {

/// Calibration cannot reach the requested conditional failure rate at this SNR.
struct TargetUnreachable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One Monte Carlo draw with full solver output.
struct TrialRecord {
    Eigen::Vector2d true_xi = Eigen::Vector2d::Zero();  // (xi1, xi3)
    Eigen::VectorXi true_a;
    MilsSolution solution;
    bool admissible = false;  // false when the admissible set came up empty
    bool correct = false;     // a_hat == true_a componentwise
};

/// Compact per-trial results of one (config, SNR) pool; parallel arrays
/// indexed by trial number.
struct TrialPool {
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> ap;
    std::vector<double> err_sq;  // squared (xi1, xi3) position error
    std::vector<std::uint8_t> correct;
    std::vector<std::uint8_t> admissible;
    std::size_t size() const { return ap.size(); }
};

struct PerformanceCell {
    double accr = 0.0;
    double cofar = 0.0;
    bool discarded = false;  // AccR < 10%, or no accepted trials
};

/// AccR/CoFaR tabulated over (SNR, AP threshold); one shared trial pool per SNR.
struct PerformanceGrid {
    std::vector<double> snr_db_axis;
    std::vector<double> threshold_axis;
    std::vector<std::vector<PerformanceCell>> cells;  // [snr][threshold]
    std::size_t n_trials = 0;
};

struct RocPoint {
    double threshold = 0.0;
    double accr = 0.0;
    double cofar = 0.0;
};

struct CalibrationResult {
    double snr_db = 0.0;
    double ap_thr = 0.0;
    double achieved_accr = 0.0;
    double achieved_cofar = 0.0;
    double target_cofar = 0.0;
};

/// Piecewise-linear AP_thr(SNR) lookup for the fixed-CoFaR strategy,
/// clamped at the SNR axis ends.
struct ThresholdTable {
    double target_cofar = 0.0;
    std::vector<CalibrationResult> entries;  // sorted by snr_db
    double threshold_at(double snr_db) const;
};

/// Shared per-(config, SNR) machinery for drawing and solving trials.
/// One instance serves any number of trials concurrently.
class TrialSimulator {
public:
    /// noise_scale is 1 for the physical model; 0 injects sigma_phi = 0
    /// draws (noiseless) while keeping the solver covariance intact.
    TrialSimulator(const SystemConfig& config, double snr_db, double noise_scale = 1.0);

    TrialRecord run(std::uint64_t master_seed, std::uint64_t trial_index) const;

    const MilsSolver& solver() const { return solver_; }
    double sigma_phi() const { return sigma_phi_; }

private:
    Eigen::MatrixXd B_;
    Eigen::MatrixXd noise_chol_;  // lower Cholesky factor of Q_yy
    MilsSolver solver_;
    double half_box_;
    double sigma_phi_;
    double noise_scale_;
};

/// Single draw + solve; convenience wrapper around TrialSimulator.
TrialRecord simulate_trial(const SystemConfig& config, double snr_db,
                           std::uint64_t master_seed, std::uint64_t trial_index);

/// Runs n_trials independent draws (OpenMP across trials; results are
/// bit-identical for any worker count). num_threads 0 keeps the runtime default.
TrialPool run_pool(const SystemConfig& config, double snr_db, std::size_t n_trials,
                   std::uint64_t seed, int num_threads = 0);

PerformanceGrid performance_grid(const SystemConfig& config,
                                 const std::vector<double>& snr_db_list,
                                 const std::vector<double>& threshold_list,
                                 std::size_t n_trials, std::uint64_t seed);

/// Threshold sweep over one pool: 200 uniform grid points plus every observed
/// AP value; returned sorted by AccR.
std::vector<RocPoint> roc_curve(const SystemConfig& config, double snr_db,
                                std::size_t n_trials, std::uint64_t seed);

/// Smallest threshold whose empirical CoFaR meets the target with AccR >= 10%.
/// Throws TargetUnreachable when no threshold qualifies.
CalibrationResult calibrate_threshold(const SystemConfig& config, double snr_db,
                                      double target_cofar, std::size_t n_trials,
                                      std::uint64_t seed);

ThresholdTable calibrate_table(const SystemConfig& config,
                               const std::vector<double>& snr_db_list,
                               double target_cofar, std::size_t n_trials,
                               std::uint64_t seed);

/// sqrt(trace((B^T Q^{-1} B)^{-1})): predicted position RMSE given correct
/// unwrapping.
double predicted_position_rmse(const SystemConfig& config, double snr_db);

/// AccR and CoFaR of a pool at one threshold (derived metrics used by the
/// grid, ROC, and calibration paths).
PerformanceCell evaluate_pool(const TrialPool& pool, double threshold);

}  // namespace inisar

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inisar/montecarlo.hpp"
#include "inisar/scene.hpp"

namespace inisar {

// Fixed-width numeric formatting so reruns diff cleanly:
// probabilities 6 decimals, meters 4, radians 6.
std::string fmt_prob(double v);
std::string fmt_m(double v);
std::string fmt_rad(double v);

/// Point-cloud CSV, columns: xi1_m, xi2_m, xi3_m, snr_db.
void write_points_csv(const std::string& path, const TargetScene& scene);
TargetScene read_points_csv(const std::string& path);

/// Wrapped-phase CSV: one column per channel, in config order. Validates
/// column count and the [-pi, pi) range, reporting the offending row.
std::vector<Eigen::VectorXd> read_phases_csv(const std::string& path, int num_channels);

/// Per-row solver output: k_hat per channel, xi1_m, xi3_m, cost, ap, accepted.
void write_solutions_csv(const std::string& path, const std::vector<MilsSolution>& solutions,
                         const std::vector<bool>& accepted);

/// grid.csv columns: snr_db, ap_thr, accr, cofar, n_trials, discarded.
void write_grid_csv(const std::string& path, const PerformanceGrid& grid);

/// roc.csv columns: snr_db, accr, cofar.
void write_roc_csv(const std::string& path, double snr_db, const std::vector<RocPoint>& curve);

/// thresholds.csv columns: snr_db, ap_thr, achieved_cofar, achieved_accr, target_cofar.
void write_thresholds_csv(const std::string& path, const std::vector<CalibrationResult>& rows);

/// report.json mirroring ReconstructionReport, plus the per-scatterer CSV
/// (truth, estimate, ap, accepted, correct, k_true..., k_hat...).
void write_report_json(const std::string& path, const ReconstructionReport& report);
void write_scatterers_csv(const std::string& path, const ReconstructionReport& report);

/// Run provenance emitted alongside every CLI output set.
struct RunManifest {
    std::string command;
    std::string config_json;  // resolved configuration, inline
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::string tool_version;
    double wall_seconds = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace inisar

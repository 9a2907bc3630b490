#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inisar/model.hpp"
#include "inisar/montecarlo.hpp"
#include "inisar/solver.hpp"

namespace inisar {

struct SceneScatterer {
    ScattererCoords coords;
    double snr_db = 25.0;
};

struct TargetScene {
    std::vector<SceneScatterer> scatterers;
    double length_m = 0.0;  // xi1 extent
    double width_m = 0.0;   // xi2 extent
    double height_m = 0.0;  // xi3 extent
    std::string label;
};

/// One scatterer's synthesized observation with its ground truth.
struct SceneObservation {
    MilsProblem problem;
    Eigen::VectorXi true_a;
    ScattererCoords truth;
    double snr_db = 0.0;
};

enum class ReconstructionMode { no_unwrap, before_ar, after_ar };

std::string to_string(ReconstructionMode mode);
ReconstructionMode reconstruction_mode_from_string(const std::string& s);

struct ScattererResult {
    ScattererCoords truth;
    ScattererCoords estimate;  // xi2 copied from truth, never estimated
    double ap = 0.0;
    double cost = 0.0;
    bool accepted = false;
    bool correct = false;
    Eigen::VectorXi k_true;
    Eigen::VectorXi k_hat;
};

struct ReconstructionReport {
    ReconstructionMode mode = ReconstructionMode::before_ar;
    double accepted_pct = 0.0;
    double correct_pct = 0.0;      // among accepted
    double rmse_all_m = 0.0;       // over accepted scatterers
    double rmse_correct_m = 0.0;   // over accepted and correctly unwrapped
    std::vector<ScattererResult> scatterers;
};

/// Procedural ship point cloud: hull with a tapered bow, a deckhouse block,
/// and a mast line, scaled to (length, width, height) and centered at the
/// origin. Exactly n_points scatterers, reproducible from the seed.
TargetScene generate_ship_target(std::uint64_t seed, std::size_t n_points,
                                 double length_m, double width_m, double height_m,
                                 double snr_db = 25.0);

/// Synthesizes wrapped noisy phases for every scatterer and records the true
/// wrap integers. Throws InputError for scatterers outside the config box.
std::vector<SceneObservation> synthesize_phases(const TargetScene& scene,
                                                const SystemConfig& config,
                                                std::uint64_t seed);

/// Runs one reconstruction mode over all scatterers. ap_thr is used only in
/// after_ar mode; pass a ThresholdTable instead for per-scatterer-SNR
/// thresholds (fixed-CoFaR strategy).
ReconstructionReport reconstruct(const std::vector<SceneObservation>& observations,
                                 const SystemConfig& config, ReconstructionMode mode,
                                 double ap_thr = 0.0);

ReconstructionReport reconstruct(const std::vector<SceneObservation>& observations,
                                 const SystemConfig& config, ReconstructionMode mode,
                                 const ThresholdTable& thresholds);

}  // namespace inisar

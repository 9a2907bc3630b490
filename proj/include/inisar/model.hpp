#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace inisar {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Invalid sensor configuration (bad geometry, rank deficiency, non-SPD covariance).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range user input (files, CLI values).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One interferometric phase-difference measurement channel: an antenna pair
/// at one frequency subband. Channels at the same frequency that share an
/// antenna (same `antenna_group`) are treated as correlated.
struct InterferometricChannel {
    double frequency_hz = 0.0;
    Eigen::Vector2d baseline_m = Eigen::Vector2d::Zero();  // [d1 horizontal, d3 vertical]
    std::string antenna_group;
};

/// Sensor geometry and the prior box on target size. Immutable after
/// construction; construction validates all invariants, including full
/// column rank of the stacked baseline design matrix.
class SystemConfig {
public:
    SystemConfig(std::vector<InterferometricChannel> channels,
                 double range_m, double max_target_length_m);

    const std::vector<InterferometricChannel>& channels() const { return channels_; }
    double range_m() const { return range_m_; }
    double max_target_length_m() const { return max_target_length_m_; }
    double half_box_m() const { return max_target_length_m_ / 2.0; }
    int num_channels() const { return static_cast<int>(channels_.size()); }

    static SystemConfig from_json(const std::string& json_text);
    static SystemConfig from_json_file(const std::string& path);
    std::string to_json() const;

private:
    std::vector<InterferometricChannel> channels_;
    double range_m_;
    double max_target_length_m_;
};

/// SNR-driven noise description of a single channel.
struct NoiseModel {
    double snr_linear = 0.0;
    double coherence = 0.0;           // gamma in (0, 1]
    double phase_variance = 0.0;      // sigma_phi^2, rad^2
    double phase_std() const;
};

/// Scatterer position. xi2 (down-range) is carried through but never
/// estimated; the solver fills only (xi1, xi3).
struct ScattererCoords {
    double xi1 = 0.0;  // horizontal cross-range, m
    double xi2 = 0.0;  // down-range, m
    double xi3 = 0.0;  // height, m
};

struct DesignMatrices {
    Eigen::MatrixXd A;  // m x m, equals 2*pi*I
    Eigen::MatrixXd B;  // m x 2, row alpha = (4*pi*f_a / (R0*c)) * [d_a1, d_a3]
};

/// Builds the stacked phase-model design matrices for all channels.
DesignMatrices build_design_matrices(const SystemConfig& config);

/// Maximum unambiguous height of a single channel: c*R0 / (2*f*||d||).
double unambiguous_height(const InterferometricChannel& channel, double range_m);

/// Coherence and phase variance from linear SNR:
/// gamma = 1/(1 + 1/SNR), sigma_phi^2 = (1 - gamma^2) / (2*gamma^2).
NoiseModel coherence_and_variance(double snr_linear);

double snr_db_to_linear(double snr_db);

/// Measurement covariance: sigma_phi^2 on the diagonal, sigma_phi^2/2 between
/// channels at the same frequency sharing an antenna group, 0 otherwise.
Eigen::MatrixXd build_covariance(const SystemConfig& config, double sigma_phi_sq);

/// Wraps into the half-open interval [-pi, pi); +pi maps to -pi.
double wrap_phase(double phi);

}  // namespace inisar

#include "inisar/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace inisar {

namespace {

void validate_channel(const InterferometricChannel& ch, int index) {
    if (!(ch.frequency_hz > 0.0)) {
        throw ConfigError("channel " + std::to_string(index) + ": frequency must be > 0");
    }
    if (ch.baseline_m.norm() == 0.0) {
        throw ConfigError("channel " + std::to_string(index) + ": baseline is the zero vector");
    }
}

Eigen::MatrixXd baseline_design(const std::vector<InterferometricChannel>& channels,
                                double range_m) {
    const int m = static_cast<int>(channels.size());
    Eigen::MatrixXd B(m, 2);
    for (int a = 0; a < m; ++a) {
        const double scale = 4.0 * M_PI * channels[a].frequency_hz / (range_m * kSpeedOfLight);
        B.row(a) = scale * channels[a].baseline_m.transpose();
    }
    return B;
}

}  // namespace

SystemConfig::SystemConfig(std::vector<InterferometricChannel> channels,
                           double range_m, double max_target_length_m)
    : channels_(std::move(channels)),
      range_m_(range_m),
      max_target_length_m_(max_target_length_m) {
    if (channels_.size() < 2) {
        throw ConfigError("at least 2 interferometric channels are required");
    }
    if (!(range_m_ > 0.0)) throw ConfigError("range must be > 0");
    if (!(max_target_length_m_ > 0.0)) throw ConfigError("max target length must be > 0");
    for (int i = 0; i < static_cast<int>(channels_.size()); ++i) {
        validate_channel(channels_[i], i);
    }
    const Eigen::MatrixXd B = baseline_design(channels_, range_m_);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
    if (svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0)) {
        throw ConfigError("baselines do not span the (horizontal, vertical) plane: "
                          "design matrix is rank deficient");
    }
}

SystemConfig SystemConfig::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config JSON parse error: ") + e.what());
    }
    try {
        std::vector<InterferometricChannel> channels;
        for (const auto& jc : j.at("channels")) {
            InterferometricChannel ch;
            ch.frequency_hz = jc.at("frequency_hz").get<double>();
            const auto& b = jc.at("baseline_m");
            if (b.size() != 2) throw InputError("baseline_m must have 2 components");
            ch.baseline_m << b[0].get<double>(), b[1].get<double>();
            ch.antenna_group = jc.at("antenna_group").get<std::string>();
            channels.push_back(std::move(ch));
        }
        return SystemConfig(std::move(channels),
                            j.at("range_m").get<double>(),
                            j.at("max_target_length_m").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config JSON schema error: ") + e.what());
    }
}

SystemConfig SystemConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string SystemConfig::to_json() const {
    nlohmann::json j;
    j["range_m"] = range_m_;
    j["max_target_length_m"] = max_target_length_m_;
    j["channels"] = nlohmann::json::array();
    for (const auto& ch : channels_) {
        j["channels"].push_back({
            {"frequency_hz", ch.frequency_hz},
            {"baseline_m", {ch.baseline_m(0), ch.baseline_m(1)}},
            {"antenna_group", ch.antenna_group},
        });
    }
    return j.dump(2);
}

double NoiseModel::phase_std() const { return std::sqrt(phase_variance); }

DesignMatrices build_design_matrices(const SystemConfig& config) {
    const int m = config.num_channels();
    DesignMatrices dm;
    dm.A = 2.0 * M_PI * Eigen::MatrixXd::Identity(m, m);
    dm.B = baseline_design(config.channels(), config.range_m());
    return dm;
}

double unambiguous_height(const InterferometricChannel& channel, double range_m) {
    if (!(range_m > 0.0)) throw ConfigError("range must be > 0");
    validate_channel(channel, 0);
    return kSpeedOfLight * range_m / (2.0 * channel.frequency_hz * channel.baseline_m.norm());
}

NoiseModel coherence_and_variance(double snr_linear) {
    if (!(snr_linear > 0.0)) throw std::domain_error("SNR must be > 0");
    NoiseModel nm;
    nm.snr_linear = snr_linear;
    nm.coherence = 1.0 / (1.0 + 1.0 / snr_linear);
    const double g2 = nm.coherence * nm.coherence;
    nm.phase_variance = (1.0 - g2) / (2.0 * g2);
    return nm;
}

double snr_db_to_linear(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

Eigen::MatrixXd build_covariance(const SystemConfig& config, double sigma_phi_sq) {
    if (!(sigma_phi_sq > 0.0)) throw std::domain_error("sigma_phi^2 must be > 0");
    const auto& chans = config.channels();
    const int m = config.num_channels();
    Eigen::MatrixXd Q = sigma_phi_sq * Eigen::MatrixXd::Identity(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            if (chans[a].frequency_hz == chans[b].frequency_hz &&
                chans[a].antenna_group == chans[b].antenna_group) {
                Q(a, b) = Q(b, a) = sigma_phi_sq / 2.0;
            }
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) {
        throw ConfigError("covariance matrix is not positive definite");
    }
    return Q;
}

double wrap_phase(double phi) {
    double w = std::remainder(phi, 2.0 * M_PI);  // (-pi, pi]
    if (w >= M_PI) w -= 2.0 * M_PI;              // map +pi to -pi
    return w;
}

}  // namespace inisar

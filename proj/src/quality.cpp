#include "inisar/quality.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace inisar {

double ambiguity_posterior(std::span<const CandidateEvaluation> candidates,
                           const Eigen::VectorXi& a_hat) {
    if (candidates.empty()) throw std::invalid_argument("empty candidate set");
    double min_cost = std::numeric_limits<double>::infinity();
    const CandidateEvaluation* hat = nullptr;
    for (const auto& c : candidates) {
        min_cost = std::min(min_cost, c.cost);
        if (c.a == a_hat) hat = &c;
    }
    if (!hat) throw std::invalid_argument("a_hat is not in the candidate set");
    double denom = 0.0;
    for (const auto& c : candidates) {
        denom += std::exp(-0.5 * (c.cost - min_cost));
    }
    return std::exp(-0.5 * (hat->cost - min_cost)) / denom;
}

ApDecision accept(double ap, double threshold) {
    if (!(ap >= 0.0 && ap <= 1.0)) throw std::domain_error("ap must be in [0, 1]");
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw std::domain_error("threshold must be in [0, 1]");
    }
    return ApDecision{ap, threshold, ap >= threshold};
}

}  // namespace inisar

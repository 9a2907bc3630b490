#pragma once

#include <span>

#include "inisar/solver.hpp"

namespace inisar {

struct ApDecision {
    double ap = 0.0;
    double threshold = 0.0;
    bool accepted = false;
};

/// Posterior probability of `a_hat` over the admissible candidate set:
/// exp(-cost/2) normalized across the set. Evaluated in the log domain
/// (shift by the minimum cost) so large cost spreads cannot underflow.
double ambiguity_posterior(std::span<const CandidateEvaluation> candidates,
                           const Eigen::VectorXi& a_hat);

/// Accept/reject test on the ambiguity posterior; the boundary ap == threshold accepts.
ApDecision accept(double ap, double threshold);

}  // namespace inisar

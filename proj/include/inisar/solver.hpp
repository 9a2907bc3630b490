#pragma once

#include <Eigen/Dense>
#include <vector>

#include "inisar/model.hpp"

namespace inisar {

/// Thrown by solve() when no integer candidate maps into the position box.
struct NoAdmissibleSolution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One per-scatterer estimation instance.
struct MilsProblem {
    Eigen::VectorXd y;     // wrapped phases, each in [-pi, pi)
    Eigen::MatrixXd A;     // 2*pi*I
    Eigen::MatrixXd B;     // m x 2
    Eigen::MatrixXd Q_yy;  // m x m SPD
    double half_box_m = 0.0;
};

struct CandidateEvaluation {
    Eigen::VectorXi a;
    Eigen::Vector2d b_of_a = Eigen::Vector2d::Zero();
    double cost = 0.0;
    bool in_box = false;
};

struct MilsSolution {
    Eigen::VectorXi a_hat;
    ScattererCoords b_hat;            // xi2 left at 0, never estimated
    double cost_min = 0.0;
    double ap = 0.0;                  // ambiguity posterior of a_hat over the admissible set
    long n_admissible = 0;
    std::vector<CandidateEvaluation> candidates;  // admissible set; filled only on request
};

/// Per-channel integer search bound from the target-size box and the
/// 5-sigma noise bound:
/// k_max = ceil( (1/2pi) * (pi + 4*pi*f*(|d1|+|d3|)*Lmax / (2*R0*c) + 5*sigma_phi) ).
std::vector<int> integer_bounds(const SystemConfig& config, double sigma_phi);

/// Conditional estimate of the real parameters for a fixed integer vector,
/// with the residual cost of that pair. Computed on whitened quantities.
std::pair<Eigen::Vector2d, double> conditional_real_estimate(const MilsProblem& problem,
                                                             const Eigen::VectorXi& a);

/// Precomputed whitened factorization of one (B, Q_yy, box, bounds) geometry,
/// reusable across every observation vector sharing it. solve() is const and
/// thread-safe; distinct scatterers may be solved concurrently on one instance.
class MilsSolver {
public:
    MilsSolver(const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q_yy,
               double half_box_m, std::vector<int> k_max);

    /// Exhaustive enumeration of the integer box; among candidates whose
    /// conditional position lands in the box, returns the minimum-cost pair
    /// together with its ambiguity posterior. Ties break toward the smallest
    /// L1 norm, then lexicographic order.
    MilsSolution solve(const Eigen::VectorXd& y, bool retain_candidates = false) const;

    const std::vector<int>& k_max() const { return k_max_; }
    long num_enumerated() const;
    const Eigen::Matrix2d& fisher_inverse() const { return fisher_inv_; }

private:
    int m_;
    double half_box_;
    std::vector<int> k_max_;
    Eigen::MatrixXd lw_;         // lower Cholesky factor of Q_yy
    Eigen::MatrixXd aw_;         // m x m, columns = 2*pi * L^{-1} e_j
    Eigen::MatrixXd bw_;         // m x 2, whitened B
    Eigen::MatrixXd gain_;       // 2 x m, (Bw^T Bw)^{-1} Bw^T
    Eigen::MatrixXd proj_;       // m x m residual projector I - Bw * gain
    Eigen::VectorXd w_last_;     // whitened integer column of the innermost axis
    Eigen::Vector2d gain_w_;     // gain * w_last
    double quad_w_ = 0.0;        // w_last^T proj * w_last
    Eigen::Matrix2d fisher_inv_; // (B^T Q^{-1} B)^{-1}
};

/// Convenience wrapper: builds the factorization for one problem and solves it.
MilsSolution solve(const MilsProblem& problem, const std::vector<int>& k_max,
                   bool retain_candidates = false);

/// Serial reference implementation: evaluates every candidate through
/// conditional_real_estimate with no shared factorization or incremental
/// updates. Kept for cross-checking the fast kernel; always retains the
/// admissible set.
MilsSolution solve_reference(const MilsProblem& problem, const std::vector<int>& k_max);

}  // namespace inisar

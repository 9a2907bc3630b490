#include "inisar/solver.hpp"

#include <cmath>
#include <limits>

#include "inisar/quality.hpp"

namespace inisar {

namespace {

// Smaller L1 norm first, then lexicographic. Used only on exact cost ties.
bool tie_break_before(const Eigen::VectorXi& lhs, const Eigen::VectorXi& rhs) {
    const long l1l = lhs.cwiseAbs().sum();
    const long l1r = rhs.cwiseAbs().sum();
    if (l1l != l1r) return l1l < l1r;
    for (int i = 0; i < lhs.size(); ++i) {
        if (lhs(i) != rhs(i)) return lhs(i) < rhs(i);
    }
    return false;
}

void validate_problem(const MilsProblem& p, bool check_y_range = true) {
    const int m = static_cast<int>(p.y.size());
    if (m < 2) throw ConfigError("problem needs at least 2 channels");
    if (p.A.rows() != m || p.A.cols() != m || p.B.rows() != m || p.B.cols() != 2 ||
        p.Q_yy.rows() != m || p.Q_yy.cols() != m) {
        throw ConfigError("inconsistent problem dimensions");
    }
    if (!p.A.isApprox(2.0 * M_PI * Eigen::MatrixXd::Identity(m, m), 1e-12)) {
        throw ConfigError("integer design matrix must be 2*pi*I");
    }
    if (!(p.half_box_m > 0.0)) throw ConfigError("position box must be positive");
    if (!check_y_range) return;
    for (int i = 0; i < m; ++i) {
        if (!(p.y(i) >= -M_PI && p.y(i) < M_PI)) {
            throw InputError("phase outside [-pi, pi) at component " + std::to_string(i));
        }
    }
}

}  // namespace

std::vector<int> integer_bounds(const SystemConfig& config, double sigma_phi) {
    if (!(sigma_phi >= 0.0)) throw std::domain_error("sigma_phi must be >= 0");
    std::vector<int> bounds;
    bounds.reserve(config.channels().size());
    for (const auto& ch : config.channels()) {
        const double spread = 4.0 * M_PI * ch.frequency_hz *
                              (std::abs(ch.baseline_m(0)) + std::abs(ch.baseline_m(1))) *
                              config.max_target_length_m() /
                              (2.0 * config.range_m() * kSpeedOfLight);
        const double raw = (M_PI + spread + 5.0 * sigma_phi) / (2.0 * M_PI);
        bounds.push_back(static_cast<int>(std::ceil(raw)));
    }
    return bounds;
}

std::pair<Eigen::Vector2d, double> conditional_real_estimate(const MilsProblem& problem,
                                                             const Eigen::VectorXi& a) {
    validate_problem(problem, /*check_y_range=*/false);
    if (a.size() != problem.y.size()) throw ConfigError("integer vector has wrong length");
    Eigen::LLT<Eigen::MatrixXd> llt(problem.Q_yy);
    if (llt.info() != Eigen::Success) throw ConfigError("Q_yy is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    const auto lower = L.triangularView<Eigen::Lower>();
    const Eigen::VectorXd rw =
        lower.solve(problem.y - problem.A * a.cast<double>());
    const Eigen::MatrixXd bw = lower.solve(problem.B);
    const Eigen::Matrix2d fisher = bw.transpose() * bw;
    if (std::abs(fisher.determinant()) < 1e-14 * fisher.trace() * fisher.trace()) {
        throw ConfigError("B^T Q^{-1} B is singular");
    }
    const Eigen::Vector2d b = fisher.inverse() * (bw.transpose() * rw);
    const double cost = (rw - bw * b).squaredNorm();
    return {b, cost};
}

MilsSolver::MilsSolver(const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q_yy,
                       double half_box_m, std::vector<int> k_max)
    : m_(static_cast<int>(B.rows())), half_box_(half_box_m), k_max_(std::move(k_max)) {
    if (m_ < 2 || B.cols() != 2) throw ConfigError("B must be m x 2 with m >= 2");
    if (Q_yy.rows() != m_ || Q_yy.cols() != m_) throw ConfigError("Q_yy dimension mismatch");
    if (static_cast<int>(k_max_.size()) != m_) throw ConfigError("k_max dimension mismatch");
    if (!(half_box_ > 0.0)) throw ConfigError("position box must be positive");
    for (int k : k_max_) {
        if (k < 0) throw ConfigError("integer bounds must be non-negative");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Q_yy);
    if (llt.info() != Eigen::Success) throw ConfigError("Q_yy is not positive definite");
    lw_ = llt.matrixL();
    const auto lower = lw_.triangularView<Eigen::Lower>();
    bw_ = lower.solve(B);
    aw_ = 2.0 * M_PI * lower.solve(Eigen::MatrixXd::Identity(m_, m_));
    const Eigen::Matrix2d fisher = bw_.transpose() * bw_;
    if (std::abs(fisher.determinant()) < 1e-14 * fisher.trace() * fisher.trace()) {
        throw ConfigError("B^T Q^{-1} B is singular: baselines do not span the plane");
    }
    fisher_inv_ = fisher.inverse();
    gain_ = fisher_inv_ * bw_.transpose();
    proj_ = Eigen::MatrixXd::Identity(m_, m_) - bw_ * gain_;
    w_last_ = aw_.col(m_ - 1);
    gain_w_ = gain_ * w_last_;
    quad_w_ = w_last_.dot(proj_ * w_last_);
}

long MilsSolver::num_enumerated() const {
    long n = 1;
    for (int k : k_max_) n *= 2L * k + 1;
    return n;
}

MilsSolution MilsSolver::solve(const Eigen::VectorXd& y, bool retain_candidates) const {
    if (y.size() != m_) throw ConfigError("observation dimension mismatch");
    const Eigen::VectorXd yw = lw_.triangularView<Eigen::Lower>().solve(y);

    const int last = m_ - 1;
    const int k_last = k_max_[last];
    Eigen::VectorXi a(m_);
    for (int j = 0; j < last; ++j) a(j) = -k_max_[j];

    MilsSolution sol;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXi best_a;
    double lse_sum = 0.0;  // sum over admissible candidates of exp(-(cost - best)/2)
    long n_adm = 0;
    const double box = half_box_ + 1e-9;
    const double gw1 = gain_w_(0), gw2 = gain_w_(1);

    Eigen::VectorXd rp(m_), u(m_);
    for (;;) {
        // residual at the start of the innermost axis: r(t) = rp - t * w_last
        rp = yw;
        for (int j = 0; j < last; ++j) {
            if (a(j) != 0) rp.noalias() -= static_cast<double>(a(j)) * aw_.col(j);
        }
        u.noalias() = proj_ * rp;
        const double c0 = rp.dot(u);
        const double lin = w_last_.dot(u);
        const double b01 = gain_.row(0).dot(rp);
        const double b02 = gain_.row(1).dot(rp);

        for (int t = -k_last; t <= k_last; ++t) {
            const double td = static_cast<double>(t);
            const double b1 = b01 - td * gw1;
            const double b2 = b02 - td * gw2;
            if (b1 > box || b1 < -box || b2 > box || b2 < -box) continue;
            const double c = c0 - 2.0 * td * lin + td * td * quad_w_;
            ++n_adm;
            if (retain_candidates) {
                CandidateEvaluation ev;
                ev.a = a;
                ev.a(last) = t;
                ev.b_of_a << b1, b2;
                ev.cost = c;
                ev.in_box = true;
                sol.candidates.push_back(std::move(ev));
            }
            if (c < best) {
                // rescale the log-sum-exp accumulator to the new minimum
                lse_sum = lse_sum * std::exp(-0.5 * (best - c)) + 1.0;
                best = c;
                best_a = a;
                best_a(last) = t;
            } else {
                const double d = c - best;
                if (d < 1400.0) lse_sum += std::exp(-0.5 * d);
                if (d == 0.0) {
                    Eigen::VectorXi cand = a;
                    cand(last) = t;
                    if (tie_break_before(cand, best_a)) best_a = std::move(cand);
                }
            }
        }

        int j = last - 1;
        while (j >= 0) {
            if (++a(j) <= k_max_[j]) break;
            a(j) = -k_max_[j];
            --j;
        }
        if (j < 0) break;
    }

    if (n_adm == 0) {
        throw NoAdmissibleSolution("no integer candidate maps into the position box");
    }

    rp = yw;
    for (int j = 0; j < m_; ++j) {
        if (best_a(j) != 0) rp.noalias() -= static_cast<double>(best_a(j)) * aw_.col(j);
    }
    const Eigen::Vector2d b = gain_ * rp;
    sol.a_hat = std::move(best_a);
    sol.b_hat = ScattererCoords{b(0), 0.0, b(1)};
    sol.cost_min = best;
    sol.ap = 1.0 / lse_sum;
    sol.n_admissible = n_adm;
    return sol;
}

MilsSolution solve(const MilsProblem& problem, const std::vector<int>& k_max,
                   bool retain_candidates) {
    validate_problem(problem);
    MilsSolver solver(problem.B, problem.Q_yy, problem.half_box_m, k_max);
    return solver.solve(problem.y, retain_candidates);
}

MilsSolution solve_reference(const MilsProblem& problem, const std::vector<int>& k_max) {
    validate_problem(problem);
    const int m = static_cast<int>(problem.y.size());
    if (static_cast<int>(k_max.size()) != m) throw ConfigError("k_max dimension mismatch");

    MilsSolution sol;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXi best_a;
    const double box = problem.half_box_m + 1e-9;

    Eigen::VectorXi a(m);
    for (int j = 0; j < m; ++j) a(j) = -k_max[j];
    for (;;) {
        auto [b, cost] = conditional_real_estimate(problem, a);
        const bool in_box = std::abs(b(0)) <= box && std::abs(b(1)) <= box;
        if (in_box) {
            sol.candidates.push_back(CandidateEvaluation{a, b, cost, true});
            if (cost < best || (cost == best && tie_break_before(a, best_a))) {
                best = cost;
                best_a = a;
                sol.b_hat = ScattererCoords{b(0), 0.0, b(1)};
            }
        }
        int j = m - 1;
        while (j >= 0) {
            if (++a(j) <= k_max[j]) break;
            a(j) = -k_max[j];
            --j;
        }
        if (j < 0) break;
    }
    if (sol.candidates.empty()) {
        throw NoAdmissibleSolution("no integer candidate maps into the position box");
    }
    sol.a_hat = best_a;
    sol.cost_min = best;
    sol.n_admissible = static_cast<long>(sol.candidates.size());
    sol.ap = ambiguity_posterior(sol.candidates, sol.a_hat);
    return sol;
}

}  // namespace inisar

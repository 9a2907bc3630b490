#include <doctest.h>

#include <cmath>

#include "inisar/quality.hpp"
#include "inisar/solver.hpp"
#include "test_util.hpp"

using namespace inisar;

namespace {

MilsSolver make_solver(const SystemConfig& config, double snr_db) {
    const auto nm = coherence_and_variance(snr_db_to_linear(snr_db));
    const auto dm = build_design_matrices(config);
    return MilsSolver(dm.B, build_covariance(config, nm.phase_variance), config.half_box_m(),
                      integer_bounds(config, nm.phase_std()));
}

}  // namespace

TEST_CASE("integer bounds reproduce the case-study box") {
    const auto config = testutil::case_study();
    const double sigma = coherence_and_variance(snr_db_to_linear(25.0)).phase_std();
    const auto bounds = integer_bounds(config, sigma);
    REQUIRE(bounds.size() == 4);
    for (int b : bounds) CHECK(b == 10);
}

TEST_CASE("integer bound degenerates to 1 for a vanishing target and zero noise") {
    const auto config = testutil::case_study_small_box(1e-9);
    for (int b : integer_bounds(config, 0.0)) CHECK(b == 1);
}

TEST_CASE("raw integer bound before ceiling") {
    // direct evaluation of the bound expression for the f2 channels at 25 dB
    const double sigma = coherence_and_variance(snr_db_to_linear(25.0)).phase_std();
    const double raw = 0.5 + 10.2e9 * 2.0 * 200.0 / (1500.0 * kSpeedOfLight) +
                       5.0 * sigma / (2.0 * M_PI);
    CHECK(raw == doctest::Approx(9.6177).epsilon(1e-3));
    CHECK(std::ceil(raw) == 10.0);
}

TEST_CASE("conditional estimate recovers the truth on noiseless data") {
    const auto config = testutil::case_study();
    TrialRng rng(21, 0);
    for (int it = 0; it < 20; ++it) {
        const Eigen::Vector2d xi(rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0));
        auto [y, a_true] = testutil::draw_observation(config, xi, 0.0, rng);
        const auto problem = testutil::make_problem(config, y, 3.2e-3);
        auto [b, cost] = conditional_real_estimate(problem, a_true);
        CHECK(b(0) == doctest::Approx(xi(0)).epsilon(1e-9));
        CHECK(b(1) == doctest::Approx(xi(1)).epsilon(1e-9));
        CHECK(cost == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("wrap-shift equivariance of the cost: L(a+m | y+2*pi*m) == L(a | y)") {
    const auto config = testutil::case_study();
    TrialRng rng(22, 0);
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd y(4);
        Eigen::VectorXi a(4), m(4);
        for (int i = 0; i < 4; ++i) {
            y(i) = rng.uniform(-M_PI, M_PI);
            a(i) = static_cast<int>(rng.uniform(-5.0, 5.0));
            m(i) = static_cast<int>(rng.uniform(-5.0, 5.0));
        }
        auto problem = testutil::make_problem(config, y, 3.2e-3);
        auto [b1, c1] = conditional_real_estimate(problem, a);
        problem.y = y + 2.0 * M_PI * m.cast<double>();
        auto [b2, c2] = conditional_real_estimate(problem, a + m);
        CHECK(c2 == doctest::Approx(c1).epsilon(1e-12));
        CHECK(b2.isApprox(b1, 1e-10));
    }
}

TEST_CASE("Fisher matrix anchor for the case study at 25 dB") {
    const auto solver = make_solver(testutil::case_study(), 25.0);
    CHECK(solver.fisher_inverse().trace() == doctest::Approx(0.0101358).epsilon(1e-4));
    CHECK(std::sqrt(solver.fisher_inverse()(0, 0)) == doctest::Approx(0.07119).epsilon(1e-3));
}

TEST_CASE("noiseless solve recovers position and wrap integers exactly") {
    const auto config = testutil::case_study();
    const auto solver = make_solver(config, 25.0);
    TrialRng rng(23, 0);

    SUBCASE("scatterer at (30, 7) m") {
        auto [y, a_true] = testutil::draw_observation(config, {30.0, 7.0}, 0.0, rng);
        const auto sol = solver.solve(y);
        CHECK(sol.a_hat == a_true);
        CHECK(sol.b_hat.xi1 == doctest::Approx(30.0).epsilon(1e-9));
        CHECK(sol.b_hat.xi3 == doctest::Approx(7.0).epsilon(1e-9));
        CHECK(sol.cost_min == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("scatterer at the origin") {
        auto [y, a_true] = testutil::draw_observation(config, {0.0, 0.0}, 0.0, rng);
        const auto sol = solver.solve(y);
        CHECK(sol.a_hat.isZero());
        CHECK(sol.b_hat.xi1 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(sol.b_hat.xi3 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(sol.cost_min == doctest::Approx(0.0));
    }
}

TEST_CASE("noiseless completeness over an 11x11 grid of the box") {
    const auto config = testutil::case_study();
    const auto solver = make_solver(config, 25.0);
    TrialRng rng(24, 0);
    for (int i = 0; i <= 10; ++i) {
        for (int j = 0; j <= 10; ++j) {
            const Eigen::Vector2d xi(-100.0 + 20.0 * i, -100.0 + 20.0 * j);
            auto [y, a_true] = testutil::draw_observation(config, xi, 0.0, rng);
            const auto sol = solver.solve(y);
            REQUIRE(sol.a_hat == a_true);
            REQUIRE(sol.b_hat.xi1 == doctest::Approx(xi(0)).epsilon(1e-8));
            REQUIRE(sol.b_hat.xi3 == doctest::Approx(xi(1)).epsilon(1e-8));
        }
    }
}

TEST_CASE("fast kernel agrees with the serial reference solver") {
    const auto config = testutil::case_study_small_box(30.0);
    const double snr_db = 18.0;
    const auto nm = coherence_and_variance(snr_db_to_linear(snr_db));
    const auto solver = make_solver(config, snr_db);
    const auto bounds = integer_bounds(config, nm.phase_std());
    TrialRng rng(25, 0);
    for (int it = 0; it < 15; ++it) {
        const Eigen::Vector2d xi(rng.uniform(-15.0, 15.0), rng.uniform(-15.0, 15.0));
        auto [y, a_true] = testutil::draw_observation(config, xi, nm.phase_std(), rng);
        const auto problem = testutil::make_problem(config, y, nm.phase_variance);
        const auto fast = solver.solve(y, true);
        const auto ref = solve_reference(problem, bounds);
        REQUIRE(fast.a_hat == ref.a_hat);
        CHECK(fast.cost_min == doctest::Approx(ref.cost_min).epsilon(1e-9));
        CHECK(fast.b_hat.xi1 == doctest::Approx(ref.b_hat.xi1).epsilon(1e-9));
        CHECK(fast.b_hat.xi3 == doctest::Approx(ref.b_hat.xi3).epsilon(1e-9));
        CHECK(fast.ap == doctest::Approx(ref.ap).epsilon(1e-9));
        CHECK(fast.n_admissible == ref.n_admissible);
        REQUIRE(fast.candidates.size() == ref.candidates.size());
    }
}

TEST_CASE("brute-force joint-cost grid oracle agreement on 100 random instances") {
    // Small box keeps the exhaustive (a, b-grid) oracle tractable: 1 cm grid
    // over [-4, 4]^2 against the full integer box.
    const auto config = testutil::case_study_small_box(8.0);
    const double snr_db = 20.0;
    const auto nm = coherence_and_variance(snr_db_to_linear(snr_db));
    const auto bounds = integer_bounds(config, nm.phase_std());
    for (int b : bounds) REQUIRE(b == 1);  // 3^4 integer candidates

    const auto dm = build_design_matrices(config);
    const Eigen::MatrixXd Q = build_covariance(config, nm.phase_variance);
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(Q).matrixL();
    const auto lower = L.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd bw = lower.solve(dm.B);
    const Eigen::Matrix2d H = bw.transpose() * bw;
    const auto solver = make_solver(config, snr_db);

    const double half = config.half_box_m();
    const double step = 0.01;
    const int n_grid = static_cast<int>(std::lround(2.0 * half / step));  // 800 -> 801 nodes

    int failures = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
    for (int inst = 0; inst < 100; ++inst) {
        TrialRng rng(26, static_cast<std::uint64_t>(inst));
        const Eigen::Vector2d xi(rng.uniform(-half, half), rng.uniform(-half, half));
        auto [y, a_true] = testutil::draw_observation(config, xi, nm.phase_std(), rng);
        const Eigen::VectorXd yw = lower.solve(y);

        // Candidates are admissible when the unconstrained conditional minimizer
        // lands inside the box; rank them by exact conditional cost, and use a
        // 1 cm grid as an independent check of the conditional minimization.
        double best_cost = std::numeric_limits<double>::infinity();
        Eigen::Vector4i best_a = Eigen::Vector4i::Zero();
        Eigen::Vector2d best_b = Eigen::Vector2d::Zero();
        Eigen::Vector4i a;
        for (a(0) = -1; a(0) <= 1; ++a(0))
            for (a(1) = -1; a(1) <= 1; ++a(1))
                for (a(2) = -1; a(2) <= 1; ++a(2))
                    for (a(3) = -1; a(3) <= 1; ++a(3)) {
                        const Eigen::VectorXd va =
                            yw - 2.0 * M_PI * lower.solve(a.cast<double>().matrix());
                        const Eigen::Vector2d g = bw.transpose() * va;
                        const Eigen::Vector2d b_unc = H.inverse() * g;
                        if (std::abs(b_unc(0)) > half + 1e-9 || std::abs(b_unc(1)) > half + 1e-9)
                            continue;
                        const double c_exact = va.squaredNorm() - g.dot(b_unc);
                        if (c_exact < best_cost) {
                            best_cost = c_exact;
                            best_a = a;
                            best_b = b_unc;
                        }
                    }

        // grid search over b for the winning candidate only
        {
            const Eigen::VectorXd va =
                yw - 2.0 * M_PI * lower.solve(best_a.cast<double>().matrix());
            const double ca = va.squaredNorm();
            const Eigen::Vector2d g = bw.transpose() * va;
            double grid_cost = std::numeric_limits<double>::infinity();
            Eigen::Vector2d grid_b = Eigen::Vector2d::Zero();
            for (int i = 0; i <= n_grid; ++i) {
                const double b1 = -half + step * i;
                const double q1 = H(0, 0) * b1 * b1 - 2.0 * g(0) * b1;
                const double cross = 2.0 * (H(0, 1) * b1 - g(1));
                for (int j = 0; j <= n_grid; ++j) {
                    const double b2 = -half + step * j;
                    const double c = ca + q1 + cross * b2 + H(1, 1) * b2 * b2;
                    if (c < grid_cost) {
                        grid_cost = c;
                        grid_b << b1, b2;
                    }
                }
            }
            if ((grid_b - best_b).cwiseAbs().maxCoeff() > step + 1e-9) ++failures;
            if (grid_cost < best_cost - 1e-9) ++failures;
        }

        const auto sol = solver.solve(y);
        const bool same_a = sol.a_hat(0) == best_a(0) && sol.a_hat(1) == best_a(1) &&
                            sol.a_hat(2) == best_a(2) && sol.a_hat(3) == best_a(3);
        const bool b_close = std::abs(sol.b_hat.xi1 - best_b(0)) <= 1e-8 &&
                             std::abs(sol.b_hat.xi3 - best_b(1)) <= 1e-8;
        const bool cost_close = std::abs(sol.cost_min - best_cost) <= 1e-8;
        if (!same_a || !b_close || !cost_close) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("scaling Q_yy leaves the point estimates unchanged and divides the cost") {
    const auto config = testutil::case_study();
    const auto nm = coherence_and_variance(snr_db_to_linear(22.0));
    const auto dm = build_design_matrices(config);
    const auto bounds = integer_bounds(config, nm.phase_std());
    const Eigen::MatrixXd Q = build_covariance(config, nm.phase_variance);
    const MilsSolver base(dm.B, Q, config.half_box_m(), bounds);
    const double scale = 7.5;
    const MilsSolver scaled(dm.B, scale * Q, config.half_box_m(), bounds);

    TrialRng rng(27, 0);
    for (int it = 0; it < 10; ++it) {
        const Eigen::Vector2d xi(rng.uniform(-90.0, 90.0), rng.uniform(-90.0, 90.0));
        auto [y, a_true] = testutil::draw_observation(config, xi, nm.phase_std(), rng);
        const auto s1 = base.solve(y);
        const auto s2 = scaled.solve(y);
        REQUIRE(s1.a_hat == s2.a_hat);
        CHECK(s2.b_hat.xi1 == doctest::Approx(s1.b_hat.xi1).epsilon(1e-10));
        CHECK(s2.b_hat.xi3 == doctest::Approx(s1.b_hat.xi3).epsilon(1e-10));
        CHECK(s2.cost_min == doctest::Approx(s1.cost_min / scale).epsilon(1e-9));
        // lower effective SNR pulls the posterior down
        CHECK(s2.ap <= s1.ap + 1e-12);
    }
}

TEST_CASE("exchanging horizontal and vertical roles swaps the solution") {
    const auto config = testutil::case_study();
    const auto solver = make_solver(config, 20.0);
    const double sigma = coherence_and_variance(snr_db_to_linear(20.0)).phase_std();
    TrialRng rng(28, 0);
    for (int it = 0; it < 10; ++it) {
        const Eigen::Vector2d xi(rng.uniform(-95.0, 95.0), rng.uniform(-95.0, 95.0));
        auto [y, a_true] = testutil::draw_observation(config, xi, sigma, rng);
        Eigen::VectorXd y_swapped(4);
        y_swapped << y(1), y(0), y(3), y(2);
        const auto s = solver.solve(y);
        const auto s_swapped = solver.solve(y_swapped);
        CHECK(s_swapped.a_hat(0) == s.a_hat(1));
        CHECK(s_swapped.a_hat(1) == s.a_hat(0));
        CHECK(s_swapped.a_hat(2) == s.a_hat(3));
        CHECK(s_swapped.a_hat(3) == s.a_hat(2));
        CHECK(s_swapped.b_hat.xi1 == doctest::Approx(s.b_hat.xi3).epsilon(1e-10));
        CHECK(s_swapped.b_hat.xi3 == doctest::Approx(s.b_hat.xi1).epsilon(1e-10));
    }
}

TEST_CASE("cost at the true wrap integers is chi-squared with m - p = 2 dof") {
    const auto config = testutil::case_study();
    const auto nm = coherence_and_variance(snr_db_to_linear(25.0));
    double sum = 0.0;
    const int n = 10000;
    for (int it = 0; it < n; ++it) {
        TrialRng rng(29, static_cast<std::uint64_t>(it) + 1);
        const Eigen::Vector2d xi(rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0));
        auto [y, a_true] = testutil::draw_observation(config, xi, nm.phase_std(), rng);
        const auto problem = testutil::make_problem(config, y, nm.phase_variance);
        sum += conditional_real_estimate(problem, a_true).second;
    }
    CHECK(sum / n == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("empty admissible set raises NoAdmissibleSolution") {
    const auto config = testutil::case_study();
    const auto dm = build_design_matrices(config);
    const Eigen::MatrixXd Q = build_covariance(config, 1e-3);
    // tiny box, no integer freedom: the conditional estimate for a = 0 cannot land inside
    const MilsSolver solver(dm.B, Q, 1e-4, {0, 0, 0, 0});
    TrialRng rng(30, 0);
    auto [y, a_true] = testutil::draw_observation(config, {1.0, 1.0}, 0.0, rng);
    CHECK_THROWS_AS(solver.solve(y), NoAdmissibleSolution);
}

TEST_CASE("solve rejects out-of-range phases and malformed problems") {
    const auto config = testutil::case_study();
    const auto nm = coherence_and_variance(snr_db_to_linear(25.0));
    Eigen::VectorXd y(4);
    y << 3.5, 0.0, 0.0, 0.0;
    auto problem = testutil::make_problem(config, y, nm.phase_variance);
    const auto bounds = integer_bounds(config, nm.phase_std());
    CHECK_THROWS_AS(solve(problem, bounds), InputError);
    problem.y << 0.1, -0.2, 0.3, -0.4;
    problem.A(0, 0) = 1.0;  // not 2*pi*I
    CHECK_THROWS_AS(solve(problem, bounds), ConfigError);
}

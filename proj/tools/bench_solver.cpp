// Compares the incremental enumeration kernel against the serial reference
// solver, and serial vs OpenMP trial pools.

#include <chrono>
#include <cstdio>

#include "inisar/model.hpp"
#include "inisar/montecarlo.hpp"
#include "inisar/solver.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inisar::SystemConfig case_study() {
    return inisar::SystemConfig(
        {
            {9.8e9, {2.0, 0.0}, "AC"},
            {9.8e9, {0.0, 2.0}, "AC"},
            {10.2e9, {2.0, 0.0}, "AC"},
            {10.2e9, {0.0, 2.0}, "AC"},
        },
        1500.0, 200.0);
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n_trials = argc > 1 ? std::stoul(argv[1]) : 2000;
    const auto config = case_study();
    const double snr_db = 25.0;

    // kernel vs reference on a handful of shared instances
    const inisar::TrialSimulator sim(config, snr_db);
    const auto dm = inisar::build_design_matrices(config);
    const auto nm = inisar::coherence_and_variance(inisar::snr_db_to_linear(snr_db));
    const auto Q = inisar::build_covariance(config, nm.phase_variance);
    const auto bounds = inisar::integer_bounds(config, nm.phase_std());

    std::printf("enumeration box: %ld candidates per solve\n", sim.solver().num_enumerated());

    const int n_ref = 3;
    auto t0 = Clock::now();
    for (int i = 0; i < n_ref; ++i) {
        (void)sim.run(7, static_cast<std::uint64_t>(i));
    }
    const double t_kernel = seconds_since(t0) / n_ref;
    std::printf("fast kernel:      %.3f ms/solve\n", 1e3 * t_kernel);

    t0 = Clock::now();
    for (int i = 0; i < n_ref; ++i) {
        inisar::TrialRng rng(7, static_cast<std::uint64_t>(i));
        Eigen::VectorXd y(config.num_channels());
        const Eigen::Vector2d xi(rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0));
        Eigen::VectorXd z(config.num_channels());
        for (int c = 0; c < config.num_channels(); ++c) z(c) = rng.normal();
        const Eigen::VectorXd unwrapped = dm.B * xi + z * nm.phase_std();
        for (int c = 0; c < config.num_channels(); ++c) y(c) = inisar::wrap_phase(unwrapped(c));
        inisar::MilsProblem p{y, dm.A, dm.B, Q, config.half_box_m()};
        (void)inisar::solve_reference(p, bounds);
    }
    const double t_ref = seconds_since(t0) / n_ref;
    std::printf("reference solver: %.3f ms/solve (%.0fx slower)\n", 1e3 * t_ref,
                t_ref / t_kernel);

    // serial vs parallel pool
    t0 = Clock::now();
    const auto pool1 = inisar::run_pool(config, snr_db, n_trials, 42, 1);
    const double t_serial = seconds_since(t0);
    std::printf("pool, 1 thread:   %zu trials in %.2f s (%.2f ms/trial)\n", n_trials, t_serial,
                1e3 * t_serial / static_cast<double>(n_trials));

#ifdef _OPENMP
    t0 = Clock::now();
    const auto poolN = inisar::run_pool(config, snr_db, n_trials, 42, 0);
    const double t_par = seconds_since(t0);
    std::printf("pool, %d threads: %zu trials in %.2f s (speedup %.2fx)\n",
                omp_get_max_threads(), n_trials, t_par, t_serial / t_par);
    const bool identical = pool1.ap == poolN.ap && pool1.correct == poolN.correct;
    std::printf("serial/parallel results identical: %s\n", identical ? "yes" : "NO");
    if (!identical) return 1;
#endif
    return 0;
}

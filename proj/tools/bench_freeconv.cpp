#include "freeconv/measure.hpp"
#include "freeconv/rmt_lab.hpp"
#include "freeconv/solver.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>

// Compares the serial reference paths against the OpenMP kernels on the two
// hot workloads: the subordination grid solve and the Monte Carlo variance
// estimator. The parallel results must match the serial ones exactly; the
// table reports wall times and speedup.

namespace {

double now_seconds()
{
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

} // namespace

int main()
{
    using namespace freeconv;
    int hw = omp_get_max_threads();
    std::printf("hardware threads: %d\n\n", hw);

    {
        Measure m = Measure::atoms({{0.0, 0.5}, {1.0, 0.5}});
        SolverConfig cfg;
        cfg.grid_points = 400;

        double t0 = now_seconds();
        auto serial = solve_on_grid_serial(m, m, cfg);
        double t1 = now_seconds();
        auto parallel = solve_on_grid(m, m, cfg, hw);
        double t2 = now_seconds();

        double max_diff = 0;
        for (std::size_t i = 0; i < serial.size(); ++i)
            max_diff = std::max(max_diff, std::abs(serial[i].f - parallel[i].f));
        std::printf("grid solve (%d rays):    serial %.3fs  omp %.3fs  speedup %.2fx  max|df|=%g\n",
                    cfg.grid_points, t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1), max_diff);
    }

    {
        Measure m = Measure::atoms({{0.0, 0.5}, {1.0, 0.5}});
        std::vector<int> ns = {64, 128, 256};
        int trials = 40;

        double t0 = now_seconds();
        auto serial = rmt::estimate_resolvent_variance(m, m, {0, 3}, ns, trials, 42, 1);
        double t1 = now_seconds();
        auto parallel = rmt::estimate_resolvent_variance(m, m, {0, 3}, ns, trials, 42, hw);
        double t2 = now_seconds();

        double max_diff = 0;
        for (std::size_t i = 0; i < serial.var_g.size(); ++i)
            max_diff = std::max(max_diff, std::abs(serial.var_g[i] - parallel.var_g[i]));
        std::printf("mc variance (%d trials): serial %.3fs  omp %.3fs  speedup %.2fx  max|dvar|=%g\n",
                    trials, t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1), max_diff);
    }
    return 0;
}

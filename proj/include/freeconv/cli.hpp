#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace freeconv::cli {

/// Parsed command line. The front end (tools/freeconv_main.cpp) fills this
/// from flags; tests construct it directly.
struct CommandSpec {
    std::string subcommand;  // convolve, density, oracle, rtransform,
                             // mc-spectrum, mc-variance, freeness, haar-check
    std::string n1_path;
    std::string n2_path;
    std::string input_path;   // density subcommand
    std::string output_path;  // empty or "-" = stdout
    std::string states_path;  // optional subordination-grid dump (convolve)

    // Solver knobs.
    double epsilon = 1e-3;
    int grid_points = 400;
    double y_start = 0;
    double tol = 1e-12;
    bool richardson = false;

    // Monte Carlo knobs.
    int n = 256;
    int trials = 100;
    std::uint64_t seed = 1;
    double z_re = 0;
    double z_im = 3;
    std::vector<int> ns = {64, 128, 256, 512};
    std::vector<int> ms = {1, -1};
    bool allow_nonzero_sum = false;
    int bins = 40;

    // Oracle knobs.
    std::string oracle_name;  // semicircle, two-atom, arcsine, semicircle-add, mp
    double w2 = 1;
    double w1sq = 1;
    double w2sq = 1;
    double alpha = 0.5;
    double a = 1;
    double c = 1;
    std::vector<double> taus = {1};
    std::vector<double> tau_weights = {1};
    double lambda_min = 0;  // = lambda_max: derive automatically
    double lambda_max = 0;

    // R-transform knobs: s = i * s_im for each listed value.
    std::vector<double> s_im = {0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20};

    int threads = 0;  // 0 = all available (FREECONV_THREADS overrides)
};

/// Executes the command. Exit codes: 0 success, 2 input validation failure,
/// 3 solver non-convergence. Failures print one machine-readable
/// `error,<category>,<message>` line on err.
int run(const CommandSpec& spec, std::ostream& out, std::ostream& err);

/// Convenience overload writing to std::cout / std::cerr.
int run(const CommandSpec& spec);

} // namespace freeconv::cli

#include "freeconv/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using freeconv::cli::CommandSpec;
    CLI::App app{"freeconv: free additive convolution of spectral measures and a\n"
                 "random-matrix Monte Carlo laboratory"};
    app.require_subcommand(1);
    CommandSpec spec;

    auto add_solver_flags = [&](CLI::App* cmd) {
        cmd->add_option("--epsilon", spec.epsilon, "Im z at which the density is read (default 1e-3)");
        cmd->add_option("--grid-points", spec.grid_points, "lambda grid size (default 400)");
        cmd->add_option("--y-start", spec.y_start, "continuation start height (default: automatic)");
        cmd->add_option("--tol", spec.tol, "residual tolerance (default 1e-12)");
        cmd->add_flag("--richardson", spec.richardson, "two-point extrapolation in epsilon");
    };
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-o,--output", spec.output_path, "output CSV path (default stdout)");
        cmd->add_option("--threads", spec.threads,
                        "worker threads (default: all; FREECONV_THREADS honored)");
    };
    auto add_mc_flags = [&](CLI::App* cmd) {
        cmd->add_option("--n", spec.n, "matrix dimension");
        cmd->add_option("--trials", spec.trials, "Monte Carlo trials");
        cmd->add_option("--seed", spec.seed, "64-bit seed");
    };

    CLI::App* convolve = app.add_subcommand("convolve", "solve the convolution of two measures");
    convolve->add_option("--n1", spec.n1_path, "first measure JSON")->required();
    convolve->add_option("--n2", spec.n2_path, "second measure JSON")->required();
    convolve->add_option("--states", spec.states_path, "also dump the subordination grid CSV");
    add_solver_flags(convolve);
    add_common(convolve);

    CLI::App* density = app.add_subcommand("density", "render one measure's density to CSV");
    density->add_option("--in", spec.input_path, "measure JSON")->required();
    add_solver_flags(density);
    add_common(density);

    CLI::App* oracle = app.add_subcommand("oracle", "exact closed forms");
    oracle->add_option("name", spec.oracle_name,
                       "semicircle | two-atom | arcsine | semicircle-add | mp")
        ->required();
    oracle->add_option("--w2", spec.w2, "semicircle variance parameter");
    oracle->add_option("--w1sq", spec.w1sq, "first semicircle parameter (semicircle-add)");
    oracle->add_option("--w2sq", spec.w2sq, "second semicircle parameter (semicircle-add)");
    oracle->add_option("--alpha", spec.alpha, "two-atom weight at 0");
    oracle->add_option("--a", spec.a, "two-atom gap / arcsine half width");
    oracle->add_option("--c", spec.c, "Marchenko-Pastur rank ratio");
    oracle->add_option("--taus", spec.taus, "MP weight positions")->delimiter(',');
    oracle->add_option("--weights", spec.tau_weights, "MP weight masses")->delimiter(',');
    oracle->add_option("--lambda-min", spec.lambda_min, "MP grid lower end");
    oracle->add_option("--lambda-max", spec.lambda_max, "MP grid upper end");
    add_solver_flags(oracle);
    add_common(oracle);

    CLI::App* rtransform = app.add_subcommand(
        "rtransform", "R-transform of a measure; with --n2, the additivity defect");
    rtransform->add_option("--n1", spec.n1_path, "measure JSON")->required();
    rtransform->add_option("--n2", spec.n2_path, "second measure JSON (additivity check)");
    rtransform->add_option("--s-im", spec.s_im, "imaginary parts of the s points")->delimiter(',');
    add_solver_flags(rtransform);
    add_common(rtransform);

    CLI::App* mc_spectrum = app.add_subcommand(
        "mc-spectrum", "empirical spectrum of A + U* B U over Haar draws");
    mc_spectrum->add_option("--n1", spec.n1_path, "first measure JSON")->required();
    mc_spectrum->add_option("--n2", spec.n2_path, "second measure JSON")->required();
    mc_spectrum->add_option("--bins", spec.bins, "histogram bins (default 40)");
    add_mc_flags(mc_spectrum);
    add_common(mc_spectrum);

    CLI::App* mc_variance =
        app.add_subcommand("mc-variance", "variance decay of resolvent traces");
    mc_variance->add_option("--n1", spec.n1_path, "first measure JSON")->required();
    mc_variance->add_option("--n2", spec.n2_path, "second measure JSON")->required();
    mc_variance->add_option("--ns", spec.ns, "matrix sizes")->delimiter(',');
    mc_variance->add_option("--z-re", spec.z_re, "Re z (default 0)");
    mc_variance->add_option("--z-im", spec.z_im, "Im z (default 3)");
    mc_variance->add_option("--trials", spec.trials, "trials per size");
    mc_variance->add_option("--seed", spec.seed, "64-bit seed");
    add_common(mc_variance);

    CLI::App* freeness = app.add_subcommand(
        "freeness", "normalized trace of an alternating word in U powers");
    freeness->add_option("--ms", spec.ms, "nonzero exponents, e.g. 1,-1,1,-1")->delimiter(',');
    freeness->add_flag("--allow-nonzero-sum", spec.allow_nonzero_sum,
                       "permit a nonvanishing exponent sum");
    add_mc_flags(freeness);
    add_common(freeness);

    CLI::App* haar = app.add_subcommand("haar-check", "Haar-unitary resolvent trace vs its limit");
    haar->add_option("--z-re", spec.z_re, "Re z")->required();
    haar->add_option("--z-im", spec.z_im, "Im z (default 0)")->default_val(0.0);
    add_mc_flags(haar);
    add_common(haar);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);  // --help
        std::cerr << "error,input," << e.what() << "\n";
        return 2;
    }
    spec.subcommand = app.get_subcommands().front()->get_name();
    return freeconv::cli::run(spec);
}

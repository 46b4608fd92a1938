#include "freeconv/cli.hpp"

#include "freeconv/closed_forms.hpp"
#include "freeconv/csv.hpp"
#include "freeconv/json_io.hpp"
#include "freeconv/rmt_lab.hpp"
#include "freeconv/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace freeconv::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

int effective_threads(const CommandSpec& spec)
{
    if (spec.threads > 0)
        return spec.threads;
    if (const char* env = std::getenv("FREECONV_THREADS"))
        if (int v = std::atoi(env); v > 0)
            return v;
    return 0;  // library default: all available
}

SolverConfig solver_config(const CommandSpec& spec)
{
    SolverConfig cfg;
    if (!(spec.epsilon > 0))
        throw std::invalid_argument("epsilon must be positive");
    if (spec.grid_points < 2)
        throw std::invalid_argument("grid-points must be >= 2");
    cfg.y_target = spec.epsilon;
    cfg.grid_points = spec.grid_points;
    cfg.y_start = spec.y_start;
    cfg.tol = spec.tol;
    cfg.richardson = spec.richardson;
    return cfg;
}

void require_mc_params(const CommandSpec& spec)
{
    if (spec.n < 2)
        throw std::invalid_argument("n must be >= 2");
    if (spec.trials < 1)
        throw std::invalid_argument("trials must be >= 1");
}

int run_convolve(const CommandSpec& spec, std::ostream& out)
{
    Measure n1 = load_measure(spec.n1_path);
    Measure n2 = load_measure(spec.n2_path);
    SolverConfig cfg = solver_config(spec);
    int threads = effective_threads(spec);

    DensityEstimate est = free_convolve(n1, n2, cfg, threads);
    write_csv_file(spec.output_path, out, [&](std::ostream& os) { write_density_csv(os, est); });
    if (!spec.states_path.empty()) {
        std::vector<SubordinationState> states = solve_on_grid(n1, n2, cfg, threads);
        write_csv_file(spec.states_path, out,
                       [&](std::ostream& os) { write_states_csv(os, states); });
    }
    return kExitOk;
}

int run_density(const CommandSpec& spec, std::ostream& out)
{
    Measure m = load_measure(spec.input_path);
    SolverConfig cfg = solver_config(spec);
    double eps = cfg.y_target;

    auto [lo, hi] = m.support_bounds();
    double margin = std::max(0.05 * (hi - lo), 0.05);
    DensityEstimate est;
    est.epsilon_used = eps;
    est.atoms = m.atoms_list();
    est.lambdas.resize(cfg.grid_points);
    est.rho.resize(cfg.grid_points);
    for (int i = 0; i < cfg.grid_points; ++i) {
        double x = lo - margin + (hi - lo + 2 * margin) * double(i) / double(cfg.grid_points - 1);
        est.lambdas[i] = x;
        auto rho_at = [&](double e) {
            double v = m.stieltjes(Complex(x, e)).imag() / M_PI;
            for (const Atom& a : est.atoms) {
                double d = x - a.position;
                v -= a.mass * e / (M_PI * (d * d + e * e));
            }
            return v;
        };
        double v = cfg.richardson ? 2 * rho_at(eps) - rho_at(2 * eps) : rho_at(eps);
        est.rho[i] = std::max(v, 0.0);
    }
    write_csv_file(spec.output_path, out, [&](std::ostream& os) { write_density_csv(os, est); });
    return kExitOk;
}

DensityEstimate sample_closed_form(const ClosedFormResult& cf, int grid_points)
{
    DensityEstimate est;
    est.epsilon_used = 0;  // exact density, no smoothing
    est.atoms = cf.atoms;
    double lo = cf.support_lo, hi = cf.support_hi;
    if (!(hi > lo)) {  // purely atomic: a short flat window around the atoms
        lo = cf.atoms.front().position - 1;
        hi = cf.atoms.back().position + 1;
    }
    double margin = std::max(0.05 * (hi - lo), 0.05);
    est.lambdas.resize(grid_points);
    est.rho.resize(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        double x = lo - margin + (hi - lo + 2 * margin) * double(i) / double(grid_points - 1);
        est.lambdas[i] = x;
        est.rho[i] = cf.density ? cf.density(x) : 0.0;
    }
    return est;
}

int run_oracle(const CommandSpec& spec, std::ostream& out)
{
    if (spec.oracle_name == "semicircle-add") {
        write_csv_file(spec.output_path, out, [&](std::ostream& os) {
            os << format_double(semicircle_add(spec.w1sq, spec.w2sq)) << "\n";
        });
        return kExitOk;
    }
    if (spec.oracle_name == "mp") {
        if (spec.taus.size() != spec.tau_weights.size() || spec.taus.empty())
            throw std::invalid_argument("oracle mp: taus and weights must match and be nonempty");
        std::vector<Atom> pts;
        for (std::size_t i = 0; i < spec.taus.size(); ++i)
            pts.push_back({spec.taus[i], spec.tau_weights[i]});
        Measure sigma = Measure::atoms(std::move(pts));
        SolverConfig cfg = solver_config(spec);
        double eps = cfg.y_target;

        double tmax = 0;
        for (double t : spec.taus)
            tmax = std::max(tmax, std::abs(t));
        double lo = spec.lambda_min, hi = spec.lambda_max;
        if (!(hi > lo)) {
            double reach = (1 + spec.c) * tmax + 2 * std::sqrt(std::max(spec.c, 1.0)) * tmax + 1;
            lo = std::min(0.0, -reach);
            hi = reach;
        }
        DensityEstimate est;
        est.epsilon_used = eps;
        est.lambdas.resize(cfg.grid_points);
        est.rho.resize(cfg.grid_points);
        for (int i = 0; i < cfg.grid_points; ++i) {
            double x = lo + (hi - lo) * double(i) / double(cfg.grid_points - 1);
            est.lambdas[i] = x;
            Complex f = mp_stieltjes(spec.c, sigma, Complex(x, eps), cfg);
            est.rho[i] = std::max(f.imag() / M_PI, 0.0);
        }
        write_csv_file(spec.output_path, out,
                       [&](std::ostream& os) { write_density_csv(os, est); });
        return kExitOk;
    }

    ClosedFormResult cf;
    if (spec.oracle_name == "semicircle")
        cf = semicircle_law(spec.w2);
    else if (spec.oracle_name == "two-atom")
        cf = two_atom_self_conv(spec.alpha, spec.a);
    else if (spec.oracle_name == "arcsine")
        cf = arcsine_self_conv(spec.a);
    else
        throw std::invalid_argument("unknown oracle \"" + spec.oracle_name + "\"");
    DensityEstimate est = sample_closed_form(cf, spec.grid_points);
    write_csv_file(spec.output_path, out, [&](std::ostream& os) { write_density_csv(os, est); });
    return kExitOk;
}

int run_rtransform(const CommandSpec& spec, std::ostream& out)
{
    Measure n1 = load_measure(spec.n1_path);
    SolverConfig cfg = solver_config(spec);
    if (spec.s_im.empty())
        throw std::invalid_argument("rtransform: need at least one s point");

    if (spec.n2_path.empty()) {
        write_csv_file(spec.output_path, out, [&](std::ostream& os) {
            os << "s_im,r_re,r_im\n";
            for (double si : spec.s_im) {
                Complex r = r_transform_eval(n1, Complex(0, si));
                os << format_double(si) << "," << format_double(r.real()) << ","
                   << format_double(r.imag()) << "\n";
            }
        });
        return kExitOk;
    }

    Measure n2 = load_measure(spec.n2_path);
    TransformFn f1 = [&n1](Complex z) { return n1.stieltjes(z); };
    TransformFn f2 = [&n2](Complex z) { return n2.stieltjes(z); };
    SolverConfig tight = cfg;
    tight.tol = std::min(cfg.tol, 1e-13);
    TransformFn fn = [&](Complex z) { return solve_at_point(f1, f2, z, std::nullopt, tight).f; };

    double max_defect = 0;
    write_csv_file(spec.output_path, out, [&](std::ostream& os) {
        os << "s_im,r1_re,r1_im,r2_re,r2_im,rn_re,rn_im,defect\n";
        for (double si : spec.s_im) {
            Complex s(0, si);
            Complex r1 = r_transform_eval(n1, s);
            Complex r2 = r_transform_eval(n2, s);
            Complex rn = r_transform_eval(fn, s);
            double defect = std::abs(rn - r1 - r2);
            max_defect = std::max(max_defect, defect);
            os << format_double(si) << "," << format_double(r1.real()) << ","
               << format_double(r1.imag()) << "," << format_double(r2.real()) << ","
               << format_double(r2.imag()) << "," << format_double(rn.real()) << ","
               << format_double(rn.imag()) << "," << format_double(defect) << "\n";
        }
        os << "# max_defect," << format_double(max_defect) << "\n";
    });
    return kExitOk;
}

int run_mc_spectrum(const CommandSpec& spec, std::ostream& out)
{
    Measure n1 = load_measure(spec.n1_path);
    Measure n2 = load_measure(spec.n2_path);
    require_mc_params(spec);
    if (spec.bins < 1)
        throw std::invalid_argument("bins must be >= 1");
    int threads = effective_threads(spec);

    rmt::ComplexMatrix a = rmt::diagonal_matrix(rmt::diag_from_measure(n1, spec.n));
    rmt::ComplexMatrix b = rmt::diagonal_matrix(rmt::diag_from_measure(n2, spec.n));

    std::vector<rmt::SpectrumSample> samples(spec.trials);
    if (threads > 0)
        omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < spec.trials; ++t)
        samples[t] = rmt::rotate_sum_spectrum(a, b, rmt::derive_seed(spec.seed, t));

    auto [a1, b1] = n1.support_bounds();
    auto [a2, b2] = n2.support_bounds();
    double lo = a1 + a2, hi = b1 + b2;
    double margin = std::max(0.05 * (hi - lo), 0.05);
    lo -= margin;
    hi += margin;
    std::vector<double> edges(spec.bins + 1);
    for (int i = 0; i <= spec.bins; ++i)
        edges[i] = lo + (hi - lo) * double(i) / double(spec.bins);

    rmt::Histogram hist = rmt::empirical_ncm(samples, edges);
    CsvMetadata meta = {{"seed", std::to_string(spec.seed)},
                        {"n", std::to_string(spec.n)},
                        {"trials", std::to_string(spec.trials)}};
    write_csv_file(spec.output_path, out,
                   [&](std::ostream& os) { write_histogram_csv(os, hist, meta); });
    return kExitOk;
}

int run_mc_variance(const CommandSpec& spec, std::ostream& out)
{
    Measure n1 = load_measure(spec.n1_path);
    Measure n2 = load_measure(spec.n2_path);
    if (spec.trials < 2)
        throw std::invalid_argument("trials must be >= 2");
    if (spec.ns.empty())
        throw std::invalid_argument("need at least one matrix size");
    Complex z(spec.z_re, spec.z_im);

    rmt::VarianceReport rep = rmt::estimate_resolvent_variance(
        n1, n2, z, spec.ns, spec.trials, spec.seed, effective_threads(spec));
    CsvMetadata meta = {{"seed", std::to_string(spec.seed)},
                        {"trials", std::to_string(spec.trials)},
                        {"z", format_double(spec.z_re) + "+" + format_double(spec.z_im) + "i"}};
    write_csv_file(spec.output_path, out,
                   [&](std::ostream& os) { write_variance_csv(os, rep, meta); });
    return kExitOk;
}

int run_freeness(const CommandSpec& spec, std::ostream& out)
{
    require_mc_params(spec);
    // The word alternates the two standard traceless sign patterns.
    std::vector<rmt::ComplexMatrix> ts;
    for (std::size_t r = 0; r < spec.ms.size(); ++r)
        ts.push_back(r % 2 == 0 ? rmt::alternating_sign_diag(spec.n)
                                : rmt::block_sign_diag(spec.n));

    std::vector<Complex> xs = rmt::freeness_samples(spec.n, spec.ms, ts, spec.trials, spec.seed,
                                                    spec.allow_nonzero_sum,
                                                    effective_threads(spec));
    Complex mean(0, 0);
    for (Complex x : xs)
        mean += x;
    mean /= double(xs.size());
    double var = 0;
    for (Complex x : xs)
        var += std::norm(x - mean);
    double se = xs.size() > 1 ? std::sqrt(var / double(xs.size() - 1) / double(xs.size())) : 0;

    std::ostringstream word;
    for (std::size_t r = 0; r < spec.ms.size(); ++r)
        word << (r ? ";" : "") << spec.ms[r];
    CsvMetadata meta = {{"seed", std::to_string(spec.seed)},
                        {"n", std::to_string(spec.n)},
                        {"trials", std::to_string(spec.trials)},
                        {"exponents", word.str()}};
    write_csv_file(spec.output_path, out, [&](std::ostream& os) {
        write_metadata(os, meta);
        os << "mean_re,mean_im,abs_mean,stderr\n";
        os << format_double(mean.real()) << "," << format_double(mean.imag()) << ","
           << format_double(std::abs(mean)) << "," << format_double(se) << "\n";
    });
    return kExitOk;
}

int run_haar_check(const CommandSpec& spec, std::ostream& out)
{
    require_mc_params(spec);
    Complex z(spec.z_re, spec.z_im);
    Complex mean =
        rmt::unitary_spectrum_check(spec.n, z, spec.trials, spec.seed, effective_threads(spec));
    Complex expected = (std::abs(z) > 1) ? -1.0 / z : Complex(0, 0);

    CsvMetadata meta = {{"seed", std::to_string(spec.seed)},
                        {"n", std::to_string(spec.n)},
                        {"trials", std::to_string(spec.trials)},
                        {"z", format_double(spec.z_re) + "+" + format_double(spec.z_im) + "i"}};
    write_csv_file(spec.output_path, out, [&](std::ostream& os) {
        write_metadata(os, meta);
        os << "mean_re,mean_im,expected_re,expected_im,abs_error\n";
        os << format_double(mean.real()) << "," << format_double(mean.imag()) << ","
           << format_double(expected.real()) << "," << format_double(expected.imag()) << ","
           << format_double(std::abs(mean - expected)) << "\n";
    });
    return kExitOk;
}

} // namespace

int run(const CommandSpec& spec, std::ostream& out, std::ostream& err)
{
    try {
        if (spec.subcommand == "convolve")
            return run_convolve(spec, out);
        if (spec.subcommand == "density")
            return run_density(spec, out);
        if (spec.subcommand == "oracle")
            return run_oracle(spec, out);
        if (spec.subcommand == "rtransform")
            return run_rtransform(spec, out);
        if (spec.subcommand == "mc-spectrum")
            return run_mc_spectrum(spec, out);
        if (spec.subcommand == "mc-variance")
            return run_mc_variance(spec, out);
        if (spec.subcommand == "freeness")
            return run_freeness(spec, out);
        if (spec.subcommand == "haar-check")
            return run_haar_check(spec, out);
        err << "error,input,unknown subcommand \"" << spec.subcommand << "\"\n";
        return kExitInput;
    } catch (const SolverError& e) {
        err << "error,solver," << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        err << "error,input," << e.what() << "\n";
        return kExitInput;
    } catch (const std::domain_error& e) {
        err << "error,input," << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error,solver," << e.what() << "\n";
        return kExitSolver;
    }
}

int run(const CommandSpec& spec)
{
    return run(spec, std::cout, std::cerr);
}

} // namespace freeconv::cli

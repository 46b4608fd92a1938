#include "freeconv/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <sstream>
#include <string>

namespace freeconv {

namespace {

constexpr double kAtomThreshold = 0.01;

std::string format_point(Complex z)
{
    std::ostringstream os;
    os << "(lambda=" << z.real() << ", y=" << z.imag() << ")";
    return os.str();
}

struct Triple {
    Complex f, d1, d2;
};

double residual_of(const TransformFn& f1, const TransformFn& f2, Complex z, const Triple& t,
                   Complex* F1 = nullptr, Complex* F2 = nullptr)
{
    Complex w1 = z - t.d2 / t.f;
    Complex w2 = z - t.d1 / t.f;
    Complex v1 = f1(w1);
    Complex v2 = f2(w2);
    if (F1)
        *F1 = v1;
    if (F2)
        *F2 = v2;
    double e1 = std::abs(v1 - t.f);
    double e2 = std::abs(v2 - t.f);
    double e3 = std::abs(t.d1 + t.d2 - 1.0 - z * t.f);
    return std::max({e1, e2, e3});
}

} // namespace

double DensityEstimate::total_mass() const
{
    double m = 0;
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i)
        m += 0.5 * (lambdas[i + 1] - lambdas[i]) * (rho[i] + rho[i + 1]);
    for (const Atom& a : atoms)
        m += a.mass;
    return m;
}

double DensityEstimate::mean() const
{
    double m = 0;
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i)
        m += 0.5 * (lambdas[i + 1] - lambdas[i]) *
             (rho[i] * lambdas[i] + rho[i + 1] * lambdas[i + 1]);
    for (const Atom& a : atoms)
        m += a.mass * a.position;
    return m;
}

double DensityEstimate::cdf(double x) const
{
    double c = 0;
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
        if (lambdas[i + 1] <= x) {
            c += 0.5 * (lambdas[i + 1] - lambdas[i]) * (rho[i] + rho[i + 1]);
        } else if (lambdas[i] < x) {
            double h = lambdas[i + 1] - lambdas[i], t = x - lambdas[i];
            double slope = (rho[i + 1] - rho[i]) / h;
            c += rho[i] * t + 0.5 * slope * t * t;
            break;
        } else {
            break;
        }
    }
    for (const Atom& a : atoms)
        if (a.position <= x)
            c += a.mass;
    return c;
}

namespace {

using OmegaPair = std::array<Complex, 2>;

// Minimal-residual extrapolation through a window of (iterate, image)
// pairs of the subordination-point sweep: weights alpha with sum 1
// minimize |sum alpha_i (G(x_i) - x_i)| and the candidate is
// sum alpha_i G(x_i). The sweep contracts like 1 - O(Im z) near the real
// axis, far too slow for deep targets; this recombination removes the slow
// error modes and a jump is taken only when it reduces the residual.
// Difference directions live in C^2, so at most two are kept and the
// two-direction solve falls back to the one-direction secant when its
// normal matrix is close to singular.
struct Extrapolator {
    static constexpr int kCap = 3;
    OmegaPair xs[kCap], gs[kCap];
    int len = 0;

    void push(const OmegaPair& x, const OmegaPair& g)
    {
        if (len == kCap) {
            for (int i = 1; i < kCap; ++i) {
                xs[i - 1] = xs[i];
                gs[i - 1] = gs[i];
            }
            --len;
        }
        xs[len] = x;
        gs[len] = g;
        ++len;
    }

    void clear() { len = 0; }

    OmegaPair residual(int i) const
    {
        return {gs[i][0] - xs[i][0], gs[i][1] - xs[i][1]};
    }

    OmegaPair combine(const Complex* gamma, const int* idx, int m) const
    {
        Complex alpha_last = 1.0;
        for (int j = 0; j < m; ++j)
            alpha_last -= gamma[j];
        OmegaPair cand{alpha_last * gs[len - 1][0], alpha_last * gs[len - 1][1]};
        for (int j = 0; j < m; ++j) {
            cand[0] += gamma[j] * gs[idx[j]][0];
            cand[1] += gamma[j] * gs[idx[j]][1];
        }
        return cand;
    }

    /// Up to two candidates, best model first. Returns the count.
    int candidates(OmegaPair out[2]) const
    {
        if (len < 2)
            return 0;
        OmegaPair r_last = residual(len - 1);
        auto dot = [](const OmegaPair& a, const OmegaPair& b) {
            return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
        };
        auto diff = [&](int i) {
            OmegaPair ri = residual(i);
            return OmegaPair{r_last[0] - ri[0], r_last[1] - ri[1]};
        };

        int count = 0;
        if (len >= 3) {
            OmegaPair d0 = diff(0), d1 = diff(1);
            Complex a00 = dot(d0, d0), a01 = dot(d0, d1), a11 = dot(d1, d1);
            Complex det = a00 * a11 - a01 * std::conj(a01);
            if (std::abs(det) > 1e-12 * std::abs(a00) * std::abs(a11)) {
                Complex b0 = dot(d0, r_last), b1 = dot(d1, r_last);
                Complex gamma[2] = {(a11 * b0 - a01 * b1) / det,
                                    (a00 * b1 - std::conj(a01) * b0) / det};
                int idx[2] = {0, 1};
                out[count++] = combine(gamma, idx, 2);
            }
        }
        {
            OmegaPair d = diff(len - 2);
            Complex dd = dot(d, d);
            if (std::abs(dd) > 0) {
                Complex gamma = dot(d, r_last) / dd;
                int idx = len - 2;
                out[count++] = combine(&gamma, &idx, 1);
            }
        }
        return count;
    }
};

// State triple implied by the subordination points, with the third
// equation enforced exactly by a symmetric shift of the deltas.
Triple triple_from_omegas(Complex z, const OmegaPair& w, Complex F1, Complex F2)
{
    Complex f = 0.5 * (F1 + F2);
    Complex d1 = (z - w[1]) * f;
    Complex d2 = (z - w[0]) * f;
    Complex shift = 0.5 * (1.0 + z * f - d1 - d2);
    return {f, d1 + shift, d2 + shift};
}

} // namespace

SubordinationState solve_at_point(const TransformFn& f1, const TransformFn& f2, Complex z,
                                  std::optional<SubordinationState> init, const SolverConfig& cfg)
{
    if (!(z.imag() > 0))
        throw std::domain_error("solve_at_point: Im z must be positive");

    // The sweep runs on the subordination points (omega1, omega2). Each
    // half-step omega -> z + (-1/f_r(omega)) - omega is a holomorphic self
    // map of the upper half plane, so the damped iteration converges from
    // any admissible start; the (f, delta) triple is reconstructed every
    // sweep and the returned residual is the defect of the full system.
    OmegaPair w;
    if (init && init->f != Complex(0, 0) && (init->z - init->delta2 / init->f).imag() > 0 &&
        (init->z - init->delta1 / init->f).imag() > 0) {
        w = {z - init->delta2 / init->f, z - init->delta1 / init->f};
    } else {
        w = {z, z};
    }

    double eta = cfg.damping;
    const double eta_floor = cfg.damping / 16.0;
    Triple best{-1.0 / z, 0.0, 0.0};
    double best_res = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    double prev_res = std::numeric_limits<double>::infinity();
    Extrapolator window;
    int last_gain = 0;
    int calm = 0;
    bool restarted = false;

    for (int iter = 0; iter <= cfg.max_iter; ++iter) {
        Complex F1 = f1(w[0]);
        Complex F2 = f2(w[1]);
        Triple t = triple_from_omegas(z, w, F1, F2);
        double res = residual_of(f1, f2, z, t);
        if (!std::isfinite(res))
            break;  // fall back to the best state seen and report failure
        if (res < best_res) {
            best = t;
            best_res = res;
            best_iter = iter;
            last_gain = iter;
        }
        if (res <= cfg.tol)
            return {z, t.f, t.d1, t.d2, res, iter};
        // The sweep is a self map of the upper half plane, so eta = 1 is
        // always admissible; damping only tames transients. Halve on a
        // significant residual jump, drift back up on calm stretches.
        if (res > 1.2 * prev_res) {
            eta = std::max(eta / 2.0, eta_floor);
            calm = 0;
        } else if (++calm >= 10) {
            eta = std::min(1.5 * eta, 1.0);
            calm = 0;
        }
        prev_res = res;

        if (iter - last_gain > 1000 && !restarted) {
            // Trapped away from the solution (e.g. a poisoned warm start):
            // one cold restart of the sweep recovers.
            restarted = true;
            w = {z, z};
            eta = cfg.damping;
            window.clear();
            prev_res = std::numeric_limits<double>::infinity();
            continue;
        }

        // Gauss-Seidel sweep of the subordination relations
        //   omega2 = z - 1/f1(omega1) - omega1,
        //   omega1 = z - 1/f2(omega2) - omega2.
        OmegaPair prop;
        prop[1] = z - 1.0 / F1 - w[0];
        prop[0] = z - 1.0 / f2(prop[1]) - prop[1];
        window.push(w, prop);

        w[0] = (1.0 - eta) * w[0] + eta * prop[0];
        w[1] = (1.0 - eta) * w[1] + eta * prop[1];

        if (iter % 3 == 2) {
            OmegaPair cands[2];
            int n_cand = window.candidates(cands);
            for (int k = 0; k < n_cand; ++k) {
                const OmegaPair& cand = cands[k];
                // The norm cap keeps extrapolation out of the spurious
                // "solution" at omega = infinity (f = 0), whose residual
                // also vanishes; the sweep's pullback dominates capped
                // jumps.
                if (!(cand[0].imag() > 0) || !(cand[1].imag() > 0) ||
                    std::abs(cand[0]) + std::abs(cand[1]) >
                        3.0 * (std::abs(w[0]) + std::abs(w[1]) + 1.0))
                    continue;
                Complex C1 = f1(cand[0]);
                Complex C2 = f2(cand[1]);
                Triple ct = triple_from_omegas(z, cand, C1, C2);
                double cand_res = residual_of(f1, f2, z, ct);
                if (std::isfinite(cand_res) && cand_res < res) {
                    w = cand;
                    prev_res = cand_res;
                    window.clear();
                    break;
                }
            }
        }
    }

    SubordinationState state{z, best.f, best.d1, best.d2, best_res, best_iter};
    throw SolverError("solve_at_point: no convergence at " + format_point(z) + " after " +
                          std::to_string(cfg.max_iter) + " iterations, best residual " +
                          std::to_string(best_res),
                      state);
}

SubordinationState solve_ray(const TransformFn& f1, const TransformFn& f2, double lambda,
                             double y_start, double y_target, const SolverConfig& cfg,
                             const std::vector<double>* capture_ys,
                             std::vector<SubordinationState>* captured)
{
    if (!(y_start >= y_target) || !(y_target > 0))
        throw std::invalid_argument("solve_ray: need y_start >= y_target > 0");

    // Height schedule: geometric decay, then every capture height and the
    // target exactly.
    std::vector<double> heights;
    for (double y = y_start; y > y_target; y *= cfg.continuation_factor)
        heights.push_back(y);
    heights.push_back(y_target);
    if (capture_ys)
        for (double y : *capture_ys)
            heights.push_back(y);
    std::sort(heights.begin(), heights.end(), std::greater<double>());
    heights.erase(std::unique(heights.begin(), heights.end()), heights.end());

    std::optional<SubordinationState> state;
    for (double y : heights) {
        Complex z(lambda, y);
        if (state) {
            state->z = z;  // warm start: carry (f, d1, d2) to the new height
        }
        state = solve_at_point(f1, f2, z, state, cfg);
        if (captured && capture_ys &&
            std::find(capture_ys->begin(), capture_ys->end(), y) != capture_ys->end())
            captured->push_back(*state);
    }
    return *state;
}

double effective_y_start(const Measure& n1, const Measure& n2, const SolverConfig& cfg)
{
    auto [a1, b1] = n1.support_bounds();
    auto [a2, b2] = n2.support_bounds();
    double radius = std::max({std::abs(a1), std::abs(b1), std::abs(a2), std::abs(b2)});
    double y0 = std::max(cfg.y_start, 8.0 * (1.0 + radius));

    // Post hoc check that the start height sits in the asymptotic regime:
    // |delta_r(i y0)| <= 0.1. Heavily skewed inputs can need a taller start.
    TransformFn f1 = [&n1](Complex z) { return n1.stieltjes(z); };
    TransformFn f2 = [&n2](Complex z) { return n2.stieltjes(z); };
    for (int attempt = 0; attempt < 8; ++attempt) {
        SubordinationState top = solve_at_point(f1, f2, {0, y0}, std::nullopt, cfg);
        if (std::abs(top.delta1) <= 0.1 && std::abs(top.delta2) <= 0.1)
            break;
        y0 *= 2;
    }
    return y0;
}

std::vector<double> auto_lambda_grid(const Measure& n1, const Measure& n2, int grid_points)
{
    auto [a1, b1] = n1.support_bounds();
    auto [a2, b2] = n2.support_bounds();
    double lo = a1 + a2, hi = b1 + b2;
    double margin = std::max(0.05 * (hi - lo), 0.05);
    lo -= margin;
    hi += margin;
    int n = std::max(grid_points, 2);
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return grid;
}

namespace {

std::vector<SubordinationState> solve_grid_impl(const Measure& n1, const Measure& n2,
                                                const SolverConfig& cfg, int threads)
{
    TransformFn f1 = [&n1](Complex z) { return n1.stieltjes(z); };
    TransformFn f2 = [&n2](Complex z) { return n2.stieltjes(z); };
    std::vector<double> grid =
        cfg.lambda_grid.empty() ? auto_lambda_grid(n1, n2, cfg.grid_points) : cfg.lambda_grid;
    double y0 = effective_y_start(n1, n2, cfg);

    std::vector<SubordinationState> states(grid.size());
    std::string error_text;
    bool failed = false;

    if (threads == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            states[i] = solve_ray(f1, f2, grid[i], y0, cfg.y_target, cfg);
        return states;
    }

    if (threads > 0)
        omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(grid.size()); ++i) {
        try {
            states[i] = solve_ray(f1, f2, grid[i], y0, cfg.y_target, cfg);
        } catch (const std::exception& e) {
#pragma omp critical
            {
                if (!failed) {
                    failed = true;
                    error_text = e.what();
                }
            }
        }
    }
    if (failed)
        throw SolverError("solve_on_grid: " + error_text, SubordinationState{});
    return states;
}

} // namespace

std::vector<SubordinationState> solve_on_grid_serial(const Measure& n1, const Measure& n2,
                                                     const SolverConfig& cfg)
{
    return solve_grid_impl(n1, n2, cfg, 1);
}

std::vector<SubordinationState> solve_on_grid(const Measure& n1, const Measure& n2,
                                              const SolverConfig& cfg, int threads)
{
    return solve_grid_impl(n1, n2, cfg, threads);
}

namespace {

std::vector<double> raw_density(const std::vector<SubordinationState>& states,
                                const std::vector<Atom>& atoms, double eps)
{
    std::vector<double> rho(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        double lambda = states[i].z.real();
        double v = states[i].f.imag() / M_PI;
        for (const Atom& a : atoms) {
            double d = lambda - a.position;
            v -= a.mass * eps / (M_PI * (d * d + eps * eps));
        }
        rho[i] = v;
    }
    return rho;
}

void check_states(const std::vector<SubordinationState>& states)
{
    if (states.empty())
        throw std::invalid_argument("recover_density: empty state list");
    double eps = states.front().z.imag();
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (std::abs(states[i].z.imag() - eps) > 1e-12 * std::max(1.0, eps))
            throw std::domain_error("recover_density: states mix different epsilon values");
        if (i > 0 && states[i].z.real() <= states[i - 1].z.real())
            throw std::invalid_argument("recover_density: lambda grid must be strictly increasing");
    }
}

} // namespace

DensityEstimate recover_density(const std::vector<SubordinationState>& states,
                                const std::vector<Atom>& atoms)
{
    check_states(states);
    double eps = states.front().z.imag();
    DensityEstimate est;
    est.epsilon_used = eps;
    est.atoms = atoms;
    est.lambdas.reserve(states.size());
    for (const SubordinationState& s : states)
        est.lambdas.push_back(s.z.real());
    est.rho = raw_density(states, atoms, eps);
    for (double& r : est.rho)
        r = std::max(r, 0.0);
    return est;
}

DensityEstimate recover_density_richardson(const std::vector<SubordinationState>& states_eps,
                                           const std::vector<SubordinationState>& states_2eps,
                                           const std::vector<Atom>& atoms)
{
    check_states(states_eps);
    check_states(states_2eps);
    if (states_eps.size() != states_2eps.size())
        throw std::invalid_argument("recover_density_richardson: grid size mismatch");
    double eps = states_eps.front().z.imag();
    if (std::abs(states_2eps.front().z.imag() - 2 * eps) > 1e-12)
        throw std::domain_error("recover_density_richardson: second grid must sit at 2*eps");

    DensityEstimate est;
    est.epsilon_used = eps;
    est.atoms = atoms;
    est.lambdas.reserve(states_eps.size());
    for (const SubordinationState& s : states_eps)
        est.lambdas.push_back(s.z.real());
    std::vector<double> r1 = raw_density(states_eps, atoms, eps);
    std::vector<double> r2 = raw_density(states_2eps, atoms, 2 * eps);
    est.rho.resize(r1.size());
    for (std::size_t i = 0; i < r1.size(); ++i)
        est.rho[i] = std::max(2 * r1[i] - r2[i], 0.0);
    return est;
}

std::vector<Atom> detect_atoms(const Measure& n1, const Measure& n2,
                               const std::vector<double>& candidates, const SolverConfig& cfg)
{
    TransformFn f1 = [&n1](Complex z) { return n1.stieltjes(z); };
    TransformFn f2 = [&n2](Complex z) { return n2.stieltjes(z); };
    double y0 = effective_y_start(n1, n2, cfg);
    const std::vector<double> eps_list = {1e-3, 5e-4, 2.5e-4};

    std::vector<Atom> found;
    for (double x0 : candidates) {
        if (!std::isfinite(x0))
            throw std::invalid_argument("detect_atoms: candidate positions must be finite");
        std::vector<SubordinationState> probes;
        solve_ray(f1, f2, x0, y0, eps_list.back(), cfg, &eps_list, &probes);
        double g1 = 0, g2 = 0, g4 = 0;
        for (const SubordinationState& s : probes) {
            double g = s.z.imag() * s.f.imag();
            if (s.z.imag() == eps_list[0])
                g1 = g;
            else if (s.z.imag() == eps_list[1])
                g2 = g;
            else
                g4 = g;
        }
        double mass = (8 * g4 - 6 * g2 + g1) / 3.0;  // kills O(eps) and O(eps^2)
        if (mass > kAtomThreshold)
            found.push_back({x0, mass});
    }
    std::sort(found.begin(), found.end(),
              [](const Atom& l, const Atom& r) { return l.position < r.position; });
    return found;
}

Complex r_transform_eval(const TransformFn& transform, Complex s)
{
    if (s == Complex(0, 0))
        throw std::invalid_argument("r_transform_eval: s must be nonzero");
    Complex z = -1.0 / s;
    Complex fz = transform(z);
    double defect = std::abs(fz - s);
    const double tol = 1e-14;

    for (int iter = 0; iter < 200 && defect > tol; ++iter) {
        // Central-difference derivative; the transform is analytic so the
        // step can be taken along the real direction.
        double h = 1e-6 * std::max(1.0, std::abs(z));
        Complex df = (transform(z + h) - transform(z - h)) / (2 * h);
        if (!(std::abs(df) > 0))
            throw std::runtime_error("r_transform_eval: vanishing derivative at z=" +
                                     format_point(z));
        Complex step = (s - fz) / df;
        // Halve the step until the defect decreases (safeguarded Newton).
        for (int k = 0; k < 60; ++k) {
            Complex z_new = z + step;
            Complex f_new = transform(z_new);
            double d_new = std::abs(f_new - s);
            if (d_new < defect || k == 59) {
                z = z_new;
                fz = f_new;
                defect = d_new;
                break;
            }
            step *= 0.5;
        }
    }
    if (defect > tol)
        throw std::runtime_error("r_transform_eval: Newton stalled, |f(z)-s|=" +
                                 std::to_string(defect) + " at z=" + format_point(z));
    return -1.0 / s - z;
}

Complex r_transform_eval(const Measure& m, Complex s)
{
    return r_transform_eval([&m](Complex z) { return m.stieltjes(z); }, s);
}

double check_r_additivity(const Measure& n1, const Measure& n2,
                          const std::vector<Complex>& s_points, const SolverConfig& cfg)
{
    TransformFn f1 = [&n1](Complex z) { return n1.stieltjes(z); };
    TransformFn f2 = [&n2](Complex z) { return n2.stieltjes(z); };
    SolverConfig tight = cfg;
    tight.tol = std::min(cfg.tol, 1e-13);
    TransformFn fn = [&](Complex z) {
        return solve_at_point(f1, f2, z, std::nullopt, tight).f;
    };

    double worst = 0;
    for (Complex s : s_points) {
        Complex rn = r_transform_eval(fn, s);
        Complex r1 = r_transform_eval(f1, s);
        Complex r2 = r_transform_eval(f2, s);
        worst = std::max(worst, std::abs(rn - r1 - r2));
    }
    return worst;
}

namespace {

// Exact shift: n1 + point mass at c. The density is read from the shifted
// transform of n2 directly, without iteration.
DensityEstimate convolve_with_point_mass(const Measure& other, double c, const SolverConfig& cfg)
{
    double eps = cfg.y_target;
    std::vector<double> grid = cfg.lambda_grid;
    if (grid.empty()) {
        auto [a, b] = other.support_bounds();
        double lo = a + c, hi = b + c;
        double margin = std::max(0.05 * (hi - lo), 0.05);
        lo -= margin;
        hi += margin;
        grid.resize(cfg.grid_points);
        for (int i = 0; i < cfg.grid_points; ++i)
            grid[i] = lo + (hi - lo) * double(i) / double(cfg.grid_points - 1);
    }
    std::vector<Atom> atoms = other.atoms_list();
    for (Atom& a : atoms)
        a.position += c;

    DensityEstimate est;
    est.epsilon_used = eps;
    est.atoms = atoms;
    est.lambdas = grid;
    est.rho.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto rho_at = [&](double e) {
            double v = other.stieltjes(Complex(grid[i] - c, e)).imag() / M_PI;
            for (const Atom& a : atoms) {
                double d = grid[i] - a.position;
                v -= a.mass * e / (M_PI * (d * d + e * e));
            }
            return v;
        };
        double v = cfg.richardson ? 2 * rho_at(eps) - rho_at(2 * eps) : rho_at(eps);
        est.rho[i] = std::max(v, 0.0);
    }
    return est;
}

} // namespace

DensityEstimate free_convolve(const Measure& n1, const Measure& n2, const SolverConfig& cfg,
                              int threads)
{
    double c = 0;
    if (n1.is_point_mass(&c))
        return convolve_with_point_mass(n2, c, cfg);
    if (n2.is_point_mass(&c))
        return convolve_with_point_mass(n1, c, cfg);

    // Atoms of the convolution can only sit at sums of input atom positions.
    std::vector<double> candidates;
    for (const Atom& a : n1.atoms_list())
        for (const Atom& b : n2.atoms_list()) {
            double pos = a.position + b.position;
            bool dup = false;
            for (double p : candidates)
                if (std::abs(p - pos) <= 1e-12)
                    dup = true;
            if (!dup)
                candidates.push_back(pos);
        }
    std::vector<Atom> atoms = candidates.empty()
                                  ? std::vector<Atom>{}
                                  : detect_atoms(n1, n2, candidates, cfg);

    if (!cfg.richardson) {
        std::vector<SubordinationState> states = solve_on_grid(n1, n2, cfg, threads);
        return recover_density(states, atoms);
    }

    // Capture the two heights eps and 2*eps in a single continuation pass.
    TransformFn f1 = [&n1](Complex z) { return n1.stieltjes(z); };
    TransformFn f2 = [&n2](Complex z) { return n2.stieltjes(z); };
    std::vector<double> grid =
        cfg.lambda_grid.empty() ? auto_lambda_grid(n1, n2, cfg.grid_points) : cfg.lambda_grid;
    double y0 = effective_y_start(n1, n2, cfg);
    std::vector<double> capture = {2 * cfg.y_target, cfg.y_target};

    std::vector<SubordinationState> at_eps(grid.size()), at_2eps(grid.size());
    std::string error_text;
    bool failed = false;
    if (threads > 0)
        omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(grid.size()); ++i) {
        try {
            std::vector<SubordinationState> probes;
            solve_ray(f1, f2, grid[i], y0, cfg.y_target, cfg, &capture, &probes);
            for (const SubordinationState& s : probes)
                (s.z.imag() == cfg.y_target ? at_eps : at_2eps)[i] = s;
        } catch (const std::exception& e) {
#pragma omp critical
            {
                if (!failed) {
                    failed = true;
                    error_text = e.what();
                }
            }
        }
    }
    if (failed)
        throw SolverError("free_convolve: " + error_text, SubordinationState{});
    return recover_density_richardson(at_eps, at_2eps, atoms);
}

} // namespace freeconv

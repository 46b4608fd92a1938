#include "freeconv/closed_forms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace freeconv {

namespace {

// Damped Picard iteration for a scalar self-consistent equation f = map(f),
// started at f0, with the adaptive damping of the main solver plus the same
// safeguarded Aitken extrapolation against near-neutral error modes.
Complex damped_fixed_point(const std::function<Complex(Complex)>& map, Complex f0,
                           const SolverConfig& cfg, const char* who)
{
    Complex f = f0;
    double eta = cfg.damping;
    const double eta_floor = cfg.damping / 16.0;
    double prev = std::numeric_limits<double>::infinity();
    Complex hist[3];
    int hist_len = 0;
    int calm = 0;
    for (int iter = 0; iter <= cfg.max_iter; ++iter) {
        Complex v = map(f);
        double res = std::abs(v - f);
        if (!std::isfinite(res))
            break;
        if (res <= cfg.tol)
            return f;
        // Self map of the upper half plane: eta = 1 is admissible, damping
        // only tames transients (halve on jumps, recover on calm runs).
        if (res > 1.2 * prev) {
            eta = std::max(eta / 2.0, eta_floor);
            calm = 0;
        } else if (++calm >= 10) {
            eta = std::min(1.5 * eta, 1.0);
            calm = 0;
        }
        prev = res;
        f = (1.0 - eta) * f + eta * v;

        hist[hist_len % 3] = f;
        ++hist_len;
        if (hist_len >= 3 && iter % 4 == 3) {
            Complex x0 = hist[(hist_len - 3) % 3];
            Complex x1 = hist[(hist_len - 2) % 3];
            Complex x2 = hist[(hist_len - 1) % 3];
            Complex d1 = x1 - x0, d2 = x2 - x1, denom = d2 - d1;
            if (std::abs(denom) > 1e-300) {
                Complex cand = x2 - d2 * d2 / denom;
                double cand_res = std::abs(map(cand) - cand);
                if (std::isfinite(cand_res) && cand_res < res) {
                    f = cand;
                    prev = cand_res;
                    hist_len = 0;
                }
            }
        }
    }
    throw std::runtime_error(std::string(who) + ": no convergence");
}

Complex nevanlinna(Complex z, Complex candidate)
{
    // Conjugate symmetry handles the lower half plane.
    if (z.imag() < 0)
        return std::conj(candidate);
    return candidate;
}

} // namespace

ClosedFormResult semicircle_law(double w2)
{
    if (!(w2 > 0))
        throw std::invalid_argument("semicircle_law: w2 must be positive");
    double radius = 2.0 * std::sqrt(2.0 * w2);
    ClosedFormResult r;
    r.support_lo = -radius;
    r.support_hi = radius;
    r.density = [w2, radius](double x) {
        if (std::abs(x) >= radius)
            return 0.0;
        return std::sqrt(8 * w2 - x * x) / (4 * M_PI * w2);
    };
    r.stieltjes = [w2, radius](Complex z) {
        if (z.imag() == 0)
            throw std::domain_error("semicircle_law: z must be off the real axis");
        Complex zu(z.real(), std::abs(z.imag()));
        Complex f = (-zu + sqrt_branch(zu, -radius, radius)) / (4.0 * w2);
        return nevanlinna(z, f);
    };
    return r;
}

ClosedFormResult two_atom_self_conv(double alpha, double a)
{
    if (!(alpha >= 0 && alpha <= 1))
        throw std::invalid_argument("two_atom_self_conv: alpha must lie in [0, 1]");
    if (!(a > 0))
        throw std::invalid_argument("two_atom_self_conv: a must be positive");

    double m0 = std::max(2 * alpha - 1, 0.0);
    double m2a = std::max(1 - 2 * alpha, 0.0);
    double spread = 2.0 * std::sqrt(alpha * (1 - alpha));
    double x_minus = a * (1 - spread);
    double x_plus = a * (1 + spread);

    ClosedFormResult r;
    if (m0 > 0)
        r.atoms.push_back({0.0, m0});
    if (m2a > 0)
        r.atoms.push_back({2 * a, m2a});
    r.support_lo = x_minus;
    r.support_hi = x_plus;
    r.density = [=](double x) {
        if (x <= x_minus || x >= x_plus || spread == 0)
            return 0.0;
        // The printed form is negative on (0, 2a); the measure's density is
        // its absolute value.
        return std::sqrt((x_plus - x) * (x - x_minus)) / (M_PI * std::abs(x * (x - 2 * a)));
    };
    r.stieltjes = [=](Complex z) {
        if (z.imag() == 0)
            throw std::domain_error("two_atom_self_conv: z must be off the real axis");
        Complex zu(z.real(), std::abs(z.imag()));
        Complex f =
            (-a * (1 - 2 * alpha) - sqrt_branch(zu, x_minus, x_plus)) / (zu * (zu - 2 * a));
        return nevanlinna(z, f);
    };
    return r;
}

ClosedFormResult arcsine_self_conv(double a)
{
    if (!(a > 0))
        throw std::invalid_argument("arcsine_self_conv: a must be positive");
    double edge = std::sqrt(3.0) * a;
    ClosedFormResult r;
    r.support_lo = -edge;
    r.support_hi = edge;
    r.density = [a, edge](double x) {
        if (std::abs(x) >= edge)
            return 0.0;
        return 2.0 * std::sqrt(3 * a * a - x * x) / (M_PI * (4 * a * a - x * x));
    };
    r.stieltjes = [a, edge](Complex z) {
        if (z.imag() == 0)
            throw std::domain_error("arcsine_self_conv: z must be off the real axis");
        Complex zu(z.real(), std::abs(z.imag()));
        Complex f = (zu - 2.0 * sqrt_branch(zu, -edge, edge)) / (zu * zu - 4 * a * a);
        return nevanlinna(z, f);
    };
    return r;
}

double semicircle_add(double w1sq, double w2sq)
{
    if (w1sq < 0 || w2sq < 0)
        throw std::invalid_argument("semicircle_add: parameters must be nonnegative");
    return w1sq + w2sq;
}

Complex deformed_gue_stieltjes(const TransformFn& f0, double w2, Complex z,
                               const SolverConfig& cfg)
{
    if (!(z.imag() > 0))
        throw std::domain_error("deformed_gue_stieltjes: Im z must be positive");
    if (w2 == 0)
        return f0(z);
    return damped_fixed_point([&](Complex f) { return f0(z + 2.0 * w2 * f); }, -1.0 / z, cfg,
                              "deformed_gue_stieltjes");
}

Complex mp_stieltjes(double c, const Measure& sigma, Complex z, const SolverConfig& cfg)
{
    return mp_deformation_stieltjes([](Complex w) { return -1.0 / w; }, c, sigma, z, cfg);
}

Complex mp_deformation_stieltjes(const TransformFn& f0, double c, const Measure& sigma, Complex z,
                                 const SolverConfig& cfg)
{
    if (!(z.imag() > 0))
        throw std::domain_error("mp_deformation_stieltjes: Im z must be positive");
    if (c < 0)
        throw std::invalid_argument("mp_deformation_stieltjes: c must be nonnegative");
    if (sigma.kind() != Measure::Kind::Atoms)
        throw std::invalid_argument("mp_deformation_stieltjes: sigma must be atomic");
    if (c == 0)
        return f0(z);
    const std::vector<Atom>& taus = sigma.atoms_list();
    auto map = [&](Complex f) {
        Complex s = 0;
        for (const Atom& t : taus)
            s += t.mass * t.position / (1.0 + t.position * f);
        return f0(z - c * s);
    };
    return damped_fixed_point(map, -1.0 / z, cfg, "mp_deformation_stieltjes");
}

} // namespace freeconv

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "freeconv/closed_forms.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/solver.hpp"
#include "test_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace freeconv;
using test_oracle::edge_aware_mass;
using test_oracle::edge_aware_moment;

namespace {

double closed_form_total_mass(const ClosedFormResult& cf)
{
    double m = 0;
    for (const Atom& a : cf.atoms)
        m += a.mass;
    if (cf.support_hi > cf.support_lo)
        m += edge_aware_mass(cf.density, cf.support_lo, cf.support_hi);
    return m;
}

void check_nevanlinna_suite(const std::function<Complex(Complex)>& s)
{
    for (double re : {-3.0, -0.4, 0.0, 0.9, 2.7}) {
        for (double im : {0.1, 1.0, 10.0, -0.5}) {
            Complex z(re, im);
            Complex v = s(z);
            CHECK(std::abs(v) <= 1.0 / std::abs(im) + 1e-12);
            CHECK(v.imag() * im > 0);
            CHECK(std::abs(s(std::conj(z)) - std::conj(v)) < 1e-14);
        }
    }
    double prev = 1e300;
    for (double y : {10.0, 100.0, 1000.0}) {
        double defect = std::abs(Complex(0, y) * s({0, y}) + 1.0);
        CHECK(defect < prev);
        prev = defect;
    }
}

} // namespace

TEST_CASE("semicircle_law")
{
    auto cf = semicircle_law(1.0);
    CHECK(cf.density(0.0) == doctest::Approx(std::sqrt(2.0) / (2 * M_PI)).epsilon(1e-14));
    CHECK(cf.support_lo == doctest::Approx(-2 * std::sqrt(2.0)));
    CHECK(cf.support_hi == doctest::Approx(2 * std::sqrt(2.0)));
    CHECK(std::abs(cf.stieltjes({0, 3}) - Complex(0, (std::sqrt(17.0) - 3) / 4)) < 1e-14);
    CHECK(closed_form_total_mass(cf) == doctest::Approx(1.0).epsilon(1e-9));
    check_nevanlinna_suite(cf.stieltjes);
    CHECK_THROWS_AS(semicircle_law(-1.0), std::invalid_argument);
}

TEST_CASE("two_atom_self_conv: degenerate weights")
{
    auto cf = two_atom_self_conv(0.0, 1.0);
    REQUIRE(cf.atoms.size() == 1);
    CHECK(cf.atoms[0].position == doctest::Approx(2.0));
    CHECK(cf.atoms[0].mass == doctest::Approx(1.0));

    cf = two_atom_self_conv(1.0, 1.0);
    REQUIRE(cf.atoms.size() == 1);
    CHECK(cf.atoms[0].position == doctest::Approx(0.0));
    CHECK(cf.atoms[0].mass == doctest::Approx(1.0));

    CHECK_THROWS_AS(two_atom_self_conv(1.5, 1.0), std::invalid_argument);
}

TEST_CASE("two_atom_self_conv: balanced case")
{
    auto cf = two_atom_self_conv(0.5, 1.0);
    CHECK(cf.atoms.empty());
    CHECK(cf.density(1.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-12));
    CHECK(cf.support_lo == doctest::Approx(0.0));
    CHECK(cf.support_hi == doctest::Approx(2.0));
    CHECK(closed_form_total_mass(cf) == doctest::Approx(1.0).epsilon(1e-9));
    check_nevanlinna_suite(cf.stieltjes);
}

TEST_CASE("two_atom_self_conv: atom plus arc")
{
    auto cf = two_atom_self_conv(0.75, 1.0);
    REQUIRE(cf.atoms.size() == 1);
    CHECK(cf.atoms[0].position == doctest::Approx(0.0));
    CHECK(cf.atoms[0].mass == doctest::Approx(0.5));
    CHECK(cf.support_lo == doctest::Approx(1 - std::sqrt(3.0) / 2).epsilon(1e-12));
    CHECK(cf.support_hi == doctest::Approx(1 + std::sqrt(3.0) / 2).epsilon(1e-12));
    CHECK(cf.support_lo == doctest::Approx(0.13397).epsilon(1e-4));
    CHECK(cf.support_hi == doctest::Approx(1.86603).epsilon(1e-4));
    // Absolutely continuous mass complements the atom.
    CHECK(edge_aware_mass(cf.density, cf.support_lo, cf.support_hi) ==
          doctest::Approx(0.5).epsilon(1e-8));
    check_nevanlinna_suite(cf.stieltjes);

    // The transform agrees with the general solver on and off the support.
    Measure m = Measure::atoms({{0.0, 0.75}, {1.0, 0.25}});
    TransformFn f = [&m](Complex z) { return m.stieltjes(z); };
    SolverConfig cfg;
    for (Complex z : {Complex(0.7, 1e-3), Complex(-0.3, 0.01), Complex(1.2, 2.0)}) {
        auto st = solve_ray(f, f, z.real(), 17.0, z.imag(), cfg);
        CHECK(std::abs(st.f - cf.stieltjes(z)) < 1e-9);
    }
}

TEST_CASE("arcsine_self_conv")
{
    auto cf = arcsine_self_conv(1.0);
    CHECK(cf.atoms.empty());
    CHECK(cf.support_lo == doctest::Approx(-std::sqrt(3.0)));
    CHECK(cf.support_hi == doctest::Approx(std::sqrt(3.0)));
    // Total mass 1 pins the normalization of the density.
    CHECK(closed_form_total_mass(cf) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cf.density(0.0) == doctest::Approx(std::sqrt(3.0) / (2 * M_PI)).epsilon(1e-12));
    // Second moment adds: arcsine(1) has variance 1/2.
    CHECK(edge_aware_moment(cf.density, cf.support_lo, cf.support_hi, 2) ==
          doctest::Approx(1.0).epsilon(1e-8));
    check_nevanlinna_suite(cf.stieltjes);

    // Inversion of the closed-form transform recovers the density.
    double x = 0.9;
    double rho_eps = cf.stieltjes(Complex(x, 1e-6)).imag() / M_PI;
    CHECK(rho_eps == doctest::Approx(cf.density(x)).epsilon(1e-5));
}

TEST_CASE("semicircle_add")
{
    CHECK(semicircle_add(1.0, 1.0) == 2.0);
    CHECK(semicircle_add(0.7, 0.0) == doctest::Approx(0.7));
    CHECK(semicircle_add(3.0, 4.0) == 7.0);
    CHECK_THROWS_AS(semicircle_add(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("deformed_gue_stieltjes")
{
    SolverConfig cfg;
    TransformFn free_transform = [](Complex z) { return -1.0 / z; };

    // Zero deformation target: reduces to the semicircle equation.
    auto sc = semicircle_law(1.0);
    for (Complex z : {Complex(0, 3), Complex(0.5, 1.0), Complex(-2.0, 0.4)}) {
        Complex f = deformed_gue_stieltjes(free_transform, 1.0, z, cfg);
        CHECK(std::abs(f - sc.stieltjes(z)) < 1e-11);
    }

    // w2 = 0: the transform passes through.
    Measure sym = Measure::atoms({{-1.0, 0.5}, {1.0, 0.5}});
    TransformFn f0 = [&sym](Complex z) { return sym.stieltjes(z); };
    Complex z(0, 3);
    CHECK(deformed_gue_stieltjes(f0, 0.0, z, cfg) == sym.stieltjes(z));

    // Cross-oracle: the deformed-GUE equation is the subordination system
    // with a semicircle second input.
    Complex via_dgue = deformed_gue_stieltjes(f0, 1.0, z, cfg);
    Measure sc1 = Measure::semicircle(1.0);
    TransformFn fsc = [&sc1](Complex w) { return sc1.stieltjes(w); };
    auto st = solve_at_point(f0, fsc, z, std::nullopt, cfg);
    CHECK(std::abs(via_dgue - st.f) < 1e-10);
}

TEST_CASE("mp_stieltjes")
{
    SolverConfig cfg;
    Measure sigma1 = Measure::point_mass(1.0);

    // c = 0: no spikes, pure -1/z.
    CHECK(std::abs(mp_stieltjes(0.0, sigma1, {0, 2}, cfg) - Complex(0, 0.5)) < 1e-13);

    // c = 1, sigma = delta_1 at z -> -1 from above: positive root of
    // f^2 + f - 1 = 0.
    Complex f = mp_stieltjes(1.0, sigma1, {-1.0, 1e-9}, cfg);
    CHECK(f.real() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-6));

    // Density of the Marchenko-Pastur law at lambda = 2 via inversion.
    double rho2 = mp_stieltjes(1.0, sigma1, {2.0, 1e-6}, cfg).imag() / M_PI;
    CHECK(rho2 == doctest::Approx(1.0 / (2 * M_PI)).epsilon(1e-4));

    CHECK_THROWS_AS(mp_stieltjes(-1.0, sigma1, {0, 1}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(mp_stieltjes(1.0, Measure::semicircle(1.0), {0, 1}, cfg),
                    std::invalid_argument);
}

TEST_CASE("mp_stieltjes: cdf against the quadrature oracle")
{
    // MP with c = 1, sigma = delta_1: density sqrt(lambda(4 - lambda)) /
    // (2 pi lambda) on (0, 4].
    auto mp_density = [](double x) {
        if (x <= 0 || x >= 4)
            return 0.0;
        return std::sqrt(x * (4 - x)) / (2 * M_PI * x);
    };
    SolverConfig cfg;
    Measure sigma1 = Measure::point_mass(1.0);
    const double eps = 1e-6;

    // Lambda grid: geometric clustering into the hard edge at 0 (where the
    // density diverges like 1/sqrt(lambda)), uniform through the bulk.
    std::vector<double> xs;
    for (double x = -0.05; x < -eps; x *= 0.6)
        xs.push_back(x);
    for (double x = eps; x < 0.1; x *= 1.05)
        xs.push_back(x);
    for (double x = 0.1; x < 4.3; x += 0.004)
        xs.push_back(x);
    std::sort(xs.begin(), xs.end());

    std::vector<double> dens(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        dens[i] = std::max(mp_stieltjes(1.0, sigma1, {xs[i], eps}, cfg).imag() / M_PI, 0.0);
    std::vector<double> cdf(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (xs[i] - xs[i - 1]) * (dens[i] + dens[i - 1]);

    for (int k = 1; k <= 20; ++k) {
        double q = double(k) / 21.0;
        // Oracle quantile by bisection on the quadrature CDF.
        double lo = 1e-12, hi = 4.0;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (edge_aware_mass(mp_density, 0.0, mid, 2000) < q ? lo : hi) = mid;
        }
        double x_q = 0.5 * (lo + hi);
        // Interpolate the recovered CDF at the oracle quantile.
        auto it = std::lower_bound(xs.begin(), xs.end(), x_q);
        std::size_t i = std::max<std::ptrdiff_t>(1, it - xs.begin());
        double t = (x_q - xs[i - 1]) / (xs[i] - xs[i - 1]);
        double recovered = cdf[i - 1] + t * (cdf[i] - cdf[i - 1]);
        CHECK(std::abs(recovered - q) <= 1e-4);
    }
}

TEST_CASE("mp_deformation_stieltjes")
{
    SolverConfig cfg;
    Measure sigma1 = Measure::point_mass(1.0);

    // f0 = -1/z reduces to mp_stieltjes.
    TransformFn free_transform = [](Complex z) { return -1.0 / z; };
    for (Complex z : {Complex(0, 3), Complex(1.0, 0.5)}) {
        CHECK(std::abs(mp_deformation_stieltjes(free_transform, 1.0, sigma1, z, cfg) -
                       mp_stieltjes(1.0, sigma1, z, cfg)) < 1e-12);
    }

    // c = 0 passes the base transform through.
    Measure sc = Measure::semicircle(1.0);
    TransformFn f0 = [&sc](Complex z) { return sc.stieltjes(z); };
    Complex z(0, 3);
    CHECK(mp_deformation_stieltjes(f0, 0.0, sigma1, z, cfg) == sc.stieltjes(z));

    // Self-consistency at two tolerances.
    Complex loose = mp_deformation_stieltjes(f0, 1.0, sigma1, z, cfg);
    SolverConfig tight = cfg;
    tight.tol = 1e-13;
    Complex strict = mp_deformation_stieltjes(f0, 1.0, sigma1, z, tight);
    CHECK(std::abs(loose - strict) < 1e-11);
    // The fixed point satisfies its own equation.
    Complex arg = z - 1.0 / (1.0 + strict);
    CHECK(std::abs(strict - sc.stieltjes(arg)) < 1e-12);
}

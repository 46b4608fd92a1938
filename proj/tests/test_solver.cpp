#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "freeconv/closed_forms.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/solver.hpp"
#include "test_oracles.hpp"

#include <cmath>

using namespace freeconv;

namespace {

TransformFn transform_of(const Measure& m)
{
    return [m](Complex z) { return m.stieltjes(z); };
}

const Measure kTwoAtom = Measure::atoms({{0.0, 0.5}, {1.0, 0.5}});
const Measure kSemicircle = Measure::semicircle(1.0);

} // namespace

TEST_CASE("solve_at_point: adding the zero matrix is the identity")
{
    SolverConfig cfg;
    Complex z(0.4, 2.0);
    auto st = solve_at_point(transform_of(kSemicircle), transform_of(Measure::point_mass(0.0)), z,
                             std::nullopt, cfg);
    Complex f1z = kSemicircle.stieltjes(z);
    CHECK(std::abs(st.f - f1z) < 1e-10);
    CHECK(std::abs(st.delta2) < 1e-10);
    CHECK(std::abs(st.delta1 - (1.0 + z * f1z)) < 1e-10);
}

TEST_CASE("solve_at_point: semicircle pair at 3i")
{
    SolverConfig cfg;
    auto st = solve_at_point(transform_of(kSemicircle), transform_of(kSemicircle), {0, 3},
                             std::nullopt, cfg);
    // Convolution is semicircle with parameter 2: root of 4f^2 + 3if + 1 = 0.
    CHECK(std::abs(st.f - Complex(0, 0.25)) < 1e-11);
    CHECK(std::abs(st.delta1 - 0.125) < 1e-11);
    CHECK(std::abs(st.delta2 - 0.125) < 1e-11);
}

TEST_CASE("solve_at_point: rigid shift by c")
{
    SolverConfig cfg;
    double c = -0.8;
    Complex z(1.1, 2.5);
    auto st = solve_at_point(transform_of(kTwoAtom), transform_of(Measure::point_mass(c)), z,
                             std::nullopt, cfg);
    Complex expected = kTwoAtom.stieltjes(z - c);
    CHECK(std::abs(st.f - expected) < 1e-10);
    CHECK(std::abs(st.delta2 - c * st.f) < 1e-10);
}

TEST_CASE("solve_at_point: domain and convergence errors")
{
    SolverConfig cfg;
    CHECK_THROWS_AS(solve_at_point(transform_of(kTwoAtom), transform_of(kTwoAtom), {0.0, -1.0},
                                   std::nullopt, cfg),
                    std::domain_error);

    SolverConfig strangled;
    strangled.max_iter = 3;
    strangled.tol = 1e-16;
    try {
        solve_at_point(transform_of(kTwoAtom), transform_of(kTwoAtom), {0.5, 0.01}, std::nullopt,
                       strangled);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.best_state.z == Complex(0.5, 0.01));
        CHECK(e.best_state.residual > 0);
        CHECK(std::string(e.what()).find("lambda=0.5") != std::string::npos);
    }
}

TEST_CASE("solve_on_grid: single high point equals solve_at_point")
{
    SolverConfig cfg;
    cfg.lambda_grid = {0.7};
    cfg.y_target = 25.0;
    cfg.y_start = 25.0;
    auto states = solve_on_grid_serial(kTwoAtom, kSemicircle, cfg);
    REQUIRE(states.size() == 1);
    auto direct = solve_at_point(transform_of(kTwoAtom), transform_of(kSemicircle), {0.7, 25.0},
                                 std::nullopt, cfg);
    CHECK(std::abs(states[0].f - direct.f) < 1e-12);
}

TEST_CASE("solve_on_grid: density values at the axis")
{
    SolverConfig cfg;
    cfg.lambda_grid = {0.0};
    auto states = solve_on_grid_serial(kSemicircle, kSemicircle, cfg);
    // Semicircle with parameter 2 has density 1/(2 pi) at 0.
    CHECK(states[0].f.imag() == doctest::Approx(0.5).epsilon(4e-3));

    cfg.lambda_grid = {1.0};
    states = solve_on_grid_serial(kTwoAtom, kTwoAtom, cfg);
    CHECK(states[0].f.imag() == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("solve_on_grid: converged states satisfy the full system")
{
    SolverConfig cfg;
    cfg.grid_points = 41;
    auto states = solve_on_grid_serial(kTwoAtom, kSemicircle, cfg);
    TransformFn f1 = transform_of(kTwoAtom), f2 = transform_of(kSemicircle);
    for (const auto& s : states) {
        CHECK(s.residual <= cfg.tol);
        CHECK(std::abs(f1(s.omega1()) - s.f) <= cfg.tol);
        CHECK(std::abs(f2(s.omega2()) - s.f) <= cfg.tol);
        CHECK(std::abs(s.delta1 + s.delta2 - 1.0 - s.z * s.f) <= 1e-13);
        // Nevanlinna suite on the solved transform.
        CHECK(s.f.imag() > 0);
        CHECK(std::abs(s.f) <= 1.0 / s.z.imag() + 1e-9);
        // Subordination points stay in the upper half plane.
        CHECK(s.omega1().imag() > 0);
        CHECK(s.omega2().imag() > 0);
    }
}

TEST_CASE("solve_on_grid: OpenMP kernel reproduces the serial reference exactly")
{
    SolverConfig cfg;
    cfg.grid_points = 64;
    auto serial = solve_on_grid_serial(kTwoAtom, kSemicircle, cfg);
    auto parallel = solve_on_grid(kTwoAtom, kSemicircle, cfg, 2);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].f == parallel[i].f);
        CHECK(serial[i].delta1 == parallel[i].delta1);
        CHECK(serial[i].delta2 == parallel[i].delta2);
        CHECK(serial[i].iterations == parallel[i].iterations);
    }
}

TEST_CASE("symmetry in the two inputs")
{
    SolverConfig cfg;
    cfg.lambda_grid = {-0.5, 0.3, 1.2};
    auto ab = solve_on_grid_serial(kTwoAtom, kSemicircle, cfg);
    auto ba = solve_on_grid_serial(kSemicircle, kTwoAtom, cfg);
    for (std::size_t i = 0; i < ab.size(); ++i) {
        CHECK(std::abs(ab[i].f - ba[i].f) < 10 * cfg.tol);
        CHECK(std::abs(ab[i].delta1 - ba[i].delta2) < 1e-9);
        CHECK(std::abs(ab[i].delta2 - ba[i].delta1) < 1e-9);
    }
}

TEST_CASE("recover_density: worked values")
{
    // Semicircle(0.5) + semicircle(0.5) = semicircle(1): rho(0) = sqrt(2)/(2 pi).
    Measure half = Measure::semicircle(0.5);
    SolverConfig cfg;
    cfg.lambda_grid = {-0.8, 0.0, 0.8};
    auto states = solve_on_grid_serial(half, half, cfg);
    auto est = recover_density(states);
    CHECK(est.epsilon_used == doctest::Approx(1e-3));
    CHECK(est.rho[1] == doctest::Approx(std::sqrt(2.0) / (2 * M_PI)).epsilon(1e-3));

    // Far outside the summed supports the density vanishes.
    cfg.lambda_grid = {4.0, 5.0};
    states = solve_on_grid_serial(half, half, cfg);
    est = recover_density(states);
    CHECK(est.rho[0] < 1e-2);
    CHECK(est.rho[1] < 1e-2);

    // Mixed epsilon values are rejected.
    auto other = states;
    other[1].z = Complex(other[1].z.real(), 2e-3);
    CHECK_THROWS_AS(recover_density(other), std::domain_error);
}

TEST_CASE("detect_atoms")
{
    SolverConfig cfg;
    Measure heavy = Measure::atoms({{0.0, 0.75}, {1.0, 0.25}});
    auto atoms = detect_atoms(heavy, heavy, {0.0, 1.0, 2.0}, cfg);
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].position == 0.0);
    CHECK(atoms[0].mass == doctest::Approx(0.5).epsilon(0.02));

    Measure d0 = Measure::point_mass(0.0);
    atoms = detect_atoms(d0, d0, {0.0}, cfg);
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].mass == doctest::Approx(1.0).epsilon(1e-6));

    atoms = detect_atoms(kSemicircle, kSemicircle, {0.0, 1.0}, cfg);
    CHECK(atoms.empty());
}

TEST_CASE("r_transform_eval")
{
    Complex s(0, 0.1);
    CHECK(std::abs(r_transform_eval(kSemicircle, s) - 2.0 * s) < 1e-9);

    Measure shifted = Measure::point_mass(1.7);
    for (double si : {0.05, 0.1, 0.2})
        CHECK(std::abs(r_transform_eval(shifted, {0, si}) - Complex(-1.7, 0)) < 1e-10);

    Measure d0 = Measure::point_mass(0.0);
    CHECK(std::abs(r_transform_eval(d0, s)) < 1e-12);
}

TEST_CASE("check_r_additivity")
{
    CHECK(check_r_additivity(kSemicircle, kSemicircle, {{0, 0.05}}) <= 1e-8);
    CHECK(check_r_additivity(kTwoAtom, Measure::point_mass(0.0), {{0, 0.05}}) <= 1e-10);
    Measure sym = Measure::atoms({{-1.0, 0.5}, {1.0, 0.5}});
    CHECK(check_r_additivity(kSemicircle, sym, {{0, 0.05}}) <= 1e-6);
}

TEST_CASE("free_convolve: point masses shift exactly")
{
    SolverConfig cfg;
    auto est = free_convolve(Measure::point_mass(0.75), Measure::point_mass(-0.25), cfg);
    REQUIRE(est.atoms.size() == 1);
    CHECK(est.atoms[0].position == doctest::Approx(0.5));
    CHECK(est.atoms[0].mass == doctest::Approx(1.0));
    CHECK(est.total_mass() == doctest::Approx(1.0).epsilon(1e-2));

    est = free_convolve(kSemicircle, Measure::point_mass(1.0), cfg);
    CHECK(est.atoms.empty());
    // Density peak moves to lambda = 1.
    std::size_t imax = 0;
    for (std::size_t i = 0; i < est.rho.size(); ++i)
        if (est.rho[i] > est.rho[imax])
            imax = i;
    CHECK(est.lambdas[imax] == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("free_convolve: semicircle profile")
{
    SolverConfig cfg;
    cfg.grid_points = 101;
    auto est = free_convolve(kSemicircle, kSemicircle, cfg);
    auto oracle = semicircle_law(2.0);
    for (std::size_t i = 0; i < est.lambdas.size(); ++i) {
        if (std::abs(est.lambdas[i]) < 3.6)
            CHECK(est.rho[i] == doctest::Approx(oracle.density(est.lambdas[i])).epsilon(0.02));
    }
    CHECK(est.total_mass() == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("free_convolve: mass, mean additivity and support confinement")
{
    SolverConfig cfg;
    cfg.grid_points = 201;
    Measure skew = Measure::atoms({{-0.5, 0.3}, {0.8, 0.7}});
    auto est = free_convolve(skew, kSemicircle, cfg);

    CHECK(std::abs(est.total_mass() - 1.0) < 2e-3);
    CHECK(est.mean() ==
          doctest::Approx(skew.moment(1) + kSemicircle.moment(1)).epsilon(2e-3));

    auto [a1, b1] = skew.support_bounds();
    auto [a2, b2] = kSemicircle.support_bounds();
    double lo = a1 + a2, hi = b1 + b2, w = hi - lo;
    double outside = 0;
    for (std::size_t i = 0; i + 1 < est.lambdas.size(); ++i) {
        double mid = 0.5 * (est.lambdas[i] + est.lambdas[i + 1]);
        if (mid < lo - 0.05 * w || mid > hi + 0.05 * w)
            outside +=
                0.5 * (est.lambdas[i + 1] - est.lambdas[i]) * (est.rho[i] + est.rho[i + 1]);
    }
    CHECK(outside <= 1e-2);
    for (double r : est.rho)
        CHECK(r >= 0.0);
}

TEST_CASE("free_convolve: density bound from an absolutely continuous input")
{
    // Uniform density 0.5 on [-1, 1]; the output density cannot exceed it
    // by more than the recovery bias. The grid spacing must stay below the
    // working Im z for the trapezoid transform to be trustworthy.
    std::vector<double> xs(4001), ps(4001, 0.5);
    for (std::size_t i = 0; i < xs.size(); ++i)
        xs[i] = -1.0 + 2.0 * double(i) / double(xs.size() - 1);
    Measure uniform = Measure::grid_density(xs, ps);
    SolverConfig cfg;
    cfg.grid_points = 201;
    auto est = free_convolve(uniform, kTwoAtom, cfg);
    double max_rho = 0;
    for (double r : est.rho)
        max_rho = std::max(max_rho, r);
    CHECK(max_rho <= uniform.density_sup() + 5e-2);
}

TEST_CASE("free_convolve: translation equivariance")
{
    SolverConfig cfg;
    cfg.grid_points = 401;
    double c = 0.6;
    auto base = free_convolve(kTwoAtom, kSemicircle, cfg);
    auto moved = free_convolve(kTwoAtom.shifted(c), kSemicircle, cfg);
    // Compare CDF quantile positions; pointwise density comparison is too
    // strict near the edges at grid resolution.
    for (double q : {0.2, 0.5, 0.8}) {
        auto quantile_of = [&](const DensityEstimate& e) {
            double lo = e.lambdas.front(), hi = e.lambdas.back();
            for (int it = 0; it < 100; ++it) {
                double mid = 0.5 * (lo + hi);
                (e.cdf(mid) < q ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
        double dx = base.lambdas[1] - base.lambdas[0];
        CHECK(std::abs(quantile_of(moved) - quantile_of(base) - c) <= 3 * dx);
    }
}

TEST_CASE("free_convolve: richardson extrapolation tightens the edge bias")
{
    SolverConfig cfg;
    cfg.lambda_grid = {1.6};
    Measure ar = Measure::arcsine(1.0);
    double exact = 2 * std::sqrt(3 - 1.6 * 1.6) / (M_PI * (4 - 1.6 * 1.6));

    auto plain = free_convolve(ar, ar, cfg);
    cfg.richardson = true;
    auto extr = free_convolve(ar, ar, cfg);
    CHECK(std::abs(extr.rho[0] - exact) < std::abs(plain.rho[0] - exact));
    CHECK(std::abs(extr.rho[0] - exact) < 1e-4);
}

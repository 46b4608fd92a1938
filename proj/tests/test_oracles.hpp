#pragma once

// Independent numerical oracles used by the test suites. Everything here is
// quadrature or enumeration, deliberately disjoint from the solver code
// paths it checks.

#include <cmath>
#include <complex>
#include <functional>

namespace test_oracle {

inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n)
{
    double h = (b - a) / n;
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i)
        s += f(a + i * h);
    return s * h;
}

/// Integral of a density over [lo, hi] via x = mid + rad*sin(theta) and the
/// composite midpoint rule; the substitution absorbs square-root edge
/// behavior, and staggered nodes never touch the (possibly singular)
/// endpoints themselves.
inline double edge_aware_mass(const std::function<double(double)>& density, double lo, double hi,
                              int n = 20000)
{
    double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
    double h = M_PI / n;
    double s = 0;
    for (int i = 0; i < n; ++i) {
        double t = -M_PI / 2 + (i + 0.5) * h;
        double x = mid + rad * std::sin(t);
        s += density(x) * rad * std::cos(t);
    }
    return s * h;
}

/// Same substitution for the k-th moment of the density.
inline double edge_aware_moment(const std::function<double(double)>& density, double lo, double hi,
                                int k, int n = 20000)
{
    return edge_aware_mass([&](double x) { return density(x) * std::pow(x, k); }, lo, hi, n);
}

/// Stieltjes transform of a density by the same substitution.
inline std::complex<double> edge_aware_stieltjes(const std::function<double(double)>& density,
                                                 double lo, double hi, std::complex<double> z,
                                                 int n = 20000)
{
    double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
    std::complex<double> s = 0;
    double h = M_PI / n;
    for (int i = 0; i < n; ++i) {
        double t = -M_PI / 2 + (i + 0.5) * h;
        double x = mid + rad * std::sin(t);
        s += density(x) * rad * std::cos(t) / (x - z);
    }
    return s * h;
}

} // namespace test_oracle

#include "freeconv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace freeconv {

namespace {

constexpr double kMassTol = 1e-9;
constexpr double kMergeTol = 1e-12;

// Catalan numbers and central binomial coefficients up to the k <= 8 limit.
constexpr double kCatalan[5] = {1, 1, 2, 5, 14};
constexpr double kCentralBinom[5] = {1, 2, 6, 20, 70};

} // namespace

Complex sqrt_branch(Complex z, double a, double b)
{
    // Principal square roots of both factors: the cuts along (-inf, a] and
    // (-inf, b] cancel on the common part, leaving a function analytic off
    // [a, b] that behaves like z at infinity.
    return std::sqrt(z - a) * std::sqrt(z - b);
}

Measure Measure::atoms(std::vector<Atom> points)
{
    if (points.empty())
        throw std::invalid_argument("Measure::atoms: empty atom list");
    std::sort(points.begin(), points.end(),
              [](const Atom& l, const Atom& r) { return l.position < r.position; });
    std::vector<Atom> merged;
    for (const Atom& p : points) {
        if (!std::isfinite(p.position) || !std::isfinite(p.mass))
            throw std::invalid_argument("Measure::atoms: non-finite atom");
        if (p.mass <= 0)
            throw std::invalid_argument("Measure::atoms: atom mass must be positive");
        if (!merged.empty() && p.position - merged.back().position <= kMergeTol)
            merged.back().mass += p.mass;   // near-duplicate poles are merged
        else
            merged.push_back(p);
    }
    double total = 0;
    for (const Atom& p : merged)
        total += p.mass;
    if (std::abs(total - 1.0) > kMassTol)
        throw std::invalid_argument("Measure::atoms: masses sum to " + std::to_string(total) +
                                    ", expected 1");
    Measure m;
    m.kind_ = Kind::Atoms;
    m.atoms_ = std::move(merged);
    return m;
}

Measure Measure::semicircle(double w2)
{
    if (!(w2 > 0) || !std::isfinite(w2))
        throw std::invalid_argument("Measure::semicircle: w2 must be positive");
    Measure m;
    m.kind_ = Kind::Semicircle;
    m.param_ = w2;
    return m;
}

Measure Measure::arcsine(double a)
{
    if (!(a > 0) || !std::isfinite(a))
        throw std::invalid_argument("Measure::arcsine: a must be positive");
    Measure m;
    m.kind_ = Kind::Arcsine;
    m.param_ = a;
    return m;
}

Measure Measure::grid_density(std::vector<double> xs, std::vector<double> ps)
{
    if (xs.size() < 2 || xs.size() != ps.size())
        throw std::invalid_argument("Measure::grid_density: need >= 2 nodes, xs and ps of equal length");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ps[i]) || ps[i] < 0)
            throw std::invalid_argument("Measure::grid_density: nodes must be finite, density nonnegative");
        if (i > 0 && xs[i] <= xs[i - 1])
            throw std::invalid_argument("Measure::grid_density: xs must be strictly increasing");
    }
    double total = 0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        total += 0.5 * (xs[i + 1] - xs[i]) * (ps[i] + ps[i + 1]);
    if (!(total > 0))
        throw std::invalid_argument("Measure::grid_density: zero total mass");
    for (double& p : ps)
        p /= total;

    Measure m;
    m.kind_ = Kind::GridDensity;
    m.xs_ = std::move(xs);
    m.ps_ = std::move(ps);
    m.grid_cdf_.resize(m.xs_.size());
    m.grid_cdf_[0] = 0;
    for (std::size_t i = 0; i + 1 < m.xs_.size(); ++i)
        m.grid_cdf_[i + 1] =
            m.grid_cdf_[i] + 0.5 * (m.xs_[i + 1] - m.xs_[i]) * (m.ps_[i] + m.ps_[i + 1]);
    return m;
}

Complex Measure::stieltjes(Complex z) const
{
    if (z.imag() == 0)
        throw std::domain_error("Measure::stieltjes: z must lie off the real axis");
    if (z.imag() < 0)
        return std::conj(stieltjes(std::conj(z)));

    switch (kind_) {
    case Kind::Atoms: {
        Complex s = 0;
        for (const Atom& p : atoms_)
            s += p.mass / (p.position - z);
        return s;
    }
    case Kind::Semicircle: {
        // Root of 2*w2*s^2 + z*s + 1 = 0 with Im s > 0 for Im z > 0.
        double radius = 2.0 * std::sqrt(2.0 * param_);
        return (-z + sqrt_branch(z, -radius, radius)) / (4.0 * param_);
    }
    case Kind::Arcsine:
        return -1.0 / sqrt_branch(z, -param_, param_);
    case Kind::GridDensity: {
        Complex s = 0;
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
            double h = xs_[i + 1] - xs_[i];
            s += 0.5 * h * (ps_[i] / (xs_[i] - z) + ps_[i + 1] / (xs_[i + 1] - z));
        }
        return s;
    }
    }
    throw std::logic_error("Measure::stieltjes: bad kind");
}

double Measure::moment(int k) const
{
    if (k < 0 || k > 8)
        throw std::invalid_argument("Measure::moment: k must be in [0, 8]");
    switch (kind_) {
    case Kind::Atoms: {
        double m = 0;
        for (const Atom& p : atoms_)
            m += p.mass * std::pow(p.position, k);
        return m;
    }
    case Kind::Semicircle:
        if (k % 2)
            return 0;
        return std::pow(2.0 * param_, k / 2) * kCatalan[k / 2];
    case Kind::Arcsine:
        if (k % 2)
            return 0;
        return std::pow(param_ * param_ / 4.0, k / 2) * kCentralBinom[k / 2];
    case Kind::GridDensity: {
        double m = 0;
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
            double h = xs_[i + 1] - xs_[i];
            m += 0.5 * h *
                 (ps_[i] * std::pow(xs_[i], k) + ps_[i + 1] * std::pow(xs_[i + 1], k));
        }
        return m;
    }
    }
    throw std::logic_error("Measure::moment: bad kind");
}

std::pair<double, double> Measure::support_bounds() const
{
    switch (kind_) {
    case Kind::Atoms:
        return {atoms_.front().position, atoms_.back().position};
    case Kind::Semicircle: {
        double radius = 2.0 * std::sqrt(2.0 * param_);
        return {-radius, radius};
    }
    case Kind::Arcsine:
        return {-param_, param_};
    case Kind::GridDensity: {
        // Closed support: a zero node adjacent to a positive one still
        // carries mass on the ramp segment between them.
        std::size_t lo = 0, hi = xs_.size() - 1;
        while (lo < hi && ps_[lo] == 0 && ps_[lo + 1] == 0)
            ++lo;
        while (hi > lo && ps_[hi] == 0 && ps_[hi - 1] == 0)
            --hi;
        return {xs_[lo], xs_[hi]};
    }
    }
    throw std::logic_error("Measure::support_bounds: bad kind");
}

double Measure::cdf(double x) const
{
    switch (kind_) {
    case Kind::Atoms: {
        double c = 0;
        for (const Atom& p : atoms_)
            if (p.position <= x)
                c += p.mass;
        return c;
    }
    case Kind::Semicircle: {
        double radius = 2.0 * std::sqrt(2.0 * param_);
        if (x <= -radius)
            return 0;
        if (x >= radius)
            return 1;
        double r2 = radius * radius;
        return 0.5 + (x * std::sqrt(r2 - x * x) + r2 * std::asin(x / radius)) /
                         (M_PI * r2);
    }
    case Kind::Arcsine:
        if (x <= -param_)
            return 0;
        if (x >= param_)
            return 1;
        return 0.5 + std::asin(x / param_) / M_PI;
    case Kind::GridDensity: {
        if (x <= xs_.front())
            return 0;
        if (x >= xs_.back())
            return 1;
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        double h = xs_[i + 1] - xs_[i], t = x - xs_[i];
        double slope = (ps_[i + 1] - ps_[i]) / h;
        return grid_cdf_[i] + ps_[i] * t + 0.5 * slope * t * t;
    }
    }
    throw std::logic_error("Measure::cdf: bad kind");
}

double Measure::quantile(double q) const
{
    if (!(q > 0) || !(q < 1))
        throw std::invalid_argument("Measure::quantile: q must lie in (0, 1)");
    if (kind_ == Kind::Atoms) {
        double c = 0;
        for (const Atom& p : atoms_) {
            c += p.mass;
            if (c >= q - 1e-15)
                return p.position;
        }
        return atoms_.back().position;
    }
    auto [lo, hi] = support_bounds();
    for (int iter = 0; iter < 200 && hi - lo > 0; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (cdf(mid) < q)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool Measure::is_point_mass(double* position) const
{
    if (kind_ != Kind::Atoms || atoms_.size() != 1)
        return false;
    if (position)
        *position = atoms_.front().position;
    return true;
}

Measure Measure::shifted(double c) const
{
    switch (kind_) {
    case Kind::Atoms: {
        std::vector<Atom> pts = atoms_;
        for (Atom& p : pts)
            p.position += c;
        return atoms(std::move(pts));
    }
    case Kind::Semicircle:
    case Kind::Arcsine: {
        if (c == 0)
            return *this;
        // Translated analytic families are rendered on staggered Chebyshev
        // nodes, which cluster at the edges and keep the arcsine
        // singularities off the grid.
        auto [lo, hi] = support_bounds();
        double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
        const std::size_t n = 8001;
        std::vector<double> xs(n), ps(n);
        for (std::size_t i = 0; i < n; ++i) {
            double x = mid - rad * std::cos((i + 0.5) * M_PI / n);
            xs[i] = x + c;
            if (kind_ == Kind::Semicircle)
                ps[i] = std::sqrt(std::max(0.0, 8 * param_ - x * x)) / (4 * M_PI * param_);
            else
                ps[i] = 1.0 / (M_PI * std::sqrt(param_ * param_ - x * x));
        }
        return grid_density(std::move(xs), std::move(ps));
    }
    case Kind::GridDensity: {
        std::vector<double> xs = xs_;
        for (double& x : xs)
            x += c;
        return grid_density(std::move(xs), ps_);
    }
    }
    throw std::logic_error("Measure::shifted: bad kind");
}

double Measure::density_sup() const
{
    switch (kind_) {
    case Kind::Atoms:
    case Kind::Arcsine:
        return std::numeric_limits<double>::infinity();
    case Kind::Semicircle:
        return std::sqrt(8.0 * param_) / (4.0 * M_PI * param_);
    case Kind::GridDensity:
        return *std::max_element(ps_.begin(), ps_.end());
    }
    throw std::logic_error("Measure::density_sup: bad kind");
}

} // namespace freeconv

#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

namespace freeconv {

using Complex = std::complex<double>;

/// One point mass: position and weight in (0,1].
struct Atom {
    double position = 0.0;
    double mass = 0.0;
};

/// A probability measure on the real line.
///
/// Four families are supported: finite atomic measures, the semicircle
/// law with variance parameter w2 (density (4*pi*w2)^{-1} sqrt(8*w2 - x^2)
/// on [-2*sqrt(2*w2), 2*sqrt(2*w2)]), the arcsine law on [-a, a]
/// (density 1/(pi*sqrt(a^2 - x^2))), and a gridded density given by nodes
/// xs with values ps, interpreted piecewise-linearly and normalized to
/// total mass 1 at construction.
///
/// Measures are immutable values; every operation is const and safe to
/// call concurrently.
class Measure {
public:
    enum class Kind { Atoms, Semicircle, Arcsine, GridDensity };

    static Measure atoms(std::vector<Atom> points);
    static Measure point_mass(double position) { return atoms({{position, 1.0}}); }
    static Measure semicircle(double w2);
    static Measure arcsine(double a);
    static Measure grid_density(std::vector<double> xs, std::vector<double> ps);

    Kind kind() const { return kind_; }

    /// Stieltjes transform s(z) = integral of m(dx)/(x - z), Im z != 0.
    /// Satisfies |s(z)| <= 1/|Im z| and Im s(z) * Im z > 0; values in the
    /// lower half plane follow by conjugate symmetry.
    Complex stieltjes(Complex z) const;

    /// k-th moment, exact for atoms/semicircle/arcsine, trapezoid for grids.
    /// Diagnostic use; k <= 8.
    double moment(int k) const;

    /// Smallest closed interval [a, b] containing the support.
    std::pair<double, double> support_bounds() const;

    /// Distribution function m((-inf, x]).
    double cdf(double x) const;

    /// Generalized inverse of the distribution function, q in (0, 1).
    double quantile(double q) const;

    /// Atoms of the measure (empty for the continuous families).
    const std::vector<Atom>& atoms_list() const { return atoms_; }

    /// True iff the measure is a single unit point mass; fills position.
    bool is_point_mass(double* position = nullptr) const;

    /// The same measure translated by c.
    Measure shifted(double c) const;

    // Family parameters (valid only for the matching kind).
    double semicircle_w2() const { return param_; }
    double arcsine_a() const { return param_; }
    const std::vector<double>& grid_xs() const { return xs_; }
    const std::vector<double>& grid_ps() const { return ps_; }

    /// Essential sup of the density; +inf for atomic measures and for the
    /// arcsine law (unbounded at the edges).
    double density_sup() const;

private:
    Measure() = default;

    Kind kind_ = Kind::Atoms;
    std::vector<Atom> atoms_;      // Kind::Atoms
    double param_ = 0.0;           // w2 or a
    std::vector<double> xs_, ps_;  // Kind::GridDensity
    std::vector<double> grid_cdf_; // cumulative trapezoid mass at each node
};

/// Square root of (z - a)(z - b) that is analytic off [a, b] and behaves
/// like z at infinity; the building block of the closed-form transforms.
Complex sqrt_branch(Complex z, double a, double b);

} // namespace freeconv

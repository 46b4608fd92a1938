#pragma once

#include "freeconv/measure.hpp"
#include "freeconv/solver.hpp"

#include <functional>
#include <vector>

namespace freeconv {

/// Exact description of a limiting measure: atoms, an absolutely continuous
/// density with its support interval, and the Stieltjes transform.
struct ClosedFormResult {
    std::vector<Atom> atoms;
    std::function<double(double)> density;  // 0 outside [support_lo, support_hi]
    double support_lo = 0;
    double support_hi = 0;
    std::function<Complex(Complex)> stieltjes;
};

/// Semicircle law with variance parameter w2: density
/// (4*pi*w2)^{-1} sqrt(8*w2 - x^2) on [-2*sqrt(2*w2), 2*sqrt(2*w2)].
ClosedFormResult semicircle_law(double w2);

/// Self-convolution of alpha*delta_0 + (1-alpha)*delta_a: atoms of mass
/// (2*alpha-1)_+ at 0 and (1-2*alpha)_+ at 2a plus the absolutely
/// continuous part sqrt((x_plus - x)(x - x_minus)) / (pi*|x*(x - 2a)|) on
/// [x_minus, x_plus], x_pm = a*(1 +- 2*sqrt(alpha*(1-alpha))).
ClosedFormResult two_atom_self_conv(double alpha, double a);

/// Self-convolution of the arcsine law on [-a, a]: density
/// 2*sqrt(3a^2 - x^2) / (pi*(4a^2 - x^2)) on [-sqrt(3)a, sqrt(3)a].
ClosedFormResult arcsine_self_conv(double a);

/// Variance parameter of the convolution of two semicircle laws.
double semicircle_add(double w1sq, double w2sq);

/// Deformed-GUE transform: solves f = f0(z + 2*w2*f) by damped Picard.
Complex deformed_gue_stieltjes(const TransformFn& f0, double w2, Complex z,
                               const SolverConfig& cfg = {});

/// Marchenko-Pastur transform for rank ratio c and atomic weight law sigma:
/// solves f = -1 / (z - c * sum_j w_j tau_j / (1 + tau_j f)).
Complex mp_stieltjes(double c, const Measure& sigma, Complex z, const SolverConfig& cfg = {});

/// Deformed Marchenko-Pastur: solves f = f0(z - c * sum_j w_j tau_j / (1 + tau_j f)).
Complex mp_deformation_stieltjes(const TransformFn& f0, double c, const Measure& sigma, Complex z,
                                 const SolverConfig& cfg = {});

} // namespace freeconv

#pragma once

#include "freeconv/measure.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace freeconv {

/// Stieltjes-transform evaluator of a unit measure on the upper half plane.
using TransformFn = std::function<Complex(Complex)>;

/// Solution of the subordination system at one spectral point z:
///   f(z) = f1(z - delta2/f),  f(z) = f2(z - delta1/f),
///   delta1 + delta2 = 1 + z*f.
struct SubordinationState {
    Complex z;
    Complex f;
    Complex delta1;
    Complex delta2;
    double residual = 0;  // max modulus of the three equation defects
    int iterations = 0;

    Complex omega1() const { return z - delta2 / f; }
    Complex omega2() const { return z - delta1 / f; }
};

struct SolverConfig {
    double y_start = 0;             // 0 = choose from the input support radii
    double y_target = 1e-3;         // Im z at which the density is read off
    double continuation_factor = 0.7;
    double damping = 0.5;
    double tol = 1e-12;             // residual target per point
    int max_iter = 10000;
    std::vector<double> lambda_grid;  // empty = automatic from support bounds
    int grid_points = 400;            // used when lambda_grid is empty
    bool richardson = false;          // two-point extrapolation in epsilon
};

/// Recovered limiting measure: density on a lambda grid plus detected atoms.
struct DensityEstimate {
    std::vector<double> lambdas;
    std::vector<double> rho;
    std::vector<Atom> atoms;
    double epsilon_used = 0;

    /// Trapezoid mass of rho plus atom masses (1 up to the quality defect).
    double total_mass() const;
    /// First moment of the estimate (trapezoid plus atoms).
    double mean() const;
    /// Distribution function of the estimate at x.
    double cdf(double x) const;
};

/// Non-convergence of the damped Picard iteration; carries the best state
/// reached so diagnostics can report where continuation broke.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, SubordinationState best)
        : std::runtime_error(what), best_state(best) {}
    SubordinationState best_state;
};

/// Solve the subordination system at a single point by damped Picard
/// iteration. The third equation is enforced exactly every sweep; the
/// returned state has residual <= cfg.tol or SolverError is thrown.
SubordinationState solve_at_point(const TransformFn& f1, const TransformFn& f2, Complex z,
                                  std::optional<SubordinationState> init,
                                  const SolverConfig& cfg);

/// Solve along the vertical ray Re z = lambda, walking Im z down from
/// y_start to y_target with geometric steps and warm starts. States at the
/// Im z values listed in capture_ys (descending, >= y_target final value
/// reached) are appended to captured when it is non-null.
SubordinationState solve_ray(const TransformFn& f1, const TransformFn& f2, double lambda,
                             double y_start, double y_target, const SolverConfig& cfg,
                             const std::vector<double>* capture_ys = nullptr,
                             std::vector<SubordinationState>* captured = nullptr);

/// One state per lambda-grid point at Im z = cfg.y_target. Serial reference.
std::vector<SubordinationState> solve_on_grid_serial(const Measure& n1, const Measure& n2,
                                                     const SolverConfig& cfg);

/// OpenMP-parallel version of solve_on_grid_serial; rays are independent,
/// results are identical to the serial reference for any thread count.
/// threads = 0 uses all available cores.
std::vector<SubordinationState> solve_on_grid(const Measure& n1, const Measure& n2,
                                              const SolverConfig& cfg, int threads = 0);

/// Stieltjes inversion rho(lambda) = Im f(lambda + i*eps)/pi, clipped at 0.
/// The Poisson kernels of the given atoms are subtracted from rho so the
/// density describes the absolutely continuous part only; no mass
/// renormalization is applied. All states must share the same Im z.
DensityEstimate recover_density(const std::vector<SubordinationState>& states,
                                const std::vector<Atom>& atoms = {});

/// Richardson variant: states at eps and at 2*eps, combined pointwise as
/// 2*rho(eps) - rho(2*eps) before clipping.
DensityEstimate recover_density_richardson(const std::vector<SubordinationState>& states_eps,
                                           const std::vector<SubordinationState>& states_2eps,
                                           const std::vector<Atom>& atoms = {});

/// Estimate atom masses of the convolution at the candidate positions via
/// eps * Im f(x + i*eps) at eps in {1e-3, 5e-4, 2.5e-4}, Richardson
/// extrapolated; candidates with extrapolated mass > 0.01 are reported.
std::vector<Atom> detect_atoms(const Measure& n1, const Measure& n2,
                               const std::vector<double>& candidates, const SolverConfig& cfg);

/// R-transform R(s) = -1/s - z(s) where z(s) inverts the transform
/// (Newton from z0 = -1/s). |s| must be small enough that z(s) lies in the
/// asymptotic regime.
Complex r_transform_eval(const TransformFn& transform, Complex s);
Complex r_transform_eval(const Measure& m, Complex s);

/// Max over s_points of |R_N(s) - R_N1(s) - R_N2(s)| where R_N comes from
/// the solved convolution evaluated on demand.
double check_r_additivity(const Measure& n1, const Measure& n2,
                          const std::vector<Complex>& s_points,
                          const SolverConfig& cfg = {});

/// Full pipeline: grid solve, atom detection, density recovery. Point-mass
/// inputs short-circuit to the exact shift formula.
DensityEstimate free_convolve(const Measure& n1, const Measure& n2, const SolverConfig& cfg = {},
                              int threads = 0);

/// Automatic lambda grid for the pair (n1, n2): grid_points uniform nodes on
/// [a1 + a2 - margin, b1 + b2 + margin] with margin 5% of the summed width.
std::vector<double> auto_lambda_grid(const Measure& n1, const Measure& n2, int grid_points);

/// Starting height of the continuation: 8 * (1 + max support radius) or
/// cfg.y_start when that is larger, then doubled until the asymptotic
/// regime check |delta_r(i y0)| <= 0.1 holds.
double effective_y_start(const Measure& n1, const Measure& n2, const SolverConfig& cfg);

} // namespace freeconv

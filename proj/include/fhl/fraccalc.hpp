#pragma once

#include <memory>

#include "fhl/grid.hpp"

namespace fhl {

/// Fractional order alpha in (0, 1].
struct FracOrder {
  double alpha;
  explicit FracOrder(double a);
};

/// Output of the Weyl-type derivatives. Node values are finite everywhere; the
/// value at the boundary node (t = 0 for left operators, t = T for right ones)
/// is the average of the derivative of the first-cell interpolant over that
/// cell. `boundary_singular` is set when the exact derivative diverges there.
struct FracDerivative {
  SampledFunction values;
  bool boundary_singular = false;
};

/// (I^alpha_{0+} f)(t_k) by product integration of the piecewise-linear
/// interpolant of f against (t - y)^{alpha - 1} / Gamma(alpha).
SampledFunction rl_integral_left(const SampledFunction& f, FracOrder alpha);

/// (I^alpha_{T-} f)(t_k), the mirror image of rl_integral_left.
SampledFunction rl_integral_right(const SampledFunction& f, FracOrder alpha);

/// D^alpha_{0+} f in Weyl form, alpha in (0, 1).
FracDerivative weyl_derivative_left(const SampledFunction& f, FracOrder alpha);

/// Real Weyl bracket of D^alpha_{T-} f (the unit factor (-1)^alpha is omitted).
FracDerivative weyl_derivative_right(const SampledFunction& f, FracOrder alpha);

/// Integral of f dg over [0, T] through paired fractional derivatives of orders
/// alpha and 1 - alpha. Vector-valued inputs are paired componentwise and summed.
double zahle_integral(const SampledFunction& f, const SampledFunction& g, FracOrder alpha);

/// K_H f = I^1 [ s^{H-1/2} I^{H-1/2} [ s^{1/2-H} f ] ], 1/2 <= H < 1.
SampledFunction kh_apply(const SampledFunction& f, double H);

/// The integrand of the outer ordinary integral in kh_apply, i.e. (K_H f)'.
SampledFunction kh_apply_derivative(const SampledFunction& f, double H);

/// K_H applied to a piecewise-constant f. Every cell contribution is the
/// exact integral of the composed kernel, so the result is exact at nodes.
SampledFunction kh_apply_step(const StepFunction& f, double H);

/// The dense matrix used by kh_apply_step: row k holds the weights of the cell
/// values contributing to (K_H f)(t_k). Cached per (grid, H).
std::shared_ptr<const Eigen::MatrixXd> kh_step_matrix(const TimeGrid& grid, double H);

/// K_H^{-1} h for absolutely continuous h, given h' at the nodes, 1/2 <= H < 1,
/// through the explicit boundary / weight-difference / increment expansion.
FracDerivative kh_inverse_apply(const SampledFunction& hprime, double H);

/// Same operator by an independent route: s^{H-1/2} d/ds I^{3/2-H}[s^{1/2-H} h'],
/// with h' taken piecewise constant from the node values of h and the outer
/// derivative by finite differences. Less accurate near 0; used for cross-checks.
SampledFunction kh_inverse_apply_rl(const SampledFunction& h, double H);

/// C_0(H) = integral over (0,1) of (s^{1/2-H} - 1)(1 - s)^{-1/2-H} ds, 1/2 < H < 1.
double c0_constant(double H);
/// Same with an explicit number of Gauss panels per half-interval.
double c0_constant(double H, int panels);

/// kappa_H such that kappa_H * K_H maps white noise to standard fBm
/// (unit variance at t = 1).
double kh_normalization(double H);

/// 1 / kappa_H^2: covariance of K_H-transformed white noise relative to R_H.
double kh_variance_factor(double H);

}  // namespace fhl

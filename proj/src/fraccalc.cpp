#include "fhl/fraccalc.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "cache.hpp"
#include "fhl/errors.hpp"
#include "quad.hpp"

namespace fhl {

using Eigen::Index;
using Eigen::MatrixXd;
using detail::MatrixPtr;

namespace {

enum MatrixKind { kRlLeft = 1, kWeylLeft, kKhDerivative, kKhStep, kKhInverse };


TimeGrid reflected(const TimeGrid& g) {
  const double T = g.horizon();
  const std::size_t n = g.cells();
  std::vector<double> r(n + 1);
  for (std::size_t i = 0; i <= n; ++i) r[i] = T - g[n - i];
  r[0] = 0.0;
  r[n] = T;
  return TimeGrid(std::move(r));
}

// P M P with P the index reversal.
MatrixXd reverse_both(const MatrixXd& m) { return m.reverse(); }

void check_kh_range(double H, bool allow_half) {
  const bool ok = allow_half ? (H >= 0.5 && H < 1.0) : (H > 0.5 && H < 1.0);
  if (!ok) {
    throw UnsupportedParameterError("Hurst index " + std::to_string(H) +
                                    (allow_half ? " outside [1/2, 1)" : " outside (1/2, 1)"));
  }
}

MatrixXd build_rl_left(const TimeGrid& g, double alpha) {
  const Index n = static_cast<Index>(g.cells());
  MatrixXd m = MatrixXd::Zero(n + 1, n + 1);
  const double c = 1.0 / std::tgamma(alpha);
  for (Index k = 1; k <= n; ++k) {
    const double t = g[k];
    for (Index j = 0; j < k; ++j) {
      const auto w = detail::power_hat_moments(t - g[j + 1], t - g[j], alpha - 1.0);
      m(k, j + 1) += c * w.near_end;
      m(k, j) += c * w.far_end;
    }
  }
  return m;
}

MatrixXd build_weyl_left(const TimeGrid& g, double alpha) {
  const Index n = static_cast<Index>(g.cells());
  MatrixXd m = MatrixXd::Zero(n + 1, n + 1);
  const double c = 1.0 / std::tgamma(1.0 - alpha);
  {
    // Cell average of the derivative of the first-cell interpolant.
    const double h = g[1];
    const double a = std::pow(h, -alpha) / std::tgamma(2.0 - alpha);
    const double b = std::pow(h, -alpha) / std::tgamma(3.0 - alpha);
    m(0, 0) = a - b;
    m(0, 1) = b;
  }
  for (Index k = 1; k <= n; ++k) {
    const double t = g[k];
    const double hk = t - g[k - 1];
    const double last = c * std::pow(hk, -alpha) / (1.0 - alpha);
    m(k, k) += last;
    m(k, k - 1) -= alpha * last;
    for (Index j = 0; j + 1 < k; ++j) {
      const auto w = detail::power_hat_moments(t - g[j + 1], t - g[j], -alpha - 1.0);
      m(k, j + 1) -= c * alpha * w.near_end;
      m(k, j) -= c * alpha * w.far_end;
    }
  }
  return m;
}

// Lower incomplete beta B(x; a, b), unnormalized.
double ibeta_lower(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return boost::math::beta(a, b);
  return boost::math::beta(a, b, x);
}

MatrixXd build_kh_derivative(const TimeGrid& g, double alpha) {
  const Index n = static_cast<Index>(g.cells());
  MatrixXd m = MatrixXd::Zero(n + 1, n + 1);
  const double c = 1.0 / std::tgamma(alpha);
  std::vector<double> b0(n + 1), b1(n + 1);
  for (Index k = 1; k <= n; ++k) {
    const double t = g[k];
    for (Index j = 0; j <= k; ++j) {
      const double x = (j == k) ? 1.0 : g[j] / t;
      b0[j] = ibeta_lower(1.0 - alpha, alpha, x);
      b1[j] = t * ibeta_lower(2.0 - alpha, alpha, x);
    }
    const double scale = c * std::pow(t, alpha);
    for (Index j = 0; j < k; ++j) {
      const double h = g[j + 1] - g[j];
      const double m0 = b0[j + 1] - b0[j];
      const double m1 = b1[j + 1] - b1[j];
      m(k, j) += scale * (g[j + 1] * m0 - m1) / h;
      m(k, j + 1) += scale * (m1 - g[j] * m0) / h;
    }
  }
  return m;
}

// Cumulative kernel F(t, x) = integral over u in [0, x] of the composed kernel
// u^{-a} / Gamma(a) * integral_u^t s^a (s - u)^{a-1} ds, reduced by Fubini and
// one integration by parts to incomplete beta functions.
double kh_cumulative_kernel(double t, double x, double alpha, double scale) {
  if (x <= 0.0) return 0.0;
  const double ta1 = std::pow(t, alpha + 1.0);
  if (x >= t) return scale * ta1 * boost::math::beta(1.0 - alpha, alpha);
  const double y = x / t;
  const double lower = boost::math::beta(1.0 - alpha, alpha, y);
  // Upper tail of the beta integral with first parameter -2a, via the
  // recurrence that shifts it to 1 - 2a.
  const double tail = (alpha * boost::math::betac(1.0 - 2.0 * alpha, alpha, y) +
                       std::pow(y, -2.0 * alpha) * std::pow(1.0 - y, alpha)) /
                      (2.0 * alpha);
  return scale * (ta1 * lower + std::pow(x, alpha + 1.0) * tail);
}

MatrixXd build_kh_step(const TimeGrid& g, double alpha) {
  const Index n = static_cast<Index>(g.cells());
  MatrixXd m = MatrixXd::Zero(n + 1, n);
  if (alpha == 0.0) {
    for (Index k = 1; k <= n; ++k)
      for (Index j = 0; j < k; ++j) m(k, j) = g[j + 1] - g[j];
    return m;
  }
  const double scale = 1.0 / (std::tgamma(alpha) * (alpha + 1.0));
  std::vector<double> F(n + 1);
  for (Index k = 1; k <= n; ++k) {
    const double t = g[k];
    for (Index j = 0; j <= k; ++j) F[j] = kh_cumulative_kernel(t, g[j], alpha, scale);
    for (Index j = 0; j < k; ++j) m(k, j) = F[j + 1] - F[j];
  }
  return m;
}

// r^{-a} - th^{-a} without cancellation near th = r.
double power_gap(double r, double th, double alpha) {
  return std::pow(th, -alpha) * std::expm1(alpha * std::log1p((th - r) / r));
}

MatrixXd build_kh_inverse(const TimeGrid& g, double alpha) {
  const Index n = static_cast<Index>(g.cells());
  // Boundary and increment terms together are exactly the Weyl derivative.
  MatrixXd m = build_weyl_left(g, alpha);
  const double c = 1.0 / std::tgamma(1.0 - alpha);
  // Node 0: cell average of the leading r^{-a} behaviour.
  m.row(0).setZero();
  m(0, 0) = std::tgamma(1.0 - alpha) / ((1.0 - alpha) * std::tgamma(1.0 - 2.0 * alpha)) *
            std::pow(g[1], -alpha);
  const auto& q = detail::UnitGauss<8>::get();
  for (Index k = 1; k <= n; ++k) {
    const double r = g[k];
    const double pref = c * alpha * std::pow(r, alpha);
    auto kernel = [&](double th) { return power_gap(r, th, alpha) * std::pow(r - th, -1.0 - alpha); };
    for (Index j = 0; j < k; ++j) {
      const double lo = g[j], hi = g[j + 1], h = hi - lo;
      double w_lo = 0.0, w_hi = 0.0;
      if (j == 0 || j + 1 == k) {
        w_lo = detail::tanh_sinh([&](double th) { return kernel(th) * (hi - th) / h; }, lo, hi);
        w_hi = detail::tanh_sinh([&](double th) { return kernel(th) * (th - lo) / h; }, lo, hi);
      } else {
        for (unsigned i = 0; i < 8; ++i) {
          const double u = q.x[i];
          const double kv = q.w[i] * kernel(lo + h * u);
          w_lo += kv * (1.0 - u);
          w_hi += kv * u;
        }
        w_lo *= h;
        w_hi *= h;
      }
      m(k, j) += pref * w_lo;
      m(k, j + 1) += pref * w_hi;
    }
  }
  return m;
}

MatrixPtr cached(const TimeGrid& g, double param, MatrixKind kind, MatrixXd (*build)(const TimeGrid&, double)) {
  return detail::MatrixCache::global().get(g, param, kind, [&] { return build(g, param); });
}

SampledFunction apply(const MatrixXd& m, const SampledFunction& f) { return {f.grid, m * f.values}; }

}  // namespace

FracOrder::FracOrder(double a) : alpha(a) {
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("fractional order must lie in (0, 1], got " + std::to_string(a));
}

SampledFunction rl_integral_left(const SampledFunction& f, FracOrder alpha) {
  return apply(*cached(f.grid, alpha.alpha, kRlLeft, build_rl_left), f);
}

SampledFunction rl_integral_right(const SampledFunction& f, FracOrder alpha) {
  const MatrixXd m = reverse_both(*cached(reflected(f.grid), alpha.alpha, kRlLeft, build_rl_left));
  return apply(m, f);
}

FracDerivative weyl_derivative_left(const SampledFunction& f, FracOrder alpha) {
  if (alpha.alpha >= 1.0) throw DomainError("Weyl derivative needs alpha < 1");
  const auto m = cached(f.grid, alpha.alpha, kWeylLeft, build_weyl_left);
  return {apply(*m, f), !f.values.row(0).isZero(0.0)};
}

FracDerivative weyl_derivative_right(const SampledFunction& f, FracOrder alpha) {
  if (alpha.alpha >= 1.0) throw DomainError("Weyl derivative needs alpha < 1");
  const MatrixXd m = reverse_both(*cached(reflected(f.grid), alpha.alpha, kWeylLeft, build_weyl_left));
  const Index n = f.values.rows() - 1;
  return {apply(m, f), !f.values.row(n).isZero(0.0)};
}

double zahle_integral(const SampledFunction& f, const SampledFunction& g, FracOrder alpha) {
  require_same_grid(f.grid, g.grid, "zahle_integral");
  if (f.dim() != g.dim()) throw InvalidInputError("zahle_integral: dimension mismatch");
  if (alpha.alpha >= 1.0) throw DomainError("zahle_integral needs alpha < 1");
  const TimeGrid& grid = f.grid;
  const Index n = static_cast<Index>(grid.cells());
  const double a = alpha.alpha;

  MatrixXd f_rem = f.values;
  f_rem.rowwise() -= f.values.row(0);
  MatrixXd g_tail = g.values;
  g_tail.rowwise() -= g.values.row(n);

  const MatrixXd left = weyl_derivative_left({grid, f_rem}, alpha).values.values;
  const MatrixXd right = weyl_derivative_right({grid, g_tail}, FracOrder(1.0 - a)).values.values;

  double total = 0.0;
  for (Index c = 0; c < left.cols(); ++c) {
    double s = 0.0;
    for (Index k = 0; k < n; ++k) {
      s += 0.5 * grid.step(k) * (left(k, c) * right(k, c) + left(k + 1, c) * right(k + 1, c));
    }
    // Constant part f(0): its left derivative is f(0) t^{-a} / Gamma(1 - a).
    double w = 0.0;
    for (Index j = 0; j < n; ++j) {
      const auto m = detail::power_hat_moments(grid[j], grid[j + 1], -a);
      w += m.near_end * right(j, c) + m.far_end * right(j + 1, c);
    }
    s += f.values(0, c) * w / std::tgamma(1.0 - a);
    total -= s;
  }
  return total;
}

SampledFunction kh_apply_derivative(const SampledFunction& f, double H) {
  check_kh_range(H, true);
  const double alpha = H - 0.5;
  if (alpha == 0.0) return f;
  return apply(*cached(f.grid, alpha, kKhDerivative, build_kh_derivative), f);
}

SampledFunction kh_apply(const SampledFunction& f, double H) {
  const SampledFunction psi = kh_apply_derivative(f, H);
  MatrixXd out = MatrixXd::Zero(psi.values.rows(), psi.values.cols());
  for (Index k = 1; k < out.rows(); ++k) {
    out.row(k) = out.row(k - 1) + 0.5 * f.grid.step(k - 1) * (psi.values.row(k - 1) + psi.values.row(k));
  }
  return {f.grid, std::move(out)};
}

std::shared_ptr<const Eigen::MatrixXd> kh_step_matrix(const TimeGrid& grid, double H) {
  check_kh_range(H, true);
  return cached(grid, H - 0.5, kKhStep, build_kh_step);
}

SampledFunction kh_apply_step(const StepFunction& f, double H) {
  const auto m = kh_step_matrix(f.grid, H);
  return {f.grid, (*m) * f.cell_values};
}

FracDerivative kh_inverse_apply(const SampledFunction& hprime, double H) {
  check_kh_range(H, true);
  const double alpha = H - 0.5;
  if (alpha == 0.0) return {hprime, false};
  const auto m = cached(hprime.grid, alpha, kKhInverse, build_kh_inverse);
  return {apply(*m, hprime), !hprime.values.row(0).isZero(0.0)};
}

SampledFunction kh_inverse_apply_rl(const SampledFunction& h, double H) {
  check_kh_range(H, true);
  const double alpha = H - 0.5;
  if (alpha == 0.0) {
    // Derivative of the piecewise-linear h, reported at nodes.
    MatrixXd d(h.values.rows(), h.values.cols());
    const Index n = d.rows() - 1;
    for (Index k = 0; k < n; ++k) d.row(k) = (h.values.row(k + 1) - h.values.row(k)) / h.grid.step(k);
    d.row(n) = d.row(n - 1);
    return {h.grid, d};
  }
  const TimeGrid& g = h.grid;
  const Index n = static_cast<Index>(g.cells());
  const double a = 1.0 - alpha;
  const double c = 1.0 / std::tgamma(a);
  MatrixXd phi = MatrixXd::Zero(n + 1, h.values.cols());
  std::vector<double> b(n + 1);
  for (Index k = 1; k <= n; ++k) {
    const double x = g[k];
    for (Index j = 0; j <= k; ++j) b[j] = ibeta_lower(a, a, j == k ? 1.0 : g[j] / x);
    const double scale = c * std::pow(x, 1.0 - 2.0 * alpha);
    for (Index j = 0; j < k; ++j) {
      phi.row(k) += scale * (b[j + 1] - b[j]) * (h.values.row(j + 1) - h.values.row(j)) / g.step(j);
    }
  }
  MatrixXd v(n + 1, h.values.cols());
  for (Index k = 1; k <= n; ++k) {
    // Three-point derivative on a non-uniform stencil.
    Index i0, i1, i2;
    if (k == n) {
      i0 = n - 2; i1 = n - 1; i2 = n;
    } else {
      i0 = k - 1; i1 = k; i2 = k + 1;
    }
    const double x0 = g[i0], x1 = g[i1], x2 = g[i2], x = g[k];
    const double c0 = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    const double c1 = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    const double c2 = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    v.row(k) = std::pow(x, alpha) * (c0 * phi.row(i0) + c1 * phi.row(i1) + c2 * phi.row(i2));
  }
  v.row(0) = v.row(1);
  return {g, v};
}

double c0_constant(double H, int panels) {
  if (!(H > 0.5 && H < 1.0)) throw DomainError("C0 needs 1/2 < H < 1, got " + std::to_string(H));
  if (panels < 1) throw DomainError("C0 needs at least one panel");
  const double a = H - 0.5;
  // Power substitutions s = w^p near 0 and 1 - s = z^p near 1 leave smooth integrands.
  const double p = 2.0 / (1.0 - a);
  const double w_half = std::pow(0.5, 1.0 / p);
  auto near_zero = [&](double w) {
    const double s = std::pow(w, p);
    // (s^{-a} - 1) ds with ds = p w^{p-1} dw
    const double jac = p * std::pow(w, p * (1.0 - a) - 1.0) - p * std::pow(w, p - 1.0);
    return jac * std::pow(1.0 - s, -1.0 - a);
  };
  auto near_one = [&](double z) {
    const double r = std::pow(z, p);  // 1 - s
    const double gap = std::expm1(-a * std::log1p(-r));
    return gap * p * std::pow(z, p * (1.0 - a) - 1.0) / r;
  };
  return detail::composite_gauss(near_zero, 0.0, w_half, panels) +
         detail::composite_gauss(near_one, 0.0, w_half, panels);
}

double c0_constant(double H) { return c0_constant(H, 16); }

double kh_normalization(double H) {
  check_kh_range(H, true);
  const double a = H - 0.5;
  if (a == 0.0) return 1.0;
  const double cH = std::sqrt(H * (2.0 * H - 1.0) / boost::math::beta(2.0 - 2.0 * H, a));
  return cH * std::tgamma(a);
}

double kh_variance_factor(double H) {
  const double k = kh_normalization(H);
  return 1.0 / (k * k);
}

}  // namespace fhl

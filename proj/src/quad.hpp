#pragma once

// Internal quadrature helpers shared by the operator modules.

#include <array>
#include <cmath>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace fhl::detail {

/// Gauss-Legendre rule of order N mapped to [0, 1].
template <unsigned N>
struct UnitGauss {
  std::array<double, N> x{};
  std::array<double, N> w{};

  UnitGauss() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    // Boost stores the non-negative half; a zero node (odd N) comes first.
    unsigned k = 0;
    for (unsigned i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) {
        x[k] = 0.5;
        w[k] = 0.5 * wt[i];
        ++k;
        continue;
      }
      x[k] = 0.5 * (1.0 - a[i]);
      w[k] = 0.5 * wt[i];
      ++k;
      x[k] = 0.5 * (1.0 + a[i]);
      w[k] = 0.5 * wt[i];
      ++k;
    }
  }

  static const UnitGauss& get() {
    static const UnitGauss rule;
    return rule;
  }
};

/// Moments of |t - y|^gamma against the two hat functions of the cell [lo, hi]:
/// first  = (1/h) * integral |t-y|^gamma (hi - y) dy   (weight of f(lo))
/// second = (1/h) * integral |t-y|^gamma (y - lo) dy   (weight of f(hi))
/// `near` and `far` are the distances from t to the closer and farther cell end
/// (near >= 0). The kernel is integrable when gamma > -1 or near > 0.
struct HatMoments {
  double near_end;  // weight of the value at the end closer to t
  double far_end;   // weight of the value at the end farther from t
};

inline HatMoments power_hat_moments(double near, double far, double gamma) {
  const double h = far - near;
  if (near < 2.0 * h) {
    // Exact antiderivatives in sigma = |t - y|; sigma runs over [near, far].
    const double g1 = gamma + 1.0, g2 = gamma + 2.0;
    double m0, m1;
    if (std::abs(g1) < 1e-14) {
      m0 = std::log(far / near);
    } else {
      m0 = (std::pow(far, g1) - (near > 0.0 ? std::pow(near, g1) : 0.0)) / g1;
    }
    m1 = (std::pow(far, g2) - (near > 0.0 ? std::pow(near, g2) : 0.0)) / g2;
    // Value at the near end carries (far - sigma)/h, at the far end (sigma - near)/h.
    return {(far * m0 - m1) / h, (m1 - near * m0) / h};
  }
  const auto& q = UnitGauss<8>::get();
  double wn = 0.0, wf = 0.0;
  for (unsigned i = 0; i < 8; ++i) {
    const double u = q.x[i];
    const double k = q.w[i] * std::pow(near + h * u, gamma);
    wn += k * (1.0 - u);
    wf += k * u;
  }
  return {wn * h, wf * h};
}

/// Integral of f over [a, b] by composite Gauss-Legendre with `panels` panels.
template <unsigned N = 10, class F>
double composite_gauss(F&& f, double a, double b, int panels) {
  const auto& q = UnitGauss<N>::get();
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    double part = 0.0;
    for (unsigned i = 0; i < N; ++i) part += q.w[i] * f(lo + h * q.x[i]);
    s += part * h;
  }
  return s;
}

/// tanh-sinh integration over [a, b] for integrands with endpoint singularities.
template <class F>
double tanh_sinh(F&& f, double a, double b) {
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, a, b);
}

}  // namespace fhl::detail

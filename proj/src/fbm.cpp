#include "fhl/fbm.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <string>

#include "cache.hpp"
#include "fhl/errors.hpp"
#include "fhl/fraccalc.hpp"

namespace fhl {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

constexpr int kCholeskyKind = 101;

void check_dim(std::size_t d) {
  if (d < 1) throw InvalidInputError("dimension must be at least 1");
}

MatrixXd increment_covariance_factor(const TimeGrid& g, double H) {
  const Index n = static_cast<Index>(g.cells());
  const double p = 2.0 * H;
  auto pw = [p](double x) { return std::pow(std::abs(x), p); };
  MatrixXd c(n, n);
  for (Index i = 0; i < n; ++i) {
    c(i, i) = pw(g.step(i));
    for (Index j = 0; j < i; ++j) {
      const double v = 0.5 * (pw(g[i + 1] - g[j]) + pw(g[i] - g[j + 1]) - pw(g[i + 1] - g[j + 1]) - pw(g[i] - g[j]));
      c(i, j) = c(j, i) = v;
    }
  }
  Eigen::LLT<MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw InvalidGridError("fBm increment covariance is not positive definite on this grid");
  }
  return llt.matrixL();
}

}  // namespace

MatrixXd WienerPath::density() const {
  MatrixXd d = increments;
  for (Index k = 0; k < d.rows(); ++k) d.row(k) /= grid.step(static_cast<std::size_t>(k));
  return d;
}

double covariance(double t, double s, double H) {
  if (t < 0.0 || s < 0.0) throw DomainError("covariance needs non-negative times");
  if (!(H > 0.0 && H < 1.0)) throw DomainError("Hurst index must lie in (0, 1)");
  const double p = 2.0 * H;
  return 0.5 * (std::pow(t, p) + std::pow(s, p) - std::pow(std::abs(t - s), p));
}

WienerPath sample_wiener(const TimeGrid& grid, std::size_t d, const RngSeed& seed) {
  check_dim(d);
  auto eng = make_engine(seed);
  std::normal_distribution<double> z;
  const Index n = static_cast<Index>(grid.cells());
  MatrixXd inc(n, static_cast<Index>(d));
  for (Index c = 0; c < inc.cols(); ++c)
    for (Index k = 0; k < n; ++k) inc(k, c) = std::sqrt(grid.step(k)) * z(eng);
  return {grid, std::move(inc)};
}

FbmPath sample_direct(const TimeGrid& grid, double H, std::size_t d, const RngSeed& seed) {
  check_dim(d);
  if (!(H > 0.0 && H < 1.0)) throw UnsupportedParameterError("Hurst index must lie in (0, 1)");
  const auto L = detail::MatrixCache::global().get(grid, H, kCholeskyKind,
                                                   [&] { return increment_covariance_factor(grid, H); });
  auto eng = make_engine(seed);
  std::normal_distribution<double> z;
  const Index n = static_cast<Index>(grid.cells());
  MatrixXd noise(n, static_cast<Index>(d));
  for (Index c = 0; c < noise.cols(); ++c)
    for (Index k = 0; k < n; ++k) noise(k, c) = z(eng);
  const MatrixXd inc = L->triangularView<Eigen::Lower>() * noise;
  MatrixXd values = MatrixXd::Zero(n + 1, static_cast<Index>(d));
  for (Index k = 0; k < n; ++k) values.row(k + 1) = values.row(k) + inc.row(k);
  return {grid, H, std::move(values), std::nullopt};
}

FbmPath fbm_from_wiener(const WienerPath& w, double H) {
  const double kappa = kh_normalization(H);
  MatrixXd values = kh_apply_step(StepFunction(w.grid, w.density()), H).values * kappa;
  return {w.grid, H, std::move(values), w};
}

FbmPath sample_volterra(const TimeGrid& grid, double H, std::size_t d, const RngSeed& seed) {
  if (!(H >= 0.5 && H < 1.0)) throw UnsupportedParameterError("Volterra route needs 1/2 <= H < 1");
  return fbm_from_wiener(sample_wiener(grid, d, seed), H);
}

double holder_norm(const TimeGrid& grid, const MatrixXd& values, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("Hoelder exponent must lie in (0, 1]");
  const Index n = values.rows();
  double best = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double q = (values.row(j) - values.row(i)).norm() / std::pow(grid[j] - grid[i], lambda);
      if (q > best) best = q;
    }
  return best;
}

double holder_norm(const FbmPath& path, double lambda) { return holder_norm(path.grid, path.values, lambda); }

void write_csv(std::ostream& out, const FbmPath& path) {
  out << "t";
  for (std::size_t c = 0; c < path.dim(); ++c) out << ",B" << (c + 1);
  out << '\n' << std::setprecision(17);
  for (Index k = 0; k < path.values.rows(); ++k) {
    out << path.grid[k];
    for (Index c = 0; c < path.values.cols(); ++c) out << ',' << path.values(k, c);
    out << '\n';
  }
}

}  // namespace fhl

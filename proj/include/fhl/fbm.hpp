#pragma once

#include <optional>
#include <ostream>

#include "fhl/grid.hpp"
#include "fhl/parallel.hpp"

namespace fhl {

/// Brownian increments on a grid: row k holds W(t_{k+1}) - W(t_k), one column
/// per component.
struct WienerPath {
  TimeGrid grid;
  Eigen::MatrixXd increments;

  /// Increments divided by the cell widths (the piecewise-constant density of W).
  Eigen::MatrixXd density() const;
};

/// Fractional Brownian motion sampled at the nodes of a grid. `wiener` is set
/// only for paths built from Brownian increments (the Volterra route).
struct FbmPath {
  TimeGrid grid;
  double H;
  Eigen::MatrixXd values;
  std::optional<WienerPath> wiener;

  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
};

/// R_H(t, s) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2.
double covariance(double t, double s, double H);

/// i.i.d. N(0, dt_k) increments for d components.
WienerPath sample_wiener(const TimeGrid& grid, std::size_t d, const RngSeed& seed);

/// Exact Gaussian sampling by Cholesky factorization of the increment covariance.
/// Accepts 0 < H < 1.
FbmPath sample_direct(const TimeGrid& grid, double H, std::size_t d, const RngSeed& seed);

/// fBm as the normalized K_H transform of a Wiener path; 1/2 <= H < 1.
FbmPath sample_volterra(const TimeGrid& grid, double H, std::size_t d, const RngSeed& seed);

/// The deterministic map used by sample_volterra.
FbmPath fbm_from_wiener(const WienerPath& w, double H);

/// max over node pairs of |f(t) - f(s)| / |t - s|^lambda (Euclidean norm for d > 1).
double holder_norm(const FbmPath& path, double lambda);
double holder_norm(const TimeGrid& grid, const Eigen::MatrixXd& values, double lambda);

/// CSV with columns t, B_1..B_d.
void write_csv(std::ostream& out, const FbmPath& path);

}  // namespace fhl

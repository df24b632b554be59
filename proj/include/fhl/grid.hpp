#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fhl {

/// Strictly increasing time nodes 0 = t_0 < t_1 < ... < t_n = T.
///
/// Copies share the node storage, so passing grids around by value is cheap.
/// Two grids compare equal when their nodes are bit-identical.
class TimeGrid {
 public:
  /// Validates `nodes`; throws InvalidGridError on violation.
  explicit TimeGrid(std::vector<double> nodes);

  /// `cells` equal cells on [0, horizon].
  static TimeGrid uniform(std::size_t cells, double horizon);

  /// Uniform grid whose final cell [T - h, T] is subdivided geometrically:
  /// nodes T - h * ratio^k for k = 1..levels are inserted.
  static TimeGrid uniform_refined(std::size_t cells, double horizon, std::size_t levels,
                                  double ratio = 0.5);

  std::span<const double> nodes() const { return {nodes_->data(), nodes_->size()}; }
  double operator[](std::size_t k) const { return (*nodes_)[k]; }
  std::size_t size() const { return nodes_->size(); }
  std::size_t cells() const { return nodes_->size() - 1; }
  double horizon() const { return nodes_->back(); }
  double step(std::size_t k) const { return (*nodes_)[k + 1] - (*nodes_)[k]; }

  /// Index of the node closest to t (ties resolve to the lower index).
  std::size_t nearest_index(double t) const;

  /// Content hash of the nodes, used to key operator caches.
  std::size_t hash() const { return hash_; }

  bool same_storage(const TimeGrid& other) const { return nodes_ == other.nodes_; }
  bool operator==(const TimeGrid& other) const;

 private:
  std::shared_ptr<const std::vector<double>> nodes_;
  std::size_t hash_ = 0;
};

/// Values of a d-dimensional function at every node of a grid.
/// Rows are nodes, columns are components.
struct SampledFunction {
  TimeGrid grid;
  Eigen::MatrixXd values;

  SampledFunction(TimeGrid g, Eigen::MatrixXd v);

  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }

  /// Samples `fn(t)` (scalar) at every node.
  template <class F>
  static SampledFunction from_scalar(const TimeGrid& g, F&& fn) {
    Eigen::MatrixXd v(g.size(), 1);
    for (std::size_t k = 0; k < g.size(); ++k) v(static_cast<Eigen::Index>(k), 0) = fn(g[k]);
    return SampledFunction(g, std::move(v));
  }
};

/// A d-dimensional function that is constant on every cell [t_k, t_{k+1}).
/// Rows are cells, columns are components.
struct StepFunction {
  TimeGrid grid;
  Eigen::MatrixXd cell_values;

  StepFunction(TimeGrid g, Eigen::MatrixXd v);

  std::size_t dim() const { return static_cast<std::size_t>(cell_values.cols()); }
};

/// Throws InvalidInputError unless both grids are identical.
void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what);

}  // namespace fhl

#include "fhl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <string>

#include "fhl/errors.hpp"

namespace fhl {

namespace {

std::size_t hash_nodes(const std::vector<double>& nodes) {
  std::size_t h = 1469598103934665603ULL;
  for (double x : nodes) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof bits);
    h ^= std::hash<std::uint64_t>{}(bits) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> nodes) {
  if (nodes.size() < 4) {
    throw InvalidGridError("time grid needs at least 4 nodes, got " + std::to_string(nodes.size()));
  }
  if (nodes.front() != 0.0) throw InvalidGridError("time grid must start at exactly 0");
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    if (!std::isfinite(nodes[k + 1]) || !(nodes[k + 1] > nodes[k])) {
      throw InvalidGridError("time grid nodes must be finite and strictly increasing (index " +
                             std::to_string(k + 1) + ")");
    }
  }
  hash_ = hash_nodes(nodes);
  nodes_ = std::make_shared<const std::vector<double>>(std::move(nodes));
}

TimeGrid TimeGrid::uniform(std::size_t cells, double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidGridError("horizon must be positive");
  std::vector<double> nodes(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) nodes[k] = horizon * static_cast<double>(k) / static_cast<double>(cells);
  nodes.back() = horizon;
  return TimeGrid(std::move(nodes));
}

TimeGrid TimeGrid::uniform_refined(std::size_t cells, double horizon, std::size_t levels, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidGridError("refinement ratio must lie in (0, 1)");
  TimeGrid base = uniform(cells, horizon);
  if (levels == 0) return base;
  std::vector<double> nodes(base.nodes().begin(), base.nodes().end() - 1);
  const double h = horizon - nodes.back();
  double offset = h;
  for (std::size_t k = 1; k <= levels; ++k) {
    offset *= ratio;
    nodes.push_back(horizon - offset);
  }
  nodes.push_back(horizon);
  return TimeGrid(std::move(nodes));
}

std::size_t TimeGrid::nearest_index(double t) const {
  const auto& n = *nodes_;
  auto it = std::lower_bound(n.begin(), n.end(), t);
  if (it == n.end()) return n.size() - 1;
  std::size_t hi = static_cast<std::size_t>(it - n.begin());
  if (hi == 0) return 0;
  return (t - n[hi - 1] <= n[hi] - t) ? hi - 1 : hi;
}

bool TimeGrid::operator==(const TimeGrid& other) const {
  if (nodes_ == other.nodes_) return true;
  return hash_ == other.hash_ && *nodes_ == *other.nodes_;
}

SampledFunction::SampledFunction(TimeGrid g, Eigen::MatrixXd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.rows() != static_cast<Eigen::Index>(grid.size())) {
    throw InvalidInputError("sampled function needs one row per grid node");
  }
  if (values.cols() < 1) throw InvalidInputError("sampled function needs at least one component");
  if (!values.allFinite()) throw InvalidInputError("sampled function values must be finite");
}

StepFunction::StepFunction(TimeGrid g, Eigen::MatrixXd v) : grid(std::move(g)), cell_values(std::move(v)) {
  if (cell_values.rows() != static_cast<Eigen::Index>(grid.cells())) {
    throw InvalidInputError("step function needs one row per grid cell");
  }
  if (cell_values.cols() < 1) throw InvalidInputError("step function needs at least one component");
  if (!cell_values.allFinite()) throw InvalidInputError("step function values must be finite");
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (!(a == b)) throw InvalidInputError(std::string(what) + ": grids differ (operators never resample)");
}

}  // namespace fhl

#pragma once

// Small bounded cache for dense operator matrices keyed by (grid, parameter, kind).

#include <deque>
#include <functional>
#include <memory>
#include <mutex>

#include <Eigen/Dense>

#include "fhl/grid.hpp"

namespace fhl::detail {

using MatrixPtr = std::shared_ptr<const Eigen::MatrixXd>;

class MatrixCache {
 public:
  explicit MatrixCache(std::size_t capacity) : capacity_(capacity) {}

  MatrixPtr get(const TimeGrid& grid, double param, int kind,
                const std::function<Eigen::MatrixXd()>& build) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& e : entries_) {
      if (e.kind == kind && e.param == param && e.grid == grid) return e.matrix;
    }
    auto m = std::make_shared<const Eigen::MatrixXd>(build());
    entries_.push_back({grid, param, kind, m});
    if (entries_.size() > capacity_) entries_.pop_front();
    return m;
  }

  static MatrixCache& global() {
    static MatrixCache cache(32);
    return cache;
  }

 private:
  struct Entry {
    TimeGrid grid;
    double param;
    int kind;
    MatrixPtr matrix;
  };
  std::size_t capacity_;
  std::deque<Entry> entries_;
  std::mutex mutex_;
};

}  // namespace fhl::detail

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "loadsim/error.hpp"

namespace loadsim {

// Piecewise-linear lookup table over a strictly increasing grid.
// Evaluation clamps to the end values outside the grid.
class LinearTable {
 public:
  LinearTable() = default;

  LinearTable(std::vector<double> xs, std::vector<double> ys, std::string name = "table")
      : xs_(std::move(xs)), ys_(std::move(ys)), name_(std::move(name)) {
    if (xs_.size() < 2) throw SpecError(name_, "needs at least 2 points");
    if (xs_.size() != ys_.size()) throw SpecError(name_, "x/y size mismatch");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i]))
        throw SpecError(name_, "non-finite entry at row " + std::to_string(i));
      if (i > 0 && xs_[i] <= xs_[i - 1])
        throw SpecError(name_, "grid not strictly increasing at row " + std::to_string(i));
    }
  }

  double operator()(double x) const {
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
    std::size_t lo = hi - 1;
    double f = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + f * (ys_[hi] - ys_[lo]);
  }

  std::size_t size() const { return xs_.size(); }
  bool empty() const { return xs_.empty(); }
  double x(std::size_t i) const { return xs_[i]; }
  double y(std::size_t i) const { return ys_[i]; }
  double front_x() const { return xs_.front(); }
  double back_x() const { return xs_.back(); }
  double min_y() const { return *std::min_element(ys_.begin(), ys_.end()); }
  double max_y() const { return *std::max_element(ys_.begin(), ys_.end()); }

  // Grid x of the largest y value (first occurrence).
  double argmax_x() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ys_.size(); ++i)
      if (ys_[i] > ys_[best]) best = i;
    return xs_[best];
  }

  bool non_decreasing_y() const {
    for (std::size_t i = 1; i < ys_.size(); ++i)
      if (ys_[i] < ys_[i - 1]) return false;
    return true;
  }

  bool non_increasing_y() const {
    for (std::size_t i = 1; i < ys_.size(); ++i)
      if (ys_[i] > ys_[i - 1]) return false;
    return true;
  }

  const std::string& name() const { return name_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::string name_;
};

}  // namespace loadsim

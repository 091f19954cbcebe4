#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "gridflex/error.hpp"

namespace gridflex {

/// Ordered (x, y) breakpoints with linear interpolation between them and
/// flat extension past either end.
class PiecewiseLinearCurve {
 public:
  using Point = std::pair<double, double>;

  PiecewiseLinearCurve() : points_{{0.0, 1.0}, {1.0, 1.0}} {}

  explicit PiecewiseLinearCurve(std::vector<Point> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorKind::ConfigInvalid, "curve needs at least one point");
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (!(points_[i].first > points_[i - 1].first)) {
        throw Error(ErrorKind::ConfigInvalid, "curve x values must be strictly increasing");
      }
    }
  }

  static PiecewiseLinearCurve constant(double y) { return PiecewiseLinearCurve({{0.0, y}, {1.0, y}}); }

  double operator()(double x) const {
    if (x <= points_.front().first) return points_.front().second;
    if (x >= points_.back().first) return points_.back().second;
    auto upper = std::upper_bound(points_.begin(), points_.end(), x,
                                  [](double v, const Point& p) { return v < p.first; });
    const auto& [x1, y1] = *upper;
    const auto& [x0, y0] = *(upper - 1);
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
  }

  const std::vector<Point>& points() const { return points_; }

  bool operator==(const PiecewiseLinearCurve&) const = default;

 private:
  std::vector<Point> points_;
};

}  // namespace gridflex

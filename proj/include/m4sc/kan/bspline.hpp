#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace m4sc::kan {

/// Uniform B-spline basis on [grid_min, grid_max] with G intervals and degree k.
///
/// The knot vector is the uniform grid extended by k knots on each side:
///   t_i = grid_min + (i − k)·h,  i = 0 … G+2k,  h = (grid_max − grid_min)/G
/// which yields G+k basis functions forming a partition of unity on the grid.
/// Inputs outside the grid are clamped before evaluation.
class BSplineBasis {
 public:
  /// Throws ConfigError for grid_min >= grid_max or intervals == 0.
  BSplineBasis(std::size_t order, std::size_t grid_intervals, double grid_min, double grid_max);

  /// Cubic, 8 intervals on [-3, 3].
  static BSplineBasis standard() { return BSplineBasis(3, 8, -3.0, 3.0); }

  std::size_t order() const { return order_; }
  std::size_t grid_intervals() const { return intervals_; }
  double grid_min() const { return min_; }
  double grid_max() const { return max_; }
  double spacing() const { return h_; }
  const std::vector<double>& knots() const { return knots_; }
  std::size_t num_basis() const { return intervals_ + order_; }

  double clamp(double x) const { return x < min_ ? min_ : (x > max_ ? max_ : x); }
  bool inside(double x) const { return x >= min_ && x <= max_; }

  /// Evaluates the order+1 basis functions that are nonzero at clamp(x).
  /// Writes them to `values` (and their derivatives w.r.t. x to `derivs`
  /// when non-empty) and returns the index of the first one.
  std::size_t eval_local(double x, std::span<double> values, std::span<double> derivs) const;

  friend bool operator==(const BSplineBasis& a, const BSplineBasis& b) {
    return a.order_ == b.order_ && a.intervals_ == b.intervals_ && a.min_ == b.min_ &&
           a.max_ == b.max_;
  }

 private:
  std::size_t span_of(double x) const;

  std::size_t order_;
  std::size_t intervals_;
  double min_;
  double max_;
  double h_;
  std::vector<double> knots_;
};

/// All G+k basis values at x (zeros outside the local support).
std::vector<double> basis_eval(const BSplineBasis& basis, double x);

}  // namespace m4sc::kan

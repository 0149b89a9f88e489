#include "m4sc/kan/bspline.hpp"

#include <cmath>
#include <string>

#include "m4sc/errors.hpp"

namespace m4sc::kan {

namespace {
constexpr std::size_t kMaxOrder = 8;
}

BSplineBasis::BSplineBasis(std::size_t order, std::size_t grid_intervals, double grid_min,
                           double grid_max)
    : order_(order), intervals_(grid_intervals), min_(grid_min), max_(grid_max) {
  if (!(grid_min < grid_max) || !std::isfinite(grid_min) || !std::isfinite(grid_max)) {
    throw ConfigError("degenerate spline grid [" + std::to_string(grid_min) + ", " +
                      std::to_string(grid_max) + "]");
  }
  if (grid_intervals == 0) throw ConfigError("spline grid needs at least one interval");
  if (order > kMaxOrder) throw ConfigError("spline order above " + std::to_string(kMaxOrder));
  h_ = (max_ - min_) / static_cast<double>(intervals_);
  const std::size_t n_knots = intervals_ + 2 * order_ + 1;
  knots_.resize(n_knots);
  for (std::size_t i = 0; i < n_knots; ++i) {
    const double offset = static_cast<double>(i) - static_cast<double>(order_);
    knots_[i] = min_ + offset * h_;
  }
  // Pin the grid endpoints exactly.
  knots_[order_] = min_;
  knots_[order_ + intervals_] = max_;
}

std::size_t BSplineBasis::span_of(double x) const {
  const std::size_t lo = order_;
  const std::size_t hi = order_ + intervals_ - 1;
  auto s = static_cast<std::ptrdiff_t>(std::floor((x - min_) / h_)) +
           static_cast<std::ptrdiff_t>(order_);
  std::size_t span = s < static_cast<std::ptrdiff_t>(lo) ? lo
                     : s > static_cast<std::ptrdiff_t>(hi) ? hi
                                                           : static_cast<std::size_t>(s);
  while (span > lo && x < knots_[span]) --span;
  while (span < hi && x >= knots_[span + 1]) ++span;
  return span;
}

std::size_t BSplineBasis::eval_local(double x, std::span<double> values,
                                     std::span<double> derivs) const {
  x = clamp(x);
  const std::size_t k = order_;
  const std::size_t span = span_of(x);

  // Triangular Cox-de Boor evaluation of the k+1 nonzero functions.
  double left[kMaxOrder + 1];
  double right[kMaxOrder + 1];
  double n[kMaxOrder + 1];
  double lower[kMaxOrder + 1];  // degree k-1 values, kept for the derivative
  n[0] = 1.0;
  lower[0] = 1.0;
  for (std::size_t j = 1; j <= k; ++j) {
    if (j == k) {
      for (std::size_t r = 0; r < k; ++r) lower[r] = n[r];
    }
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  for (std::size_t r = 0; r <= k; ++r) values[r] = n[r];

  if (!derivs.empty()) {
    const std::size_t first = span - k;
    if (k == 0) {
      derivs[0] = 0.0;
    } else {
      // B'_{i,k} = k/(t_{i+k}−t_i)·B_{i,k−1} − k/(t_{i+k+1}−t_{i+1})·B_{i+1,k−1}
      // lower[r] holds B_{first+1+r, k−1} for r = 0 … k−1.
      const double dk = static_cast<double>(k);
      for (std::size_t r = 0; r <= k; ++r) {
        const std::size_t i = first + r;
        const double b_this = r >= 1 ? lower[r - 1] : 0.0;
        const double b_next = r < k ? lower[r] : 0.0;
        double d = 0.0;
        if (b_this != 0.0) d += dk / (knots_[i + k] - knots_[i]) * b_this;
        if (b_next != 0.0) d -= dk / (knots_[i + k + 1] - knots_[i + 1]) * b_next;
        derivs[r] = d;
      }
    }
  }
  return span - k;
}

std::vector<double> basis_eval(const BSplineBasis& basis, double x) {
  std::vector<double> out(basis.num_basis(), 0.0);
  double local[kMaxOrder + 1];
  const std::size_t first = basis.eval_local(x, {local, basis.order() + 1}, {});
  for (std::size_t r = 0; r <= basis.order(); ++r) out[first + r] = local[r];
  return out;
}

}  // namespace m4sc::kan

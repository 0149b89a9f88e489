#pragma once

#include <functional>
#include <vector>

#include "m4sc/numerics/matrix.hpp"

namespace m4sc {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
};

/// Compares analytic gradients against central differences.
///
/// `loss` must evaluate the scalar objective from the current contents of
/// `params`; each coordinate is perturbed by ±epsilon in place and restored.
/// The per-coordinate error is |a − n| / max(1, |a|, |n|).
///
/// Throws ConfigError if epsilon is outside [1e-7, 1e-3] or the parameter and
/// gradient lists disagree, and EvaluationError if the loss is non-finite at a
/// perturbed point.
GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<Matrix*>& params,
                           const std::vector<const Matrix*>& analytic_grads,
                           double epsilon = 1e-5);

}  // namespace m4sc

#include "m4sc/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m4sc/errors.hpp"

namespace m4sc {

GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<Matrix*>& params,
                           const std::vector<const Matrix*>& analytic_grads,
                           double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw ConfigError("grad_check: epsilon " + std::to_string(epsilon) +
                      " outside [1e-7, 1e-3]");
  }
  if (params.size() != analytic_grads.size()) {
    throw ConfigError("grad_check: parameter and gradient lists differ in length");
  }
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    require_same_shape(*params[p], *analytic_grads[p], "grad_check");
    auto values = params[p]->flat();
    const auto analytic = analytic_grads[p]->flat();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const double up = loss();
      values[i] = saved - epsilon;
      const double down = loss();
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw EvaluationError("grad_check: non-finite loss at param " + std::to_string(p) +
                              " coordinate " + std::to_string(i));
      }
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[i];
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (err > result.max_rel_error) {
        result = {err, p, i};
      }
    }
  }
  return result;
}

}  // namespace m4sc

#include "m4sc/numerics/optim.hpp"

#include <cmath>
#include <numbers>

#include "m4sc/errors.hpp"

namespace m4sc {

void adamw_step(AdamWState& state, Matrix& params, const Matrix& grads) {
  require_same_shape(params, grads, "adamw_step params/grads");
  if (!state.m.same_shape(params)) {
    state.m = Matrix(params.rows(), params.cols());
    state.v = Matrix(params.rows(), params.cols());
  }
  ++state.step;
  const auto& c = state.cfg;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const double decay = 1.0 - c.lr * c.weight_decay;

  auto p = params.flat();
  const auto g = grads.flat();
  auto m = state.m.flat();
  auto v = state.v.flat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (c.weight_decay != 0.0) p[i] *= decay;
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

CosineSchedule CosineSchedule::with_default_warmup(double base_lr, std::uint64_t total,
                                                   double min_lr) {
  return CosineSchedule{base_lr, total / 20, total, min_lr};
}

double cosine_lr(const CosineSchedule& sched, std::uint64_t step) {
  if (step >= sched.total_steps) return sched.min_lr;
  if (step < sched.warmup_steps) {
    return sched.base_lr * static_cast<double>(step) / static_cast<double>(sched.warmup_steps);
  }
  const double span = static_cast<double>(sched.total_steps - sched.warmup_steps);
  const double progress = static_cast<double>(step - sched.warmup_steps) / span;
  return sched.min_lr +
         (sched.base_lr - sched.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_grad_norm(std::span<Matrix* const> grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix* g : grads) sq += frobenius_sq(*g);
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Matrix* g : grads)
      for (double& x : g->flat()) x *= s;
  }
  return norm;
}

}  // namespace m4sc

#pragma once

#include <cstdint>
#include <span>

#include "m4sc/numerics/matrix.hpp"

namespace m4sc {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Moments for one parameter matrix. `cfg.lr` is rewritten by the trainer
/// from the schedule before every step.
struct AdamWState {
  AdamWConfig cfg;
  Matrix m;
  Matrix v;
  std::uint64_t step = 0;

  AdamWState() = default;
  AdamWState(const AdamWConfig& c, std::size_t rows, std::size_t cols)
      : cfg(c), m(rows, cols), v(rows, cols) {}
};

/// One decoupled-weight-decay Adam update:
///   p ← p − lr·wd·p
///   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²
///   p ← p − lr · (m / (1−β1ᵗ)) / (√(v / (1−β2ᵗ)) + ε)
void adamw_step(AdamWState& state, Matrix& params, const Matrix& grads);

struct CosineSchedule {
  double base_lr = 1e-3;
  std::uint64_t warmup_steps = 0;
  std::uint64_t total_steps = 1;
  double min_lr = 0.0;

  /// Warmup set to 5% of `total`.
  static CosineSchedule with_default_warmup(double base_lr, std::uint64_t total,
                                            double min_lr = 0.0);
};

/// Linear warmup from 0 to base_lr over warmup_steps, then half-cosine decay to
/// min_lr at total_steps. Steps past total_steps clamp to min_lr.
double cosine_lr(const CosineSchedule& sched, std::uint64_t step);

/// Scales every gradient so the joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(std::span<Matrix* const> grads, double max_norm);

}  // namespace m4sc

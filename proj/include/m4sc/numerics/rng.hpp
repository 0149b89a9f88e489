#pragma once

#include <array>
#include <cstdint>

namespace m4sc {

/// SplitMix64 finalizer; used for seeding and seed derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for replica `index` of a run keyed by `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Portable deterministic generator.
///
/// Core: xoshiro256** (Blackman & Vigna), state initialized by four successive
/// SplitMix64 outputs from the seed.
///
/// uniform(): top 53 bits of next() scaled by 2^-53, giving [0, 1).
///
/// gaussian(): Box-Muller on a pair (u1, u2) drawn in that order, with
/// u1 replaced by 1 - u1 so the log argument lies in (0, 1]. The first call
/// returns r·cos(2πu2) and caches r·sin(2πu2); the next call returns the cached
/// value. Any other draw in between leaves the cache intact.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). Uses rejection to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace m4sc

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "m4sc/numerics/matrix.hpp"
#include "m4sc/numerics/rng.hpp"

namespace m4sc::semantic {

struct SceneObject {
  std::size_t shape = 0;
  std::size_t color = 0;
  std::size_t size = 0;
  std::array<double, 2> position{0.0, 0.0};

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// CLEVR-like structured scene with 1–6 objects.
struct ToyScene {
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;

  /// Throws ConfigError when the object count or an attribute id is out of range.
  void validate() const;
  /// Throws ConfigError unless 1 ≤ n_objects ≤ kMaxObjects.
  static ToyScene random(Rng& rng, std::size_t n_objects);

  friend bool operator==(const ToyScene&, const ToyScene&) = default;
};

/// Fixed (untrained) vision featurizer.
///
/// Each object becomes the raw vector
///   [one-hot shape | one-hot color | one-hot size | x, y | 0…0 | 0]
/// and the scene adds one global token
///   [0…0 | one-hot object count | 1]
/// Raw vectors are multiplied by a fixed Gaussian projection drawn from
/// `projection_seed`. Row 0 is the global token, rows 1… follow object order.
class VisionFeaturizer {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5EED'F00D;
  static constexpr std::size_t kRawDim = 3 + 8 + 2 + 2 + 6 + 1;

  explicit VisionFeaturizer(std::size_t feature_dim = 64,
                            std::uint64_t projection_seed = kDefaultSeed);

  std::size_t feature_dim() const { return projection_.cols(); }
  const Matrix& projection() const { return projection_; }

  /// (objects + 1) × feature_dim.
  Matrix encode(const ToyScene& scene) const;

  static std::array<double, kRawDim> object_raw(const SceneObject& obj);
  static std::array<double, kRawDim> global_raw(std::size_t object_count);

 private:
  Matrix projection_;
};

Matrix vision_encode(const VisionFeaturizer& featurizer, const ToyScene& scene);

}  // namespace m4sc::semantic

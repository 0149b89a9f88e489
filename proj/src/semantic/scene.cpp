#include "m4sc/semantic/scene.hpp"

#include <cmath>
#include <string>

#include "m4sc/errors.hpp"
#include "m4sc/semantic/vocab.hpp"

namespace m4sc::semantic {

void ToyScene::validate() const {
  if (objects.empty() || objects.size() > kMaxObjects) {
    throw ConfigError("scene must hold 1-" + std::to_string(kMaxObjects) + " objects, got " +
                      std::to_string(objects.size()));
  }
  for (const auto& o : objects) {
    if (o.shape >= kShapes.size() || o.color >= kColors.size() || o.size >= kSizes.size()) {
      throw ConfigError("scene object attribute id out of vocabulary bounds");
    }
    if (!std::isfinite(o.position[0]) || !std::isfinite(o.position[1])) {
      throw ConfigError("scene object position not finite");
    }
  }
}

ToyScene ToyScene::random(Rng& rng, std::size_t n_objects) {
  if (n_objects == 0 || n_objects > kMaxObjects) {
    throw ConfigError("scene needs 1.." + std::to_string(kMaxObjects) + " objects, got " +
                      std::to_string(n_objects));
  }
  ToyScene scene;
  scene.seed = rng.seed();
  for (std::size_t i = 0; i < n_objects; ++i) {
    SceneObject o;
    o.shape = rng.below(kShapes.size());
    o.color = rng.below(kColors.size());
    o.size = rng.below(kSizes.size());
    o.position = {rng.uniform(), rng.uniform()};
    scene.objects.push_back(o);
  }
  return scene;
}

VisionFeaturizer::VisionFeaturizer(std::size_t feature_dim, std::uint64_t projection_seed)
    : projection_(kRawDim, feature_dim) {
  // Object raw vectors carry three one-hot entries plus a position, so a
  // per-entry std of 0.5 keeps projected features near unit scale.
  Rng rng(projection_seed);
  for (double& v : projection_.flat()) v = rng.gaussian(0.0, 0.5);
}

std::array<double, VisionFeaturizer::kRawDim> VisionFeaturizer::object_raw(const SceneObject& o) {
  std::array<double, kRawDim> raw{};
  raw[o.shape] = 1.0;
  raw[3 + o.color] = 1.0;
  raw[11 + o.size] = 1.0;
  raw[13] = o.position[0];
  raw[14] = o.position[1];
  return raw;
}

std::array<double, VisionFeaturizer::kRawDim> VisionFeaturizer::global_raw(std::size_t count) {
  std::array<double, kRawDim> raw{};
  raw[15 + (count - 1)] = 1.0;
  raw[kRawDim - 1] = 1.0;
  return raw;
}

Matrix VisionFeaturizer::encode(const ToyScene& scene) const {
  scene.validate();
  Matrix out(scene.objects.size() + 1, feature_dim());
  auto project = [&](std::size_t row, const std::array<double, kRawDim>& raw) {
    auto dst = out.row(row);
    for (std::size_t i = 0; i < kRawDim; ++i) {
      if (raw[i] == 0.0) continue;
      const auto p = projection_.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += raw[i] * p[j];
    }
  };
  project(0, global_raw(scene.objects.size()));
  for (std::size_t i = 0; i < scene.objects.size(); ++i) project(i + 1, object_raw(scene.objects[i]));
  return out;
}

Matrix vision_encode(const VisionFeaturizer& featurizer, const ToyScene& scene) {
  return featurizer.encode(scene);
}

}  // namespace m4sc::semantic

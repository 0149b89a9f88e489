#pragma once

#include <cstdint>
#include <vector>

#include "m4sc/numerics/matrix.hpp"
#include "m4sc/semantic/instruction.hpp"
#include "m4sc/semantic/scene.hpp"
#include "m4sc/semantic/vocab.hpp"

namespace m4sc::semantic {

/// Deterministic synthetic corpus. Sample i draws from its own generator
/// seeded with derive_seed(seed, i), so prefixes are stable as n grows.
///
///   caption   scene of 1–6 objects with a strict plurality shape;
///             output "<plurality shape> : <size color shape> , …"
///   vqa       "how many objects are there" over 1–6 objects, or a
///             color/shape/size question about a single-object scene
///   textclass templated review sentence; output "positive" or "negative"
std::vector<TaskInstruction> gen_dataset(Task task, std::size_t n, std::uint64_t seed);

/// Seeded interleaving of the three tasks, `n_per_task` samples each, shuffled.
std::vector<TaskInstruction> gen_mixed_dataset(std::size_t n_per_task, std::uint64_t seed);

/// Scene rendered as words: "<count> <size color shape> …".
std::vector<TokenId> scene_tokens(const Vocabulary& vocab, const ToyScene& scene);

/// Model-ready form of one sample.
struct Example {
  Task task = Task::Caption;
  Matrix vision;                ///< vision tokens × feature dim (0 rows when no image)
  std::vector<TokenId> tokens;  ///< task tag, then input text (then scene words when text-only)
  TokenId answer = 0;
  /// Text-embedding anchor words per vision token: the count word for the
  /// global token, {size, color, shape} for each object token.
  std::vector<std::vector<TokenId>> anchors;
};

/// With `scene_as_text` the scene is appended to the tokens as words and no
/// vision rows are produced; this is the text-only form used to pretrain the
/// semantic model.
Example prepare_example(const Vocabulary& vocab, const VisionFeaturizer& featurizer,
                        const TaskInstruction& sample, bool scene_as_text = false);

std::vector<Example> prepare_examples(const Vocabulary& vocab, const VisionFeaturizer& featurizer,
                                      const std::vector<TaskInstruction>& samples,
                                      bool scene_as_text = false);

}  // namespace m4sc::semantic

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "m4sc/channel/channel.hpp"
#include "m4sc/kan/kan.hpp"
#include "m4sc/semantic/dataset.hpp"
#include "m4sc/semantic/model.hpp"

namespace m4sc::training {

struct LoraConfig {
  std::size_t rank = 4;
  double alpha = 8.0;
  std::vector<std::size_t> targets;  ///< layer ids; empty means every encoder layer and the head

  friend bool operator==(const LoraConfig&, const LoraConfig&) = default;
};

struct SystemConfig {
  std::size_t vision_dim = 64;
  std::vector<std::size_t> kan_hidden{48};
  std::size_t dim = 32;
  std::size_t encoder_layers = 2;
  std::size_t channel_dim = 16;
  std::uint64_t featurizer_seed = 0x5EEDF00D;
  std::uint64_t seed = 1;

  /// KAN widths: vision_dim, hidden…, dim.
  std::vector<std::size_t> kan_widths() const;
  /// Throws ConfigError on zero dims.
  void validate() const;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

nlohmann::json to_json(const SystemConfig& cfg);
/// Missing keys keep their defaults; wrong types throw ConfigError.
SystemConfig system_config_from_json(const nlohmann::json& j);

/// Every trainable piece of the pipeline:
/// featurizer → KAN → fuse with text → encoder → [channel coder] → head.
struct System {
  SystemConfig config;
  semantic::Vocabulary vocab = semantic::Vocabulary::standard();
  semantic::VisionFeaturizer featurizer;
  kan::KanNetwork kan;
  semantic::ToySemanticModel model;
  std::vector<semantic::LoraAdapter> lora;
  channel::ChannelCoder coder;
  std::vector<std::string> phases_done;

  static System create(const SystemConfig& cfg);

  /// Base model plus every attached adapter.
  semantic::ModelView view() const;
  /// Creates adapters on first use; a second call must match the existing ones.
  /// Throws ConfigError on rank/target mismatch.
  void attach_lora(const LoraConfig& cfg);
  bool has_phase(const std::string& name) const;
};

struct LossWeights {
  double align = 0.0;  ///< MSE between projected vision tokens and anchor embeddings
  double recon = 0.0;  ///< MSE between channel-decoded and encoder semantics
};

struct SystemGrads {
  kan::KanGrads kan;
  semantic::SemanticGrads semantic;
  channel::ChannelCoderGrads coder;

  static SystemGrads zeros_like(const System& sys, const semantic::ModelView& view);
};

/// Channel used inside a loss or evaluation; nullopt skips the coder entirely.
using ChannelChoice = std::optional<channel::ChannelParams>;

/// Mean over the batch of
///   CE(answer) + w.align · MSE(projected, anchors) + w.recon · MSE(decoded, encoded)
/// where the reconstruction target is treated as a constant. Noise for example
/// i comes from Rng(derive_seed(noise_seed, i)). Accumulates into `grads` when
/// given (anchors receive no gradient).
double batch_loss(const System& sys, const semantic::ModelView& view,
                  std::span<const semantic::Example* const> batch, const LossWeights& w,
                  const ChannelChoice& channel, std::uint64_t noise_seed, SystemGrads* grads);

struct Prediction {
  semantic::TokenId answer = 0;
  Matrix probs;
  double semantic_mse = 0.0;
};

Prediction predict(const System& sys, const semantic::ModelView& view, const semantic::Example& ex,
                   const ChannelChoice& channel, Rng* noise);

struct EvalResult {
  double accuracy = 0.0;
  double semantic_mse = 0.0;
  std::map<semantic::Task, double> task_accuracy;
  std::size_t samples = 0;
};

/// Mean over `seeds` of exact-match accuracy and semantic MSE. Sample i under
/// seed s draws channel noise from Rng(derive_seed(s, i)).
EvalResult evaluate(const System& sys, std::span<const semantic::Example> corpus,
                    const ChannelChoice& channel, std::span<const std::uint64_t> seeds);

/// FNV-1a over the raw bytes of the given tensors.
std::uint64_t tensor_hash(std::span<const Matrix* const> tensors);

/// Versioned binary checkpoint:
///   "M4CK" | u32 version | u32 config length | config JSON |
///   KAN blob (see save_kan) | semantic model | adapters | channel coder | phase history
std::vector<std::uint8_t> save_checkpoint(const System& sys);
/// Throws CorruptionError on a malformed blob.
System load_checkpoint(std::span<const std::uint8_t> blob);

}  // namespace m4sc::training

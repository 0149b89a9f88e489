#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "m4sc/channel/channel.hpp"
#include "m4sc/sharing/partition.hpp"
#include "m4sc/training/phases.hpp"

namespace m4sc::sim {

/// How `train` builds corpora and phase configs.
struct TrainPlan {
  /// Per phase in pretrain/align/finetune/joint order; align counts captions.
  std::array<std::size_t, 4> samples_per_task{2000, 4000, 2000, 2000};
  std::size_t eval_samples_per_task = 300;
  /// Phase i trains on a corpus drawn with seed data_seed + i + 1.
  std::uint64_t data_seed = 10;
  std::uint64_t eval_seed = 999;
  std::array<training::PhaseConfig, 4> phases{
      training::PhaseConfig::defaults(training::Phase::Pretrain),
      training::PhaseConfig::defaults(training::Phase::Align),
      training::PhaseConfig::defaults(training::Phase::Finetune),
      training::PhaseConfig::defaults(training::Phase::Joint)};

  const training::PhaseConfig& phase(training::Phase p) const {
    return phases[static_cast<std::size_t>(p)];
  }
  training::PhaseConfig& phase(training::Phase p) { return phases[static_cast<std::size_t>(p)]; }
};

struct ExperimentConfig {
  training::SystemConfig system;
  sharing::ComparatorConfig comparator;
  channel::ChannelParams channel{channel::Family::Awgn, 12.0, 0};
  std::size_t users = 4;
  double overlap = 0.5;
  std::size_t tokens_per_user = 8;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t eval_seeds = 20;
  std::size_t eval_samples_per_task = 1000;

  std::vector<std::size_t> user_counts{1, 2, 4, 6, 8};
  std::vector<double> overlap_points{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> snr_points{0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0};
  std::vector<double> tau_points{0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};

  /// Relative to the output root (M4SC_OUTPUT_ROOT, default ".") unless absolute.
  std::string output_dir = "runs";
  std::string checkpoint;
  bool untrained = false;

  TrainPlan train;

  /// Throws ConfigError: U ≥ 1, p ∈ [0,1], non-empty seeds, sweep points in range,
  /// D_ch ≤ D, and every nested config valid.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys and wrong types throw ConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Sets one field addressed by a dotted path ("system.dim", "channel.family",
/// "train.phases.joint.steps"). `value` is parsed as JSON and falls back to a
/// plain string. Throws ConfigError for an unknown path or a bad value.
void apply_override(ExperimentConfig& cfg, const std::string& path, const std::string& value);

/// FNV-1a over the canonical (sorted-key, compact) JSON form.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// `path` under the output root when relative.
std::string resolve_output_path(const std::string& path);

}  // namespace m4sc::sim

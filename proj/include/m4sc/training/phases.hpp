#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "m4sc/numerics/optim.hpp"
#include "m4sc/training/system.hpp"

namespace m4sc::training {

/// `pretrain` fits the text-only semantic model that the later phases treat as
/// the frozen language model; align, finetune and joint follow it in order.
enum class Phase { Pretrain, Align, Finetune, Joint };

std::string_view phase_name(Phase p);
/// Throws ConfigError on an unknown name.
Phase parse_phase(std::string_view name);

struct PhaseConfig {
  Phase phase = Phase::Align;
  std::size_t steps = 0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  AdamWConfig optim{};
  double min_lr = 0.0;
  double max_grad_norm = 1.0;
  double lambda = 0.1;  ///< alignment (align) or reconstruction (joint) MSE weight
  double snr_min_db = 0.0;
  double snr_max_db = 18.0;
  std::vector<channel::Family> families;
  /// Frozen semantic-model groups; LoRA adapters are trainable whenever attached
  /// in finetune/joint.
  semantic::FreezePolicy freeze = semantic::FreezePolicy::all();
  bool train_kan = true;
  std::optional<LoraConfig> lora;

  /// Defaults per phase: steps 10000/5000/8000/5000, lr 3e-3/1e-3/1e-3/1e-3,
  /// pretrain unfreezes the model, finetune and joint attach rank-4 LoRA,
  /// joint samples awgn and rayleigh.
  static PhaseConfig defaults(Phase phase);

  /// Throws ConfigError when the freeze policy breaks the phase contract
  /// (align needs a fully frozen model, joint allows LoRA only), finetune has
  /// no LoRA config, joint has an empty family list or a bad SNR range, or
  /// batch size is zero.
  void validate() const;
};

nlohmann::json to_json(const PhaseConfig& cfg);
/// Overlays the keys present in `j` onto `base`; throws ConfigError on bad values.
PhaseConfig phase_config_from_json(const nlohmann::json& j, PhaseConfig base);

struct SnrAccuracy {
  channel::Family family = channel::Family::None;
  double snr_db = 0.0;
  double accuracy = 0.0;
  double semantic_mse = 0.0;
};

struct TrainReport {
  std::string phase;
  std::size_t steps = 0;
  std::vector<double> loss;  ///< mean batch loss per step
  std::map<std::string, double> accuracy;  ///< per task name, on the evaluation corpus
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> eval_seeds;
  bool cold_start = false;  ///< phase ran without the weights of the phases before it
  bool freeze_held = true;
  double first_coder_grad_norm = 0.0;
  std::vector<SnrAccuracy> snr_table;

  /// Keys: phase, steps, seed, eval_seeds, cold_start, freeze_held,
  /// wall_seconds, first_coder_grad_norm, accuracy{task: value}, loss[...],
  /// smoothed_loss_start, smoothed_loss_end, snr_table[{channel, snr_db,
  /// accuracy, semantic_mse}].
  nlohmann::json to_json() const;
};

/// Window-`window` moving average of the first and last `window` entries.
std::pair<double, double> smoothed_loss_ends(const std::vector<double>& loss,
                                             std::size_t window = 50);

/// Example indices for every step: successive seeded permutations of the
/// corpus cut into batches, so each epoch visits every example once.
std::vector<std::vector<std::size_t>> batch_schedule(std::size_t corpus_size,
                                                     std::size_t batch_size, std::size_t steps,
                                                     std::uint64_t seed);

/// Evaluation options attached to a phase run.
struct EvalSpec {
  std::vector<semantic::Example> corpus;
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> snr_points{0.0, 6.0, 12.0, 18.0};  ///< joint report table
};

/// Runs one phase on `corpus`. The freeze contract is checked by hashing every
/// frozen tensor before and after; a violation throws StateError.
TrainReport run_phase(System& sys, const std::vector<semantic::Example>& corpus,
                      const PhaseConfig& cfg, const EvalSpec* eval = nullptr);

TrainReport pretrain(System& sys, const std::vector<semantic::Example>& corpus,
                     const PhaseConfig& cfg, const EvalSpec* eval = nullptr);
TrainReport phase1_align(System& sys, const std::vector<semantic::Example>& corpus,
                         const PhaseConfig& cfg, const EvalSpec* eval = nullptr);
TrainReport phase2_finetune(System& sys, const std::vector<semantic::Example>& corpus,
                            const PhaseConfig& cfg, const EvalSpec* eval = nullptr);
TrainReport phase3_joint(System& sys, const std::vector<semantic::Example>& corpus,
                         const PhaseConfig& cfg, const EvalSpec* eval = nullptr);

/// Standard synthetic corpus for a phase: mixed text-only scenes for pretrain,
/// captions for align, mixed tasks otherwise.
std::vector<semantic::Example> phase_corpus(const System& sys, Phase phase,
                                            std::size_t samples_per_task, std::uint64_t seed);

}  // namespace m4sc::training

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "m4sc/sharing/frame.hpp"
#include "m4sc/sim/config.hpp"
#include "m4sc/training/system.hpp"

namespace m4sc::sim {

struct MetricsRow {
  std::string run_id;
  std::size_t users = 0;
  double overlap = 0.0;
  double snr_db = 0.0;
  std::string channel;
  std::size_t payload_symbols = 0;
  std::size_t baseline_symbols = 0;
  std::size_t sideinfo_bytes = 0;
  double savings_ratio = 0.0;  ///< 1 − payload/baseline
  double accuracy = 0.0;
  double semantic_mse = 0.0;
  std::uint64_t seed = 0;

  /// payload·4 + side info.
  std::size_t transmitted_bytes() const;
  std::size_t baseline_bytes() const;
  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Trained system from cfg.checkpoint, or a freshly initialized one when
/// cfg.untrained is set. A missing or empty checkpoint path without
/// --untrained is a ConfigError; an unreadable file is an IoError.
training::System load_system(const ExperimentConfig& cfg);

/// Semantic tensors for one multi-user round, T = tokens_per_user rows each.
///
/// Rows come from a universe of encoded tokens: mixed-task samples are
/// encoded with `sys` and a row is kept only when `comparator` rejects it
/// against every row kept so far, in both directions. The first T universe
/// rows form the shared pool; user u receives pool rows 0…k−1 with
/// k = round(p·T) at seeded positions and fills the remaining T−k positions
/// from its own disjoint slice of the universe. Without pool rows users have
/// nothing the comparator would merge, so savings come from the pool alone.
/// Throws ConfigError when the universe cannot supply (U+1)·T rows.
std::vector<Matrix> user_tensors(const training::System& sys, const semantic::ModelView& view,
                                 std::size_t users, double overlap, std::size_t tokens_per_user,
                                 const sharing::ComparatorConfig& comparator, std::uint64_t seed);

struct RoundResult {
  sharing::SymbolAccount account;
  sharing::Frame frame;          ///< as transmitted, before the channel
  std::size_t frame_bytes = 0;   ///< serialized size
  double accuracy = 0.0;         ///< users whose decoded answer survives the round
  double semantic_mse = 0.0;     ///< mean over users of reconstruction MSE
};

/// Full sharing pipeline for one (U, p, τ, seed) point: build inputs,
/// compare and partition, build and serialize the frame, send it through the
/// channel (public block once, private blocks per user), reconstruct and
/// decode for every user. Throws StateError if the serialized frame size
/// disagrees with the symbol accounting.
RoundResult run_round(const training::System& sys, const ExperimentConfig& cfg, std::size_t users,
                      double overlap, const sharing::ComparatorConfig& comparator,
                      std::uint64_t seed);

/// One row per (point, seed), in point-major order.
std::vector<MetricsRow> run_users_sweep(const training::System& sys, const ExperimentConfig& cfg,
                                        std::span<const std::size_t> user_counts);
std::vector<MetricsRow> run_overlap_sweep(const training::System& sys, const ExperimentConfig& cfg,
                                          std::span<const double> overlaps);
/// τ is not a CSV column; it is recorded in run_id ("tau-<τ>-…").
std::vector<MetricsRow> run_tau_sweep(const training::System& sys, const ExperimentConfig& cfg,
                                      std::span<const double> taus);
/// Single point at cfg.users and cfg.overlap.
std::vector<MetricsRow> simulate(const training::System& sys, const ExperimentConfig& cfg);

/// Point-to-point evaluation (no sharing) on a mixed-task corpus for every
/// family in {none, awgn, rayleigh} and SNR, one row per evaluation seed
/// (cfg.eval_seeds of them). Accounting columns hold the raw payload of the
/// corpus with no side information.
std::vector<MetricsRow> run_snr_sweep(const training::System& sys, const ExperimentConfig& cfg,
                                      std::span<const double> snrs);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

/// Runs the given phases in order on `sys` using cfg.train, calling
/// `on_phase` after each with its report.
void run_training(training::System& sys, const TrainPlan& plan,
                  std::span<const training::Phase> phases,
                  const std::function<void(const training::TrainReport&)>& on_phase = {});

}  // namespace m4sc::sim

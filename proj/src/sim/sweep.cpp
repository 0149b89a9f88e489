#include "m4sc/sim/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>

#include "m4sc/binary_io.hpp"
#include "m4sc/errors.hpp"

namespace m4sc::sim {

using semantic::Example;
using training::Phase;
using training::System;

std::size_t MetricsRow::transmitted_bytes() const {
  return payload_symbols * sharing::SymbolAccount::kBytesPerSymbol + sideinfo_bytes;
}

std::size_t MetricsRow::baseline_bytes() const {
  return baseline_symbols * sharing::SymbolAccount::kBytesPerSymbol;
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, r.ptr};
}

System load_system(const ExperimentConfig& cfg) {
  if (cfg.untrained) return System::create(cfg.system);
  if (cfg.checkpoint.empty()) {
    throw ConfigError("no checkpoint given; pass --checkpoint <file> or --untrained");
  }
  if (!std::filesystem::exists(cfg.checkpoint)) {
    throw ConfigError("checkpoint '" + cfg.checkpoint + "' does not exist; train first or pass --untrained");
  }
  return training::load_checkpoint(read_file_bytes(cfg.checkpoint));
}

namespace {

Matrix encode_example(const System& sys, const semantic::ModelView& view, const Example& ex) {
  const Matrix proj = ex.vision.rows() ? sys.kan.forward(ex.vision) : Matrix(0, sys.config.dim);
  return semantic::fuse_and_encode(view, proj, semantic::embed_text(sys.model, ex.tokens));
}

std::size_t argmax(const Matrix& probs) {
  const auto f = probs.flat();
  return static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
}

MetricsRow row_from(const std::string& id, std::size_t users, double overlap,
                    const channel::ChannelParams& ch, const RoundResult& r, std::uint64_t seed) {
  MetricsRow m;
  m.run_id = id;
  m.users = users;
  m.overlap = overlap;
  m.snr_db = ch.snr_db;
  m.channel = std::string(channel::family_name(ch.family));
  m.payload_symbols = r.account.payload_symbols();
  m.baseline_symbols = r.account.baseline_symbols;
  m.sideinfo_bytes = r.account.side_info_bytes;
  m.savings_ratio = r.account.savings_ratio();
  m.accuracy = r.accuracy;
  m.semantic_mse = r.semantic_mse;
  m.seed = seed;
  return m;
}

}  // namespace

std::vector<Matrix> user_tensors(const System& sys, const semantic::ModelView& view,
                                 std::size_t users, double overlap, std::size_t tokens_per_user,
                                 const sharing::ComparatorConfig& comparator, std::uint64_t seed) {
  if (users < 1 || tokens_per_user < 1) throw ConfigError("user_tensors: need users and tokens");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("user_tensors: overlap outside [0, 1]");
  const std::size_t t = tokens_per_user;
  const std::size_t need = (users + 1) * t;

  std::vector<std::vector<double>> universe;
  auto distinct = [&](std::span<const double> r) {
    return std::none_of(universe.begin(), universe.end(), [&](const auto& k) {
      return sharing::comparator_accepts(r, k, comparator) ||
             sharing::comparator_accepts(k, r, comparator);
    });
  };
  // Caption, VQA and text samples interleaved; each per-task stream is
  // prefix-stable, so sample i does not depend on how far the scan goes.
  constexpr semantic::Task kTasks[] = {semantic::Task::Caption, semantic::Task::Vqa,
                                       semantic::Task::TextClass};
  constexpr std::size_t kMaxPerTask = 4096;
  std::size_t scanned = 0;
  for (std::size_t per_task = 32; universe.size() < need && per_task <= kMaxPerTask; per_task *= 2) {
    std::vector<std::vector<semantic::TaskInstruction>> parts;
    for (std::size_t k = 0; k < 3; ++k) {
      parts.push_back(semantic::gen_dataset(kTasks[k], per_task, derive_seed(seed, 1 + k)));
    }
    for (; scanned < 3 * per_task && universe.size() < need; ++scanned) {
      const auto ex = semantic::prepare_example(sys.vocab, sys.featurizer,
                                                parts[scanned % 3][scanned / 3]);
      const Matrix enc = encode_example(sys, view, ex);
      for (std::size_t r = 0; r < enc.rows() && universe.size() < need; ++r) {
        if (distinct(enc.row(r))) universe.emplace_back(enc.row(r).begin(), enc.row(r).end());
      }
    }
  }
  if (universe.size() < need) {
    throw ConfigError("only " + std::to_string(universe.size()) + " mutually distinct tokens found, " +
                      std::to_string(need) + " needed; lower users or tokens_per_user, or raise the threshold");
  }

  const auto k = static_cast<std::size_t>(std::lround(overlap * static_cast<double>(t)));
  std::vector<Matrix> out;
  for (std::size_t u = 0; u < users; ++u) {
    std::vector<std::size_t> pos(t);
    for (std::size_t i = 0; i < t; ++i) pos[i] = i;
    Rng rng(derive_seed(seed, 100 + u));
    for (std::size_t i = t; i > 1; --i) std::swap(pos[i - 1], pos[rng.below(i)]);
    std::vector<bool> shared(t, false);
    for (std::size_t i = 0; i < k; ++i) shared[pos[i]] = true;
    Matrix m(t, sys.config.dim);
    std::size_t next_pool = 0, next_own = (u + 1) * t;
    for (std::size_t r = 0; r < t; ++r) {
      const auto& src = shared[r] ? universe[next_pool++] : universe[next_own++];
      std::copy(src.begin(), src.end(), m.row(r).begin());
    }
    out.push_back(std::move(m));
  }
  return out;
}

RoundResult run_round(const System& sys, const ExperimentConfig& cfg, std::size_t users,
                      double overlap, const sharing::ComparatorConfig& comparator,
                      std::uint64_t seed) {
  const semantic::ModelView view = sys.view();
  const auto tensors =
      user_tensors(sys, view, users, overlap, cfg.tokens_per_user, cfg.comparator, seed);
  const auto partition = sharing::compare_and_partition(tensors, comparator);

  RoundResult r;
  r.account = sharing::account(partition, sys.config.channel_dim);
  r.frame = sharing::build_frame(partition, sys.coder);
  const auto bytes = sharing::serialize(r.frame);
  r.frame_bytes = bytes.size();
  if (r.frame_bytes != r.account.transmitted_bytes()) {
    throw StateError("frame is " + std::to_string(r.frame_bytes) + " bytes but accounting expects " +
                     std::to_string(r.account.transmitted_bytes()));
  }

  channel::ChannelParams pub = cfg.channel;
  pub.seed = derive_seed(seed, 200);
  std::vector<channel::ChannelParams> priv(users, cfg.channel);
  for (std::size_t u = 0; u < users; ++u) priv[u].seed = derive_seed(seed, 300 + u);
  const sharing::Frame rx = sharing::transmit_frame(sharing::deserialize(bytes), pub, priv);

  double agree = 0.0, sq = 0.0;
  for (std::size_t u = 0; u < users; ++u) {
    const Matrix rec = sharing::reconstruct(rx, sys.coder, u);
    sq += mse(rec, tensors[u]);
    if (argmax(semantic::decode(view, rec)) == argmax(semantic::decode(view, tensors[u]))) agree += 1.0;
  }
  r.accuracy = agree / static_cast<double>(users);
  r.semantic_mse = sq / static_cast<double>(users);
  return r;
}

std::vector<MetricsRow> run_users_sweep(const System& sys, const ExperimentConfig& cfg,
                                        std::span<const std::size_t> user_counts) {
  std::vector<MetricsRow> rows;
  for (std::size_t u : user_counts) {
    for (std::uint64_t s : cfg.seeds) {
      const auto r = run_round(sys, cfg, u, cfg.overlap, cfg.comparator, s);
      rows.push_back(row_from("users-U" + std::to_string(u) + "-s" + std::to_string(s), u,
                              cfg.overlap, cfg.channel, r, s));
    }
  }
  return rows;
}

std::vector<MetricsRow> run_overlap_sweep(const System& sys, const ExperimentConfig& cfg,
                                          std::span<const double> overlaps) {
  std::vector<MetricsRow> rows;
  for (double p : overlaps) {
    for (std::uint64_t s : cfg.seeds) {
      const auto r = run_round(sys, cfg, cfg.users, p, cfg.comparator, s);
      rows.push_back(row_from("overlap-p" + format_number(p) + "-U" + std::to_string(cfg.users) +
                                  "-s" + std::to_string(s),
                              cfg.users, p, cfg.channel, r, s));
    }
  }
  return rows;
}

std::vector<MetricsRow> run_tau_sweep(const System& sys, const ExperimentConfig& cfg,
                                      std::span<const double> taus) {
  std::vector<MetricsRow> rows;
  for (double t : taus) {
    sharing::ComparatorConfig cc = cfg.comparator;
    cc.cosine_threshold = t;
    for (std::uint64_t s : cfg.seeds) {
      const auto r = run_round(sys, cfg, cfg.users, cfg.overlap, cc, s);
      rows.push_back(row_from("tau-" + format_number(t) + "-U" + std::to_string(cfg.users) + "-s" +
                                  std::to_string(s),
                              cfg.users, cfg.overlap, cfg.channel, r, s));
    }
  }
  return rows;
}

std::vector<MetricsRow> simulate(const System& sys, const ExperimentConfig& cfg) {
  std::vector<MetricsRow> rows;
  for (std::uint64_t s : cfg.seeds) {
    const auto r = run_round(sys, cfg, cfg.users, cfg.overlap, cfg.comparator, s);
    rows.push_back(row_from("sim-U" + std::to_string(cfg.users) + "-p" + format_number(cfg.overlap) +
                                "-s" + std::to_string(s),
                            cfg.users, cfg.overlap, cfg.channel, r, s));
  }
  return rows;
}

std::vector<MetricsRow> run_snr_sweep(const System& sys, const ExperimentConfig& cfg,
                                      std::span<const double> snrs) {
  const auto corpus =
      training::phase_corpus(sys, Phase::Finetune, cfg.eval_samples_per_task, cfg.train.eval_seed);
  std::size_t tokens = 0;
  for (const auto& ex : corpus) tokens += ex.vision.rows() + ex.tokens.size();
  const std::size_t symbols = tokens * sys.config.channel_dim;

  auto make = [&](channel::Family f, double snr, std::uint64_t seed,
                  const training::EvalResult& e) {
    MetricsRow m;
    m.run_id = "snr-" + std::string(channel::family_name(f)) + "-" + format_number(snr) + "-s" +
               std::to_string(seed);
    m.users = 1;
    m.snr_db = snr;
    m.channel = std::string(channel::family_name(f));
    m.payload_symbols = symbols;
    m.baseline_symbols = symbols;
    m.accuracy = e.accuracy;
    m.semantic_mse = e.semantic_mse;
    m.seed = seed;
    return m;
  };

  std::vector<MetricsRow> rows;
  // "none" is noise-free, so one evaluation serves every seed and SNR.
  const std::uint64_t zero = 0;
  const auto clean = training::evaluate(sys, corpus, channel::ChannelParams{}, std::span(&zero, 1));
  for (channel::Family f : {channel::Family::None, channel::Family::Awgn, channel::Family::Rayleigh}) {
    for (double snr : snrs) {
      for (std::uint64_t s = 0; s < cfg.eval_seeds; ++s) {
        if (f == channel::Family::None) {
          rows.push_back(make(f, snr, s, clean));
          continue;
        }
        channel::ChannelParams p = cfg.channel;
        p.family = f;
        p.snr_db = snr;
        rows.push_back(make(f, snr, s, training::evaluate(sys, corpus, p, std::span(&s, 1))));
      }
    }
  }
  return rows;
}

void run_training(System& sys, const TrainPlan& plan, std::span<const Phase> phases,
                  const std::function<void(const training::TrainReport&)>& on_phase) {
  for (Phase p : phases) {
    const auto i = static_cast<std::size_t>(p);
    const auto corpus = training::phase_corpus(sys, p, plan.samples_per_task[i], plan.data_seed + i + 1);
    training::EvalSpec eval;
    const Phase eval_kind = p == Phase::Joint ? Phase::Finetune : p;
    eval.corpus = training::phase_corpus(sys, eval_kind, plan.eval_samples_per_task, plan.eval_seed);
    const auto rep = training::run_phase(sys, corpus, plan.phase(p), &eval);
    if (on_phase) on_phase(rep);
  }
}

}  // namespace m4sc::sim

#include "m4sc/training/phases.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "m4sc/errors.hpp"
#include "m4sc/json_fields.hpp"

namespace m4sc::training {

using semantic::Example;
using semantic::FreezePolicy;

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::Pretrain: return "pretrain";
    case Phase::Align: return "align";
    case Phase::Finetune: return "finetune";
    case Phase::Joint: return "joint";
  }
  return "?";
}

Phase parse_phase(std::string_view name) {
  for (Phase p : {Phase::Pretrain, Phase::Align, Phase::Finetune, Phase::Joint}) {
    if (phase_name(p) == name) return p;
  }
  throw ConfigError("unknown phase '" + std::string(name) + "'");
}

PhaseConfig PhaseConfig::defaults(Phase phase) {
  PhaseConfig c;
  c.phase = phase;
  switch (phase) {
    case Phase::Pretrain:
      c.steps = 10000;
      c.optim.lr = 3e-3;
      c.freeze = FreezePolicy{};
      break;
    case Phase::Align:
      c.steps = 5000;
      c.optim.lr = 1e-3;
      break;
    case Phase::Finetune:
      c.steps = 8000;
      c.optim.lr = 1e-3;
      c.lora = LoraConfig{};
      break;
    case Phase::Joint:
      c.steps = 5000;
      c.optim.lr = 1e-3;
      c.lora = LoraConfig{};
      c.families = {channel::Family::Awgn, channel::Family::Rayleigh};
      break;
  }
  return c;
}

void PhaseConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(optim.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max grad norm must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("loss weight lambda must be non-negative");
  switch (phase) {
    case Phase::Pretrain:
      break;
    case Phase::Align:
      if (freeze != FreezePolicy::all()) {
        throw ConfigError("align phase requires a fully frozen semantic model");
      }
      break;
    case Phase::Finetune:
      if (!lora) throw ConfigError("finetune phase requires a LoRA config");
      break;
    case Phase::Joint:
      if (families.empty()) throw ConfigError("joint phase needs at least one channel family");
      if (!(snr_min_db <= snr_max_db) || !std::isfinite(snr_min_db) ||
          !std::isfinite(snr_max_db)) {
        throw ConfigError("joint phase SNR range is invalid");
      }
      if (freeze != FreezePolicy::all()) {
        throw ConfigError("joint phase trains the semantic model through LoRA only");
      }
      break;
  }
}

nlohmann::json to_json(const PhaseConfig& c) {
  nlohmann::json fam = nlohmann::json::array();
  for (auto f : c.families) fam.push_back(std::string(channel::family_name(f)));
  nlohmann::json j = {{"phase", std::string(phase_name(c.phase))},
                      {"steps", c.steps},
                      {"batch_size", c.batch_size},
                      {"seed", c.seed},
                      {"lr", c.optim.lr},
                      {"beta1", c.optim.beta1},
                      {"beta2", c.optim.beta2},
                      {"eps", c.optim.eps},
                      {"weight_decay", c.optim.weight_decay},
                      {"min_lr", c.min_lr},
                      {"max_grad_norm", c.max_grad_norm},
                      {"lambda", c.lambda},
                      {"snr_min_db", c.snr_min_db},
                      {"snr_max_db", c.snr_max_db},
                      {"families", fam},
                      {"freeze",
                       {{"embedding", c.freeze.embedding},
                        {"encoder", c.freeze.encoder},
                        {"head", c.freeze.head}}},
                      {"train_kan", c.train_kan}};
  if (c.lora) {
    j["lora"] = {{"rank", c.lora->rank}, {"alpha", c.lora->alpha}, {"targets", c.lora->targets}};
  } else {
    j["lora"] = nullptr;
  }
  return j;
}

PhaseConfig phase_config_from_json(const nlohmann::json& j, PhaseConfig c) {
  if (!j.is_object()) throw ConfigError("phase config must be a JSON object");
  try {
    if (j.contains("phase")) c.phase = parse_phase(j.at("phase").get<std::string>());
    c.steps = unsigned_value(j, "steps", c.steps);
    c.batch_size = unsigned_value(j, "batch_size", c.batch_size);
    c.seed = unsigned_value(j, "seed", c.seed);
    c.optim.lr = j.value("lr", c.optim.lr);
    c.optim.beta1 = j.value("beta1", c.optim.beta1);
    c.optim.beta2 = j.value("beta2", c.optim.beta2);
    c.optim.eps = j.value("eps", c.optim.eps);
    c.optim.weight_decay = j.value("weight_decay", c.optim.weight_decay);
    c.min_lr = j.value("min_lr", c.min_lr);
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
    c.lambda = j.value("lambda", c.lambda);
    c.snr_min_db = j.value("snr_min_db", c.snr_min_db);
    c.snr_max_db = j.value("snr_max_db", c.snr_max_db);
    c.train_kan = j.value("train_kan", c.train_kan);
    if (j.contains("families")) {
      c.families.clear();
      for (const auto& f : j.at("families")) {
        c.families.push_back(channel::parse_family(f.get<std::string>()));
      }
    }
    if (j.contains("freeze")) {
      const auto& f = j.at("freeze");
      c.freeze.embedding = f.value("embedding", c.freeze.embedding);
      c.freeze.encoder = f.value("encoder", c.freeze.encoder);
      c.freeze.head = f.value("head", c.freeze.head);
    }
    if (j.contains("lora")) {
      const auto& l = j.at("lora");
      if (l.is_null()) {
        c.lora.reset();
      } else {
        LoraConfig lc = c.lora.value_or(LoraConfig{});
        lc.rank = unsigned_value(l, "rank", lc.rank);
        lc.alpha = l.value("alpha", lc.alpha);
        lc.targets = unsigned_list(l, "targets", lc.targets);
        c.lora = lc;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("phase config: ") + e.what());
  }
  return c;
}

std::pair<double, double> smoothed_loss_ends(const std::vector<double>& loss, std::size_t window) {
  if (loss.empty()) return {0.0, 0.0};
  const std::size_t w = std::max<std::size_t>(1, std::min(window, loss.size()));
  const double start = std::accumulate(loss.begin(), loss.begin() + w, 0.0) / w;
  const double end = std::accumulate(loss.end() - w, loss.end(), 0.0) / w;
  return {start, end};
}

nlohmann::json TrainReport::to_json() const {
  const auto [s0, s1] = smoothed_loss_ends(loss);
  nlohmann::json acc = nlohmann::json::object();
  for (const auto& [k, v] : accuracy) acc[k] = v;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : snr_table) {
    table.push_back({{"channel", std::string(channel::family_name(r.family))},
                     {"snr_db", r.snr_db},
                     {"accuracy", r.accuracy},
                     {"semantic_mse", r.semantic_mse}});
  }
  return {{"phase", phase},
          {"steps", steps},
          {"seed", seed},
          {"eval_seeds", eval_seeds},
          {"cold_start", cold_start},
          {"freeze_held", freeze_held},
          {"wall_seconds", wall_seconds},
          {"first_coder_grad_norm", first_coder_grad_norm},
          {"accuracy", acc},
          {"smoothed_loss_start", s0},
          {"smoothed_loss_end", s1},
          {"loss", loss},
          {"snr_table", table}};
}

std::vector<std::vector<std::size_t>> batch_schedule(std::size_t corpus_size,
                                                     std::size_t batch_size, std::size_t steps,
                                                     std::uint64_t seed) {
  if (corpus_size == 0 && steps > 0) throw EmptyInputError("batch_schedule: empty corpus");
  Rng rng(seed);
  std::vector<std::size_t> perm(corpus_size);
  std::size_t pos = corpus_size;
  std::vector<std::vector<std::size_t>> out(steps);
  for (auto& batch : out) {
    batch.reserve(batch_size);
    while (batch.size() < batch_size) {
      if (pos == corpus_size) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = corpus_size; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        pos = 0;
      }
      batch.push_back(perm[pos++]);
    }
  }
  return out;
}

namespace {

struct Slot {
  Matrix* param;
  Matrix* grad;
};

// Tensors the freeze contract protects in this run.
std::vector<const Matrix*> frozen_tensors(const System& sys, const PhaseConfig& cfg) {
  std::vector<const Matrix*> out;
  const auto& m = sys.model;
  if (cfg.freeze.embedding) out.push_back(&m.embedding);
  if (cfg.freeze.encoder) {
    for (const auto& l : m.encoder) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  if (cfg.freeze.head) {
    out.push_back(&m.head.weight);
    out.push_back(&m.head.bias);
  }
  const bool uses_kan = cfg.phase != Phase::Pretrain;
  if (!uses_kan || !cfg.train_kan) {
    for (const Matrix* p : sys.kan.parameters()) out.push_back(p);
  }
  if (cfg.phase != Phase::Joint) {
    for (const Matrix* p : sys.coder.parameters()) out.push_back(p);
  }
  if (cfg.phase == Phase::Pretrain || cfg.phase == Phase::Align) {
    for (const auto& a : sys.lora) {
      out.push_back(&a.down);
      out.push_back(&a.up);
    }
  }
  return out;
}

std::vector<Slot> trainable_slots(System& sys, const PhaseConfig& cfg, SystemGrads& g) {
  std::vector<Slot> out;
  auto& m = sys.model;
  if (cfg.phase != Phase::Pretrain && cfg.train_kan) {
    auto params = sys.kan.parameters();
    auto grads = g.kan.list();
    for (std::size_t i = 0; i < params.size(); ++i) out.push_back({params[i], grads[i]});
  }
  if (!cfg.freeze.embedding) out.push_back({&m.embedding, &g.semantic.embedding});
  if (!cfg.freeze.encoder) {
    for (std::size_t l = 0; l < m.encoder.size(); ++l) {
      out.push_back({&m.encoder[l].weight, &g.semantic.encoder[l].weight});
      out.push_back({&m.encoder[l].bias, &g.semantic.encoder[l].bias});
    }
  }
  if (!cfg.freeze.head) {
    out.push_back({&m.head.weight, &g.semantic.head.weight});
    out.push_back({&m.head.bias, &g.semantic.head.bias});
  }
  if (cfg.phase == Phase::Finetune || cfg.phase == Phase::Joint) {
    for (std::size_t a = 0; a < sys.lora.size(); ++a) {
      out.push_back({&sys.lora[a].down, &g.semantic.lora[a].down});
      out.push_back({&sys.lora[a].up, &g.semantic.lora[a].up});
    }
  }
  if (cfg.phase == Phase::Joint) {
    auto params = sys.coder.parameters();
    auto grads = g.coder.list();
    for (std::size_t i = 0; i < params.size(); ++i) out.push_back({params[i], grads[i]});
  }
  return out;
}

double grad_norm(const std::vector<Matrix*>& grads) {
  double s = 0.0;
  for (const Matrix* g : grads) s += frobenius_sq(*g);
  return std::sqrt(s);
}

bool cold_start(const System& sys, Phase phase) {
  switch (phase) {
    case Phase::Pretrain: return false;
    case Phase::Align: return !sys.has_phase("pretrain");
    case Phase::Finetune: return !sys.has_phase("align");
    case Phase::Joint: return !sys.has_phase("finetune");
  }
  return false;
}

}  // namespace

TrainReport run_phase(System& sys, const std::vector<Example>& corpus, const PhaseConfig& cfg,
                      const EvalSpec* eval) {
  cfg.validate();
  if (cfg.lora && (cfg.phase == Phase::Finetune || cfg.phase == Phase::Joint)) {
    sys.attach_lora(*cfg.lora);
  }
  if (cfg.steps > 0 && corpus.empty()) throw EmptyInputError("training corpus is empty");
  const auto start = std::chrono::steady_clock::now();

  TrainReport rep;
  rep.phase = std::string(phase_name(cfg.phase));
  rep.steps = cfg.steps;
  rep.seed = cfg.seed;
  rep.cold_start = cold_start(sys, cfg.phase);
  sys.model.frozen = cfg.freeze;

  const auto frozen = frozen_tensors(sys, cfg);
  const std::uint64_t frozen_before = tensor_hash(frozen);

  LossWeights weights;
  if (cfg.phase == Phase::Align) weights.align = cfg.lambda;
  if (cfg.phase == Phase::Joint) weights.recon = cfg.lambda;

  const auto schedule = batch_schedule(corpus.size(), cfg.batch_size, cfg.steps, cfg.seed);
  const auto lr_sched =
      CosineSchedule::with_default_warmup(cfg.optim.lr, cfg.steps, cfg.min_lr);
  Rng channel_rng(derive_seed(cfg.seed, 1));
  const std::uint64_t noise_root = derive_seed(cfg.seed, 2);

  std::vector<AdamWState> states;
  std::vector<const Example*> batch(cfg.batch_size);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const semantic::ModelView view = sys.view();
    SystemGrads grads = SystemGrads::zeros_like(sys, view);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = &corpus[schedule[step][i]];

    ChannelChoice ch;
    if (cfg.phase == Phase::Joint) {
      channel::ChannelParams p;
      p.family = cfg.families[channel_rng.below(cfg.families.size())];
      p.snr_db = channel_rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
      ch = p;
    }
    const double loss =
        batch_loss(sys, view, batch, weights, ch, derive_seed(noise_root, step), &grads);
    if (!std::isfinite(loss)) {
      throw EvaluationError(rep.phase + " loss became non-finite at step " + std::to_string(step));
    }
    rep.loss.push_back(loss);

    auto slots = trainable_slots(sys, cfg, grads);
    if (states.empty()) {
      for (const auto& s : slots) states.emplace_back(cfg.optim, s.param->rows(), s.param->cols());
    }
    std::vector<Matrix*> glist;
    for (const auto& s : slots) glist.push_back(s.grad);
    if (step == 0 && cfg.phase == Phase::Joint) rep.first_coder_grad_norm = grad_norm(grads.coder.list());
    clip_grad_norm(glist, cfg.max_grad_norm);
    const double lr = cosine_lr(lr_sched, step + 1);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      states[i].cfg.lr = lr;
      adamw_step(states[i], *slots[i].param, *slots[i].grad);
    }
  }

  rep.freeze_held = tensor_hash(frozen) == frozen_before;
  if (!rep.freeze_held) throw StateError(rep.phase + " phase modified a frozen tensor");
  sys.phases_done.push_back(rep.phase);

  if (eval && !eval->corpus.empty()) {
    rep.eval_seeds = eval->seeds;
    const bool channel_path = cfg.phase == Phase::Joint;
    ChannelChoice none;
    if (channel_path) none = channel::ChannelParams{};
    const EvalResult r = evaluate(sys, eval->corpus, none, eval->seeds);
    for (const auto& [task, acc] : r.task_accuracy) {
      rep.accuracy[std::string(semantic::task_name(task))] = acc;
    }
    rep.accuracy["all"] = r.accuracy;
    if (channel_path) {
      for (auto fam : cfg.families) {
        for (double snr : eval->snr_points) {
          channel::ChannelParams p;
          p.family = fam;
          p.snr_db = snr;
          const EvalResult e = evaluate(sys, eval->corpus, p, eval->seeds);
          rep.snr_table.push_back({fam, snr, e.accuracy, e.semantic_mse});
        }
      }
    }
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

namespace {

TrainReport run_checked(Phase expected, System& sys, const std::vector<Example>& corpus,
                        const PhaseConfig& cfg, const EvalSpec* eval) {
  if (cfg.phase != expected) {
    throw ConfigError("config is for phase '" + std::string(phase_name(cfg.phase)) +
                      "', expected '" + std::string(phase_name(expected)) + "'");
  }
  return run_phase(sys, corpus, cfg, eval);
}

}  // namespace

TrainReport pretrain(System& sys, const std::vector<Example>& corpus, const PhaseConfig& cfg,
                     const EvalSpec* eval) {
  return run_checked(Phase::Pretrain, sys, corpus, cfg, eval);
}

TrainReport phase1_align(System& sys, const std::vector<Example>& corpus, const PhaseConfig& cfg,
                         const EvalSpec* eval) {
  return run_checked(Phase::Align, sys, corpus, cfg, eval);
}

TrainReport phase2_finetune(System& sys, const std::vector<Example>& corpus,
                            const PhaseConfig& cfg, const EvalSpec* eval) {
  return run_checked(Phase::Finetune, sys, corpus, cfg, eval);
}

TrainReport phase3_joint(System& sys, const std::vector<Example>& corpus, const PhaseConfig& cfg,
                         const EvalSpec* eval) {
  return run_checked(Phase::Joint, sys, corpus, cfg, eval);
}

std::vector<Example> phase_corpus(const System& sys, Phase phase, std::size_t samples_per_task,
                                  std::uint64_t seed) {
  using semantic::gen_dataset;
  using semantic::gen_mixed_dataset;
  switch (phase) {
    case Phase::Pretrain:
      return semantic::prepare_examples(sys.vocab, sys.featurizer,
                                        gen_mixed_dataset(samples_per_task, seed), true);
    case Phase::Align:
      return semantic::prepare_examples(
          sys.vocab, sys.featurizer, gen_dataset(semantic::Task::Caption, samples_per_task, seed));
    case Phase::Finetune:
    case Phase::Joint:
      return semantic::prepare_examples(sys.vocab, sys.featurizer,
                                        gen_mixed_dataset(samples_per_task, seed));
  }
  return {};
}

}  // namespace m4sc::training

#include "m4sc/sim/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "m4sc/binary_io.hpp"
#include "m4sc/errors.hpp"
#include "m4sc/json_fields.hpp"

namespace m4sc::sim {

using nlohmann::json;
using training::Phase;

namespace {

constexpr std::array<Phase, 4> kPhases{Phase::Pretrain, Phase::Align, Phase::Finetune,
                                       Phase::Joint};

json train_to_json(const TrainPlan& t) {
  json samples = json::object();
  json phases = json::object();
  for (Phase p : kPhases) {
    const std::string name(training::phase_name(p));
    samples[name] = t.samples_per_task[static_cast<std::size_t>(p)];
    phases[name] = training::to_json(t.phase(p));
  }
  return {{"samples_per_task", samples},
          {"eval_samples_per_task", t.eval_samples_per_task},
          {"data_seed", t.data_seed},
          {"eval_seed", t.eval_seed},
          {"phases", phases}};
}

TrainPlan train_from_json(const json& j) {
  TrainPlan t;
  if (!j.is_object()) throw ConfigError("'train' must be a JSON object");
  t.eval_samples_per_task = unsigned_value(j, "eval_samples_per_task", t.eval_samples_per_task);
  t.data_seed = unsigned_value(j, "data_seed", t.data_seed);
  t.eval_seed = unsigned_value(j, "eval_seed", t.eval_seed);
  for (Phase p : kPhases) {
    const std::string name(training::phase_name(p));
    const auto i = static_cast<std::size_t>(p);
    if (j.contains("samples_per_task")) {
      t.samples_per_task[i] = unsigned_value(j.at("samples_per_task"), name, t.samples_per_task[i]);
    }
    if (j.contains("phases") && j.at("phases").contains(name)) {
      t.phases[i] = training::phase_config_from_json(j.at("phases").at(name), t.phases[i]);
      if (t.phases[i].phase != p) {
        throw ConfigError("train.phases." + name + " names phase '" +
                          std::string(training::phase_name(t.phases[i].phase)) + "'");
      }
    }
  }
  return t;
}

// Every key in `given` must exist in `known` at the same place; null entries
// in `known` (optional sections) accept anything.
void reject_unknown_keys(const json& given, const json& known, const std::string& where) {
  if (!given.is_object() || !known.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!known.contains(key)) throw ConfigError("unknown config field '" + path + "'");
    if (!known.at(key).is_null()) reject_unknown_keys(value, known.at(key), path);
  }
}

template <typename T>
std::vector<T> number_list(const json& j, const std::string& key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError("field '" + key + "' must be an array");
  std::vector<T> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("field '" + key + "' must hold numbers, got " + e.dump());
    out.push_back(e.get<T>());
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  system.validate();
  comparator.validate();
  channel.validate();
  if (system.channel_dim > system.dim) {
    throw ConfigError("channel_dim " + std::to_string(system.channel_dim) +
                      " exceeds semantic dim " + std::to_string(system.dim));
  }
  if (users < 1) throw ConfigError("users must be at least 1");
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw ConfigError("overlap must lie in [0, 1], got " + std::to_string(overlap));
  }
  if (tokens_per_user < 1) throw ConfigError("tokens_per_user must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (eval_seeds < 1) throw ConfigError("eval_seeds must be at least 1");
  for (std::size_t u : user_counts)
    if (u < 1) throw ConfigError("user_counts entries must be at least 1");
  for (double p : overlap_points)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("overlap_points entries must lie in [0, 1]");
  for (double t : tau_points)
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("tau_points entries must lie in (0, 1]");
  for (double s : snr_points)
    if (std::isnan(s)) throw ConfigError("snr_points entries must be numbers");
  for (Phase p : kPhases) train.phase(p).validate();
}

json to_json(const ExperimentConfig& c) {
  return {{"system", training::to_json(c.system)},
          {"comparator",
           {{"cosine_threshold", c.comparator.cosine_threshold},
            {"mean_tol", c.comparator.mean_tol},
            {"var_tol", c.comparator.var_tol}}},
          {"channel",
           {{"family", std::string(channel::family_name(c.channel.family))},
            {"snr_db", c.channel.snr_db},
            {"h_min", c.channel.h_min}}},
          {"users", c.users},
          {"overlap", c.overlap},
          {"tokens_per_user", c.tokens_per_user},
          {"seeds", c.seeds},
          {"eval_seeds", c.eval_seeds},
          {"eval_samples_per_task", c.eval_samples_per_task},
          {"user_counts", c.user_counts},
          {"overlap_points", c.overlap_points},
          {"snr_points", c.snr_points},
          {"tau_points", c.tau_points},
          {"output_dir", c.output_dir},
          {"checkpoint", c.checkpoint},
          {"untrained", c.untrained},
          {"train", train_to_json(c.train)}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  reject_unknown_keys(j, to_json(c), "");
  try {
    if (j.contains("system")) c.system = training::system_config_from_json(j.at("system"));
    if (j.contains("comparator")) {
      const auto& k = j.at("comparator");
      c.comparator.cosine_threshold = k.value("cosine_threshold", c.comparator.cosine_threshold);
      c.comparator.mean_tol = k.value("mean_tol", c.comparator.mean_tol);
      c.comparator.var_tol = k.value("var_tol", c.comparator.var_tol);
    }
    if (j.contains("channel")) {
      const auto& k = j.at("channel");
      if (k.contains("family")) c.channel.family = channel::parse_family(k.at("family").get<std::string>());
      c.channel.snr_db = k.value("snr_db", c.channel.snr_db);
      c.channel.h_min = k.value("h_min", c.channel.h_min);
    }
    c.users = unsigned_value(j, "users", c.users);
    c.overlap = j.value("overlap", c.overlap);
    c.tokens_per_user = unsigned_value(j, "tokens_per_user", c.tokens_per_user);
    c.seeds = unsigned_list(j, "seeds", c.seeds);
    c.eval_seeds = unsigned_value(j, "eval_seeds", c.eval_seeds);
    c.eval_samples_per_task = unsigned_value(j, "eval_samples_per_task", c.eval_samples_per_task);
    c.user_counts = unsigned_list(j, "user_counts", c.user_counts);
    c.overlap_points = number_list(j, "overlap_points", c.overlap_points);
    c.snr_points = number_list(j, "snr_points", c.snr_points);
    c.tau_points = number_list(j, "tau_points", c.tau_points);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.untrained = j.value("untrained", c.untrained);
    if (j.contains("train")) c.train = train_from_json(j.at("train"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const std::string text = read_file_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

void apply_override(ExperimentConfig& cfg, const std::string& path, const std::string& value) {
  json j = to_json(cfg);
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) {
      throw ConfigError("unknown config field '" + path + "'");
    }
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  *node = v;
  cfg = experiment_config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string s = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string resolve_output_path(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return p.string();
  const char* root = std::getenv("M4SC_OUTPUT_ROOT");
  return (std::filesystem::path(root && *root ? root : ".") / p).string();
}

}  // namespace m4sc::sim

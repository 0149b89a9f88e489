// m4sc: train the desk-scale pipeline, run multi-user sharing simulations and
// sweeps, and inspect transmitted frames.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "m4sc/binary_io.hpp"
#include "m4sc/errors.hpp"
#include "m4sc/sharing/frame.hpp"
#include "m4sc/sim/config.hpp"
#include "m4sc/sim/metrics.hpp"
#include "m4sc/sim/sweep.hpp"

using namespace m4sc;
using m4sc::training::Phase;

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  std::string checkpoint;
  bool untrained = false;
  std::vector<std::uint64_t> seeds;
  std::size_t users = 0;
  double overlap = -1.0;
  double snr = std::numeric_limits<double>::quiet_NaN();
  std::string channel;
  double tau = 0.0;
  std::size_t eval_seeds = 0;
};

sim::ExperimentConfig build_config(const Options& o) {
  sim::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = sim::load_experiment_config(o.config_path);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    sim::apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;
  if (o.untrained) cfg.untrained = true;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.users) cfg.users = o.users;
  if (o.overlap >= 0.0) cfg.overlap = o.overlap;
  if (!std::isnan(o.snr)) cfg.channel.snr_db = o.snr;
  if (!o.channel.empty()) cfg.channel.family = channel::parse_family(o.channel);
  if (o.tau > 0.0) cfg.comparator.cosine_threshold = o.tau;
  if (o.eval_seeds) cfg.eval_seeds = o.eval_seeds;
  cfg.validate();
  return cfg;
}

std::vector<Phase> phases_for(const std::string& name) {
  if (name == "all") return {Phase::Pretrain, Phase::Align, Phase::Finetune, Phase::Joint};
  return {training::parse_phase(name)};
}

void print_report(const training::TrainReport& r) {
  const auto [first, last] = training::smoothed_loss_ends(r.loss);
  std::printf("%-9s %6zu steps  %7.1fs  loss %.4f -> %.4f", r.phase.c_str(), r.steps,
              r.wall_seconds, first, last);
  for (const auto& [task, acc] : r.accuracy) std::printf("  %s %.4f", task.c_str(), acc);
  if (r.cold_start) std::printf("  [cold start]");
  std::printf("\n");
  for (const auto& s : r.snr_table) {
    std::printf("          %-8s %5.1f dB  accuracy %.4f  mse %.4f\n",
                std::string(channel::family_name(s.family)).c_str(), s.snr_db, s.accuracy,
                s.semantic_mse);
  }
  std::fflush(stdout);
}

int cmd_train(const Options& o, const std::string& phase) {
  const auto cfg = build_config(o);
  const auto phases = phases_for(phase);
  const std::string dir = sim::resolve_output_path(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());

  training::System sys = cfg.checkpoint.empty()
                             ? training::System::create(cfg.system)
                             : training::load_checkpoint(read_file_bytes(cfg.checkpoint));
  const auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };
  sim::run_training(sys, cfg.train, phases, [&](const training::TrainReport& r) {
    print_report(r);
    write_file_text(path("report-" + r.phase + ".json"), r.to_json().dump(2) + "\n");
    write_file_bytes(path("checkpoint-" + r.phase + ".bin"), training::save_checkpoint(sys));
  });
  write_file_bytes(path("checkpoint.bin"), training::save_checkpoint(sys));
  std::printf("checkpoint written to %s\n", path("checkpoint.bin").c_str());
  return 0;
}

void write_rows(const std::vector<sim::MetricsRow>& rows, const sim::ExperimentConfig& cfg,
                const sim::SweepOutput& what) {
  const auto files = sim::emit_metrics(rows, cfg, what, sim::resolve_output_path(cfg.output_dir));
  for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
}

int cmd_simulate(const Options& o) {
  const auto cfg = build_config(o);
  const auto sys = sim::load_system(cfg);
  const auto rows = sim::simulate(sys, cfg);
  for (const auto& r : rows) {
    std::printf("%s  payload %zu / baseline %zu symbols  side info %zu B  savings %.4f  accuracy %.4f  mse %.4f\n",
                r.run_id.c_str(), r.payload_symbols, r.baseline_symbols, r.sideinfo_bytes,
                r.savings_ratio, r.accuracy, r.semantic_mse);
  }
  write_rows(rows, cfg, {"simulate", {cfg.overlap}});
  // Keep the first seed's frame so it can be inspected.
  const auto round = sim::run_round(sys, cfg, cfg.users, cfg.overlap, cfg.comparator, cfg.seeds.front());
  const std::string frame_path =
      (std::filesystem::path(sim::resolve_output_path(cfg.output_dir)) / "frame.m4sc").string();
  write_file_bytes(frame_path, sharing::serialize(round.frame));
  std::printf("wrote %s\n", frame_path.c_str());
  return 0;
}

int cmd_sweep(const Options& o, const std::string& param, const std::vector<double>& points_in) {
  const auto cfg = build_config(o);
  const auto sys = sim::load_system(cfg);
  std::vector<sim::MetricsRow> rows;
  std::vector<double> points = points_in;
  if (param == "users") {
    std::vector<std::size_t> counts(cfg.user_counts);
    if (!points.empty()) {
      counts.clear();
      for (double p : points) {
        if (p < 1 || p != std::floor(p)) throw ConfigError("user counts must be positive integers");
        counts.push_back(static_cast<std::size_t>(p));
      }
    }
    points.assign(counts.begin(), counts.end());
    rows = sim::run_users_sweep(sys, cfg, counts);
  } else if (param == "overlap") {
    if (points.empty()) points = cfg.overlap_points;
    for (double p : points)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("overlap points must lie in [0, 1]");
    rows = sim::run_overlap_sweep(sys, cfg, points);
  } else if (param == "tau") {
    if (points.empty()) points = cfg.tau_points;
    for (double t : points)
      if (!(t > 0.0 && t <= 1.0)) throw ConfigError("tau points must lie in (0, 1]");
    rows = sim::run_tau_sweep(sys, cfg, points);
  } else {
    if (points.empty()) points = cfg.snr_points;
    rows = sim::run_snr_sweep(sys, cfg, points);
  }
  write_rows(rows, cfg, {param, points});
  return 0;
}

int cmd_inspect(const std::string& file) {
  const auto frame = sharing::deserialize(read_file_bytes(file));
  std::cout << sharing::describe(frame);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-user semantic communication simulator"};
  app.require_subcommand(1);
  Options o;
  std::string phase = "all";
  std::string param;
  std::vector<double> points;
  std::string frame_file;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "override any config field, e.g. system.dim=16");
    sub->add_option("--out", o.out, "output directory (under $M4SC_OUTPUT_ROOT when relative)");
    sub->add_option("--checkpoint", o.checkpoint, "trained checkpoint to load");
    sub->add_option("--seeds", o.seeds, "master seeds");
  };
  auto sharing_opts = [&](CLI::App* sub) {
    sub->add_flag("--untrained", o.untrained, "use freshly initialized weights (accounting runs)");
    sub->add_option("--users", o.users, "number of users");
    sub->add_option("--overlap", o.overlap, "shared-pool fraction p in [0, 1]");
    sub->add_option("--snr", o.snr, "channel SNR in dB");
    sub->add_option("--channel", o.channel, "channel family: none, awgn or rayleigh");
    sub->add_option("--tau", o.tau, "comparator cosine threshold");
    sub->add_option("--eval-seeds", o.eval_seeds, "evaluation seeds per SNR point");
  };

  auto* train = app.add_subcommand("train", "run training phases and write checkpoints");
  common(train);
  train->add_option("--phase", phase, "pretrain, align, finetune, joint or all")
      ->check(CLI::IsMember({"pretrain", "align", "finetune", "joint", "all"}));

  auto* simulate = app.add_subcommand("simulate", "one multi-user sharing round per seed");
  common(simulate);
  sharing_opts(simulate);

  auto* sweep = app.add_subcommand("sweep", "sweep one parameter and write metrics");
  common(sweep);
  sharing_opts(sweep);
  sweep->add_option("--param", param, "users, snr, overlap or tau")
      ->required()
      ->check(CLI::IsMember({"users", "snr", "overlap", "tau"}));
  sweep->add_option("--points", points, "values to sweep (defaults come from the config)");

  auto* inspect = app.add_subcommand("inspect-frame", "decode and summarize a frame file");
  inspect->add_option("file", frame_file, "frame file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(o, phase);
    if (*simulate) return cmd_simulate(o);
    if (*sweep) return cmd_sweep(o, param, points);
    if (*inspect) return cmd_inspect(frame_file);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "m4sc: configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "m4sc: error: %s\n", e.what());
    return 1;
  }
  return 0;
}

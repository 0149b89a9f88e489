#include "m4sc/sim/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "m4sc/binary_io.hpp"
#include "m4sc/errors.hpp"

namespace m4sc::sim {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = line.find(sep, start);
    out.push_back(line.substr(start, at == std::string::npos ? std::string::npos : at - start));
    if (at == std::string::npos) return out;
    start = at + 1;
  }
}

template <typename T>
T parse_field(const std::string& s, const char* name, std::size_t line) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw CorruptionError("line " + std::to_string(line) + ": bad " + name + " '" + s + "'");
  }
  return v;
}

nlohmann::ordered_json row_json(const MetricsRow& r) {
  return {{"run_id", r.run_id},
          {"users", r.users},
          {"overlap", r.overlap},
          {"snr_db", r.snr_db},
          {"channel", r.channel},
          {"payload_symbols", r.payload_symbols},
          {"baseline_symbols", r.baseline_symbols},
          {"sideinfo_bytes", r.sideinfo_bytes},
          {"savings_ratio", r.savings_ratio},
          {"accuracy", r.accuracy},
          {"semantic_mse", r.semantic_mse},
          {"seed", r.seed}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.run_id << ',' << r.users << ',' << format_number(r.overlap) << ','
       << format_number(r.snr_db) << ',' << r.channel << ',' << r.payload_symbols << ','
       << r.baseline_symbols << ',' << r.sideinfo_bytes << ',' << format_number(r.savings_ratio)
       << ',' << format_number(r.accuracy) << ',' << format_number(r.semantic_mse) << ','
       << r.seed << '\n';
  }
  return os.str();
}

std::string to_json_lines(const std::vector<MetricsRow>& rows) {
  std::string out;
  for (const auto& r : rows) out += row_json(r).dump() + "\n";
  return out;
}

std::vector<MetricsRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw CorruptionError("line 1: expected header '" + std::string(kCsvHeader) + "'");
  }
  std::vector<MetricsRow> rows;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12) {
      throw CorruptionError("line " + std::to_string(n) + ": expected 12 fields, got " +
                            std::to_string(f.size()));
    }
    MetricsRow r;
    r.run_id = f[0];
    r.users = parse_field<std::size_t>(f[1], "users", n);
    r.overlap = parse_field<double>(f[2], "overlap", n);
    r.snr_db = parse_field<double>(f[3], "snr_db", n);
    r.channel = f[4];
    r.payload_symbols = parse_field<std::size_t>(f[5], "payload_symbols", n);
    r.baseline_symbols = parse_field<std::size_t>(f[6], "baseline_symbols", n);
    r.sideinfo_bytes = parse_field<std::size_t>(f[7], "sideinfo_bytes", n);
    r.savings_ratio = parse_field<double>(f[8], "savings_ratio", n);
    r.accuracy = parse_field<double>(f[9], "accuracy", n);
    r.semantic_mse = parse_field<double>(f[10], "semantic_mse", n);
    r.seed = parse_field<std::uint64_t>(f[11], "seed", n);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MetricsRow> parse_json_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<MetricsRow> rows;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MetricsRow r;
      r.run_id = j.at("run_id").get<std::string>();
      r.users = j.at("users").get<std::size_t>();
      r.overlap = j.at("overlap").get<double>();
      r.snr_db = j.at("snr_db").get<double>();
      r.channel = j.at("channel").get<std::string>();
      r.payload_symbols = j.at("payload_symbols").get<std::size_t>();
      r.baseline_symbols = j.at("baseline_symbols").get<std::size_t>();
      r.sideinfo_bytes = j.at("sideinfo_bytes").get<std::size_t>();
      r.savings_ratio = j.at("savings_ratio").get<double>();
      r.accuracy = j.at("accuracy").get<double>();
      r.semantic_mse = j.at("semantic_mse").get<double>();
      r.seed = j.at("seed").get<std::uint64_t>();
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptionError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

nlohmann::json manifest(const ExperimentConfig& cfg, const SweepOutput& what,
                        std::size_t row_count, const std::vector<std::string>& files) {
  return {{"sweep", what.sweep},
          {"points", what.points},
          {"config_hash", hex64(config_hash(cfg))},
          {"config", to_json(cfg)},
          {"seeds", cfg.seeds},
          {"eval_seeds", cfg.eval_seeds},
          {"rows", row_count},
          {"columns", kCsvHeader},
          {"files", files}};
}

std::vector<std::string> emit_metrics(const std::vector<MetricsRow>& rows, const ExperimentConfig& cfg,
                                      const SweepOutput& what, const std::string& dir,
                                      const std::vector<MetricsFormat>& formats) {
  if (rows.empty()) throw EmptyInputError("emit_metrics: no rows to write");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir +
                  (ec ? ": " + ec.message() : std::string()));
  }
  std::vector<std::string> names;
  std::vector<std::string> paths;
  for (MetricsFormat f : formats) {
    const bool csv = f == MetricsFormat::Csv;
    const std::string name = what.sweep + (csv ? ".csv" : ".jsonl");
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_file_text(path, csv ? to_csv(rows) : to_json_lines(rows));
    names.push_back(name);
    paths.push_back(path);
  }
  const std::string mpath = (std::filesystem::path(dir) / (what.sweep + ".manifest.json")).string();
  write_file_text(mpath, manifest(cfg, what, rows.size(), names).dump(2) + "\n");
  paths.push_back(mpath);
  return paths;
}

}  // namespace m4sc::sim

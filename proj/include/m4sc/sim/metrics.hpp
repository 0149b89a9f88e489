#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "m4sc/sim/config.hpp"
#include "m4sc/sim/sweep.hpp"

namespace m4sc::sim {

/// Column order of the CSV header and of every json-lines record.
inline constexpr const char* kCsvHeader =
    "run_id,users,overlap,snr_db,channel,payload_symbols,baseline_symbols,sideinfo_bytes,"
    "savings_ratio,accuracy,semantic_mse,seed";

enum class MetricsFormat { Csv, JsonLines };

std::string to_csv(const std::vector<MetricsRow>& rows);
std::string to_json_lines(const std::vector<MetricsRow>& rows);
/// Throws CorruptionError naming the line on a malformed row or header.
std::vector<MetricsRow> parse_csv(const std::string& text);
std::vector<MetricsRow> parse_json_lines(const std::string& text);

struct SweepOutput {
  std::string sweep;           ///< "users", "snr", "overlap", "tau" or "simulate"
  std::vector<double> points;  ///< swept values
};

/// Writes `<dir>/<sweep>.csv` and/or `<dir>/<sweep>.jsonl` plus
/// `<dir>/<sweep>.manifest.json` holding the config hash, the config itself,
/// seeds, swept points and the files written. Creates `dir` if needed.
/// Returns the paths written. Throws EmptyInputError for no rows and IoError
/// when the directory or a file cannot be written.
std::vector<std::string> emit_metrics(const std::vector<MetricsRow>& rows, const ExperimentConfig& cfg,
                                      const SweepOutput& what, const std::string& dir,
                                      const std::vector<MetricsFormat>& formats = {
                                          MetricsFormat::Csv, MetricsFormat::JsonLines});

nlohmann::json manifest(const ExperimentConfig& cfg, const SweepOutput& what,
                        std::size_t row_count, const std::vector<std::string>& files);

}  // namespace m4sc::sim

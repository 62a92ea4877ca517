#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdlab/harness.hpp"

namespace cdlab {

inline constexpr const char* kCsvHeader = "n,estimator,stat,value,stderr,replications,seed";
inline constexpr const char* kSchemaVersion = "1";

struct StatRow {
  std::size_t n = 0;
  std::string estimator;
  std::string stat;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  bool operator==(const StatRow&) const = default;
};

// One row per (n, estimator, statistic) in a fixed order.
std::vector<StatRow> report_rows(const ExperimentReport& report);

// Values are written with 17 significant digits so parse_csv restores them exactly.
std::string format_csv(const std::vector<StatRow>& rows);
std::vector<StatRow> parse_csv(const std::string& text);

nlohmann::json summary_json(const ExperimentReport& report);

// Log-log plot of the mean squared errors against n, with the online bound
// overlaid when present.
std::string render_svg(const ExperimentReport& report);

// Writes <out_dir>/<stem>.csv, .json and .svg as enabled in `outputs`;
// returns the written paths. Throws Error on I/O failure.
std::vector<std::string> emit_report(const ExperimentReport& report, const OutputSpec& outputs);

}  // namespace cdlab

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace bmk {

/// One verdict in a report. `reference_kind` says where the reference value
/// comes from: "closed-form", "bound", "identity", "estimate" or "budget".
struct CheckRow {
  std::string name;
  double value = 0;
  double reference = 0;
  std::string reference_kind;
  double tolerance = 0;
  bool pass = false;
};

struct Report {
  std::string subcommand;
  nlohmann::json config;   // fully resolved, defaults filled in
  std::vector<CheckRow> checks;
  nlohmann::json result;
  std::string csv;         // flat projection where the subcommand has one
  double wall_seconds = 0;
  int workers = 1;

  bool pass() const;
};

nlohmann::json to_json(const Report& r);
/// "json", "csv" or "plot-data" view of a report.
std::string render(const Report& r, const std::string& format);

const std::vector<std::string>& subcommands();

/// Dispatch one run. Config keys are per subcommand; unknown keys are a
/// ParseError. String values of "phi", "body" and "input" name JSON files.
Report run(const std::string& subcommand, const nlohmann::json& config);

nlohmann::json read_json_file(const std::string& path);
/// Write to a sibling temporary file, then rename over the target.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace bmk

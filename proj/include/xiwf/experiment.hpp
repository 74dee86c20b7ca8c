#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xiwf/config.hpp"

namespace xiwf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdictFail = 1;
inline constexpr int kExitUsage = 2;

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Header row plus one line per row; reals printed with %.17g.
  [[nodiscard]] std::string to_csv() const;
  /// Rows as an array of objects keyed by column.
  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct Report {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
  Table table;
  int exit_code = kExitOk;

  /// {command, config_hash, seed, results, diagnostics}; the table is
  /// embedded as results.rows.
  [[nodiscard]] std::string to_json() const;
};

const std::vector<std::string>& experiment_commands();

/// Runs one subcommand. Throws ConfigError when the command does not fit
/// the configured model.
Report run_experiment(const std::string& command, const ExperimentConfig& config);

/// Writes the report to <dir>/<command>.json, plus the table to
/// <dir>/<command>.csv for the csv format. Returns the paths written.
std::vector<std::string> write_report(const Report& report, const std::string& dir,
                                      const std::string& format);

}  // namespace xiwf

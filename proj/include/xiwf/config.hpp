#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "xiwf/discrete.hpp"
#include "xiwf/limit.hpp"

namespace xiwf {

/// Invalid or missing configuration entry; key() names it.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat `key = value` text with dotted keys. Lines starting with '#' and
/// blank lines are ignored; a key may appear only once.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void erase(const std::string& key) { entries_.erase(key); }
  [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }
  [[nodiscard]] const std::map<std::string, std::string>& entries() const { return entries_; }

  [[nodiscard]] std::string text(const std::string& key) const;
  [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double real(const std::string& key) const;
  [[nodiscard]] double real(const std::string& key, double fallback) const;
  [[nodiscard]] std::uint64_t count(const std::string& key) const;
  [[nodiscard]] std::uint64_t count(const std::string& key, std::uint64_t fallback) const;
  [[nodiscard]] std::vector<double> reals(const std::string& key) const;

  /// Canonical `key=value\n` listing in key order.
  [[nodiscard]] std::string canonical() const;

  /// Keys never looked up since the last forget_reads().
  [[nodiscard]] std::vector<std::string> unread() const;
  void forget_reads() const { read_.clear(); }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> read_;
};

/// FNV-1a 64 of the canonical listing without run.seed, as 16 hex digits.
std::string config_hash(const ConfigFile& config);

struct RunBlock {
  std::uint64_t seed = 0;
  std::uint64_t replicates = 10000;
  int generations = 10;
  double horizon = 1.0;
  double dt = 1e-3;
  double burn_in = 100.0;
  std::uint64_t cap = 10000;
  double x = 0.5;
  std::uint64_t n = 2;
  std::string mode = "exact";
  std::uint64_t record_every = 1;
};

struct OutputBlock {
  std::string dir = ".";
  std::string format = "csv";
};

/// Validated experiment description: exactly one model block.
struct ExperimentConfig {
  std::variant<DiscreteParams, LimitParams> model;
  RunBlock run;
  OutputBlock output;
  std::string hash;

  [[nodiscard]] bool is_discrete() const { return model.index() == 0; }
  [[nodiscard]] const DiscreteParams& discrete() const;
  [[nodiscard]] const LimitParams& limit() const;
};

SelectionLaw parse_selection(const ConfigFile& config, const std::string& prefix);
std::optional<XiMeasure> parse_xi(const ConfigFile& config, const std::string& prefix);
ExperimentConfig build_experiment(const ConfigFile& config);

}  // namespace xiwf

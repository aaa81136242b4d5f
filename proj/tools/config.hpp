#pragma once

// Scenario files: nested YAML maps flattened to dotted keys, each key bound to
// one Scenario field. Unknown keys are rejected with their source location.

#include <attctl/sim.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace attctl::cli {

/// Analysis window and PE threshold used when summarizing a run.
struct MetricsWindow {
  double t_start = 0.0;
  double t_end = -1.0;  // negative: end of run
  double eps_pe = 1e-6;
};

struct ScenarioConfig {
  Scenario scenario;
  MetricsWindow window;
  std::string source;  // file the scenario came from

  double window_end() const { return window.t_end < 0.0 ? scenario.duration : window.t_end; }
};

/// Raw key/value view of a scenario file before it is bound to a Scenario.
class ConfigDocument {
 public:
  /// Throws ConfigError with "file:line:col" on syntax errors or unknown keys.
  static ConfigDocument load_file(const std::string& path);
  static ConfigDocument load_string(const std::string& text, const std::string& origin);

  /// key=value with a dotted key; the value is parsed as YAML.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value, const std::string& origin);

  /// Binds every entry; throws ConfigError naming the entry's location.
  ScenarioConfig resolve() const;

  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string key;
    std::string yaml;  // scalar or flow sequence, re-parsed on resolve
    std::string where;
  };
  std::string origin_;
  std::vector<Entry> entries_;

  void put(Entry e);
};

/// Every configurable key, in canonical order.
std::vector<std::string> known_keys();
/// True for keys holding a single number (eligible for sweeps).
bool is_numeric_key(const std::string& key);

/// Canonical "key = value" list of the fully resolved parameter set.
std::vector<std::pair<std::string, std::string>> resolved_parameters(const ScenarioConfig& cfg);

/// 64-bit FNV-1a over the canonical parameter text.
std::uint64_t config_hash(const ScenarioConfig& cfg);

}  // namespace attctl::cli

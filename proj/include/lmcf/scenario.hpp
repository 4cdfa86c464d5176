#pragma once

#include <map>
#include <nlohmann/json.hpp>

#include "lmcf/io.hpp"

namespace lmcf::lab {

/// TOML-style configuration: [section] headers, key = value lines with
/// numbers, strings, booleans and flat arrays. Lookups use
/// "section.key"; unknown keys fall back to the supplied default.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config parse_file(const std::filesystem::path& p);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  double num(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  std::vector<double> array(const std::string& key,
                            std::vector<double> fallback) const;

  void set(const std::string& key, const std::string& raw) {
    values_[key] = raw;
  }
  nlohmann::json echo() const;

 private:
  std::map<std::string, std::string> values_;
};

struct ScenarioResult {
  FlowTrace trace;
  nlohmann::json summary;
};

struct Scenario {
  std::string name;
  std::string description;
  ScenarioResult (*run)(const Config&);
};

const std::vector<Scenario>& scenarios();
/// Errors: ConfigError for unknown names.
const Scenario& find_scenario(const std::string& name);

/// Runs a scenario and persists trace + summary + SVG plots under out_dir.
nlohmann::json cli_run(const Config& cfg, const std::filesystem::path& out_dir);

/// Diagnostics over a stored trace: Excess/Distance/Neck reports at a
/// rescaled view (center, tau) against a pair read from the config or the
/// standard pair.
nlohmann::json cli_diag(const std::filesystem::path& trace_dir,
                        const Config& cfg,
                        const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// verification suites (the acceptance criteria, runnable one by one)

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string note;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;
  double seconds = 0.0;
  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  nlohmann::json to_json() const;
};

std::vector<std::string> suite_names();
/// Errors: UnknownSuite.
VerifyReport run_suite(const std::string& name, const Config& cfg = {});

}  // namespace lmcf::lab

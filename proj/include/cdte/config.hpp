#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cdte/sim.hpp"

namespace cdte::config {

// TOML-style key/value subset: [section] headers, key = value with strings,
// numbers, booleans and flat arrays, # comments. Keys are flattened to
// "section.key".
struct Value {
  std::variant<std::string, double, bool, std::vector<Value>> v;
  int line = 0;
};

using Table = std::map<std::string, Value>;

Table parse_toml(const std::string& text);
Table parse_toml_file(const std::string& path);

// Typed accessors with consumed-key tracking; finish() rejects unknown keys.
class Reader {
 public:
  explicit Reader(Table table) : table_(std::move(table)) {}

  bool has(const std::string& key) const { return table_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_number(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_numbers(const std::string& key);
  std::vector<std::string> get_strings(const std::string& key);

  void finish() const;  // throws ConfigError naming any unconsumed key

 private:
  const Value* fetch(const std::string& key);
  Table table_;
  std::set<std::string> used_;
};

// One embedded acceptance check, parsed from strings like
// "cdte_forest<plugin_raw@3200" (mse_less) or "cdte_ols>=0.85@3200"
// (coverage_min / coverage_max).
struct CheckSpec {
  enum class Kind { MseLess, CoverageMin, CoverageMax };
  Kind kind = Kind::MseLess;
  std::string left;
  std::string right;        // MseLess only
  double threshold = 0.0;   // coverage bounds
  int n = 0;

  std::string describe() const;
};

struct BenchmarkJob {
  sim::BenchmarkConfig bench;
  std::vector<CheckSpec> checks;
  std::string results_csv = "results.csv";
  std::string summary_json = "summary.json";
};

struct RiskProfileJob {
  double mu = 0.0;
  double sigma = 0.5;
  double cap = 6.0;
  int tau_points = 50;
  double tau_min = 0.01;
  double tau_max = 0.99;
  int samples = 1000000;
  std::uint64_t seed = 7;
  std::string out_csv = "risk_profile.csv";

  std::vector<double> tau_grid() const;
};

using SimulateJob = std::variant<BenchmarkJob, RiskProfileJob>;

// Dispatches on which sections are present ([benchmark] vs [risk_profile]);
// unknown keys are rejected, parameters validated before any computation.
SimulateJob load_simulate_job(const std::string& config_path);

StatisticSpec parse_statistic(const std::string& kind, double tau, double delta);
NuisanceConfig parse_nuisance(Reader& reader);

}  // namespace cdte::config

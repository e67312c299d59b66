#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "cdte/config.hpp"

namespace cdte::cli {

// Caps the OpenMP worker count (0 = library default).
void set_threads(int threads);

// Write-temp-then-rename so re-runs overwrite outputs atomically.
void atomic_write(const std::string& path, const std::string& content);

std::string benchmark_results_csv(const sim::BenchmarkResult& result);
std::string risk_profile_csv(const std::vector<sim::RiskProfileRow>& rows);

// Runs a [benchmark] or [risk_profile] config, writes artifacts into
// out_dir, prints one verdict line per embedded check. Exit status 0 iff
// every check passed and no replication failed.
int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::ostream& out = std::cout);

struct FitOptions {
  std::string data_path;
  std::string outcome_col;
  std::string treatment_col;
  std::vector<std::string> feature_cols;
  std::string statistic = "superquantile";
  double tau = 0.75;
  double delta = 1.3862943611198906;  // -log(0.25)
  int folds = 5;
  std::string final_stage = "forest";      // forest | ols
  std::vector<std::string> project_cols;   // names for the OLS projection
  std::uint64_t seed = 0;
  bool shuffle = false;                    // permute rows before fold assignment
  NuisanceConfig nuisance;
  std::string out_prefix = "cdte";
};

// Fits the CDTE learner on a CSV dataset. Always writes per-row predictions
// (<prefix>_predictions.csv) and diagnostics (<prefix>_diagnostics.json);
// with projection columns, also <prefix>_projection.json with robust CIs.
int cmd_fit(const FitOptions& options, std::ostream& out = std::cout);

struct RiskProfileOptions {
  double mu = 0.0;
  double sigma = 0.5;
  double cap = 6.0;
  int tau_points = 50;
  double tau_min = 0.01;
  double tau_max = 0.99;
  int samples = 1000000;
  std::uint64_t seed = 7;
  std::string out_csv = "risk_profile.csv";
};

int cmd_risk_profile(const RiskProfileOptions& options, std::ostream& out = std::cout);

}  // namespace cdte::cli

#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace cdte::diagnostics {

// Process-wide counters for numeric guard rails. Atomics: kernels bump them
// from parallel regions.
struct Counters {
  std::atomic<std::int64_t> propensity_clips{0};
  std::atomic<std::int64_t> density_floors{0};
  std::atomic<std::int64_t> exponent_clamps{0};
  std::atomic<std::int64_t> kernel_dims_skipped{0};
  std::atomic<std::int64_t> separation_warnings{0};
  std::atomic<std::int64_t> evar_beta_floors{0};

  void reset();
};

Counters& counters();

struct CounterSnapshot {
  std::int64_t propensity_clips = 0;
  std::int64_t density_floors = 0;
  std::int64_t exponent_clamps = 0;
  std::int64_t kernel_dims_skipped = 0;
  std::int64_t separation_warnings = 0;
  std::int64_t evar_beta_floors = 0;
};

CounterSnapshot snapshot();

// In-sample nuisance quality per cross-fitting fold. Propensity quality is
// log-loss; quantile quality is pinball loss at the statistic's tau. Fields
// are NaN when the statistic does not use that nuisance.
struct FoldSummary {
  int fold = 0;
  int train_rows = 0;
  double propensity_logloss = std::numeric_limits<double>::quiet_NaN();
  double pinball_loss = std::numeric_limits<double>::quiet_NaN();
};

struct RunArtifacts {
  std::vector<FoldSummary> folds;
  std::vector<std::pair<int, std::string>> failures;  // (rep index, what())
};

struct RunReport {
  std::vector<FoldSummary> folds;
  CounterSnapshot counters;
  std::vector<std::pair<int, std::string>> failures;

  nlohmann::json to_json() const;
};

// Pure aggregation: same artifacts + same counter snapshot -> same report.
RunReport summarize(const RunArtifacts& artifacts, const CounterSnapshot& snap);
RunReport summarize(const RunArtifacts& artifacts);

}  // namespace cdte::diagnostics

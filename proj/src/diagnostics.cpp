#include "cdte/diagnostics.hpp"

namespace cdte::diagnostics {

void Counters::reset() {
  propensity_clips = 0;
  density_floors = 0;
  exponent_clamps = 0;
  kernel_dims_skipped = 0;
  separation_warnings = 0;
  evar_beta_floors = 0;
}

Counters& counters() {
  static Counters c;
  return c;
}

CounterSnapshot snapshot() {
  const Counters& c = counters();
  return CounterSnapshot{c.propensity_clips.load(), c.density_floors.load(),
                         c.exponent_clamps.load(), c.kernel_dims_skipped.load(),
                         c.separation_warnings.load(), c.evar_beta_floors.load()};
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["counters"] = {{"propensity_clips", counters.propensity_clips},
                   {"density_floors", counters.density_floors},
                   {"exponent_clamps", counters.exponent_clamps},
                   {"kernel_dims_skipped", counters.kernel_dims_skipped},
                   {"separation_warnings", counters.separation_warnings},
                   {"evar_beta_floors", counters.evar_beta_floors}};
  j["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json jf{{"fold", f.fold}, {"train_rows", f.train_rows}};
    if (std::isfinite(f.propensity_logloss))
      jf["propensity_logloss"] = f.propensity_logloss;
    if (std::isfinite(f.pinball_loss)) jf["pinball_loss"] = f.pinball_loss;
    j["folds"].push_back(jf);
  }
  j["failures"] = nlohmann::json::array();
  for (const auto& [rep, what] : failures)
    j["failures"].push_back({{"rep", rep}, {"error", what}});
  return j;
}

RunReport summarize(const RunArtifacts& artifacts, const CounterSnapshot& snap) {
  return RunReport{artifacts.folds, snap, artifacts.failures};
}

RunReport summarize(const RunArtifacts& artifacts) {
  return summarize(artifacts, snapshot());
}

}  // namespace cdte::diagnostics

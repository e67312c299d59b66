#include "cdte/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdte/errors.hpp"

namespace cdte::cli {

namespace fs = std::filesystem;

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out << content;
  }
  fs::rename(tmp, target);
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string benchmark_results_csv(const sim::BenchmarkResult& result) {
  std::ostringstream ss;
  ss << "estimator,n,rep,mse\n";
  for (const auto& row : result.rows)
    ss << row.estimator << ',' << row.n << ',' << row.rep << ',' << fmt17(row.mse)
       << '\n';
  return ss.str();
}

std::string risk_profile_csv(const std::vector<sim::RiskProfileRow>& rows) {
  std::ostringstream ss;
  ss << "tau,quantile,superquantile,evar\n";
  for (const auto& r : rows)
    ss << fmt17(r.tau) << ',' << fmt17(r.quantile) << ',' << fmt17(r.superquantile)
       << ',' << fmt17(r.evar) << '\n';
  return ss.str();
}

namespace {

struct CheckOutcome {
  config::CheckSpec spec;
  bool pass = false;
  std::string detail;
};

CheckOutcome evaluate_check(const config::CheckSpec& check,
                            const sim::BenchmarkResult& result) {
  CheckOutcome out{check, false, ""};
  std::ostringstream detail;
  switch (check.kind) {
    case config::CheckSpec::Kind::MseLess: {
      const auto* lhs = result.find(check.left, check.n);
      const auto* rhs = result.find(check.right, check.n);
      if (!lhs || !rhs) {
        detail << "estimator missing from results";
        break;
      }
      out.pass = lhs->mean_mse < rhs->mean_mse;
      detail << fmt17(lhs->mean_mse) << (out.pass ? " < " : " !< ")
             << fmt17(rhs->mean_mse);
      break;
    }
    case config::CheckSpec::Kind::CoverageMin:
    case config::CheckSpec::Kind::CoverageMax: {
      const auto* lhs = result.find(check.left, check.n);
      if (!lhs || !std::isfinite(lhs->coverage)) {
        detail << "coverage missing from results";
        break;
      }
      const bool is_min = check.kind == config::CheckSpec::Kind::CoverageMin;
      out.pass = is_min ? lhs->coverage >= check.threshold
                        : lhs->coverage <= check.threshold;
      detail << "coverage=" << lhs->coverage;
      break;
    }
  }
  out.detail = detail.str();
  return out;
}

nlohmann::json summary_json(const sim::BenchmarkResult& result,
                            const std::vector<CheckOutcome>& checks) {
  nlohmann::json j;
  j["summary"] = nlohmann::json::array();
  for (const auto& s : result.summary) {
    nlohmann::json row{{"estimator", s.estimator},
                       {"n", s.n},
                       {"mean_mse", s.mean_mse},
                       {"mse_se", s.mse_se},
                       {"reps_ok", s.reps_ok}};
    if (std::isfinite(s.coverage)) row["coverage"] = s.coverage;
    j["summary"].push_back(row);
  }
  if (result.oracle_coef.size() > 0) {
    j["oracle_projection"] = std::vector<double>(
        result.oracle_coef.data(), result.oracle_coef.data() + result.oracle_coef.size());
    j["oracle_x1"] = result.oracle_x1;
  }
  j["failures"] = nlohmann::json::array();
  for (const auto& [rep, what] : result.failures)
    j["failures"].push_back({{"cell", rep}, {"error", what}});
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks)
    j["checks"].push_back({{"check", c.spec.describe()},
                           {"pass", c.pass},
                           {"detail", c.detail}});
  return j;
}

int run_benchmark_job(const config::BenchmarkJob& job, const std::string& out_dir,
                      std::ostream& out) {
  diagnostics::counters().reset();
  const sim::BenchmarkResult result = sim::run_benchmark(job.bench);

  std::vector<CheckOutcome> outcomes;
  bool all_pass = true;
  for (const auto& check : job.checks) {
    outcomes.push_back(evaluate_check(check, result));
    const auto& oc = outcomes.back();
    all_pass = all_pass && oc.pass;
    out << "check " << check.describe() << ": " << (oc.pass ? "PASS" : "FAIL")
        << " (" << oc.detail << ")\n";
  }
  for (const auto& [cell, what] : result.failures)
    out << "warning: replication failed and was excluded: " << what << "\n";

  const fs::path dir(out_dir);
  atomic_write((dir / job.results_csv).string(), benchmark_results_csv(result));
  atomic_write((dir / job.summary_json).string(), summary_json(result, outcomes).dump(2) + "\n");

  diagnostics::RunArtifacts artifacts;
  for (const auto& [cell, what] : result.failures) artifacts.failures.emplace_back(cell, what);
  atomic_write((dir / "diagnostics.json").string(),
               diagnostics::summarize(artifacts).to_json().dump(2) + "\n");

  return (all_pass && result.failures.empty()) ? 0 : 1;
}

int run_profile_job(const config::RiskProfileJob& job, const std::string& out_dir,
                    std::ostream& out) {
  diagnostics::counters().reset();
  const auto rows = sim::risk_profile(job.mu, job.sigma, job.cap, job.tau_grid(),
                                      job.samples, job.seed);
  bool ordered = true;
  for (const auto& r : rows)
    ordered = ordered && r.quantile <= r.superquantile + 1e-12 &&
              r.superquantile <= r.evar + 1e-9;
  out << "check quantile <= superquantile <= evar on the tau grid: "
      << (ordered ? "PASS" : "FAIL") << "\n";

  const fs::path dir(out_dir);
  atomic_write((dir / job.out_csv).string(), risk_profile_csv(rows));
  atomic_write((dir / "diagnostics.json").string(),
               diagnostics::summarize({}).to_json().dump(2) + "\n");
  return ordered ? 0 : 1;
}

}  // namespace

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::ostream& out) {
  try {
    const config::SimulateJob job = config::load_simulate_job(config_path);
    if (const auto* bench = std::get_if<config::BenchmarkJob>(&job))
      return run_benchmark_job(*bench, out_dir, out);
    return run_profile_job(std::get<config::RiskProfileJob>(job), out_dir, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_fit(const FitOptions& options, std::ostream& out) {
  try {
    diagnostics::counters().reset();
    Dataset data = load_csv(options.data_path, options.outcome_col,
                            options.treatment_col, options.feature_cols);
    if (options.shuffle) data = data.shuffled(mix_seed(options.seed, 0x5));
    const StatisticSpec spec =
        config::parse_statistic(options.statistic, options.tau, options.delta);

    FinalStage stage;
    if (options.final_stage == "forest")
      stage = FinalStage::Forest;
    else if (options.final_stage == "ols")
      stage = FinalStage::Ols;
    else
      throw ConfigError("fit: final stage must be forest|ols");

    const FittedCDTE fit = cdte_learn(data, options.folds, spec, options.nuisance,
                                      stage, options.seed);

    const Eigen::VectorXd predictions = predict_all(*fit.final_model, data.x());
    std::ostringstream pred;
    pred << "row,cdte\n";
    for (int i = 0; i < data.n(); ++i)
      pred << i << ',' << fmt17(predictions(i)) << '\n';
    atomic_write(options.out_prefix + "_predictions.csv", pred.str());

    if (!options.project_cols.empty()) {
      FeatureMap fm;
      for (const auto& name : options.project_cols) {
        const auto it = std::find(options.feature_cols.begin(),
                                  options.feature_cols.end(), name);
        if (it == options.feature_cols.end())
          throw ConfigError("fit: projection column '" + name +
                            "' is not among the feature columns");
        fm.coords.push_back(static_cast<int>(it - options.feature_cols.begin()));
      }
      const ProjectionResult proj = ols_project(fit.psi.values, fm.phi_all(data.x()));
      nlohmann::json j = proj.to_json();
      j["features"] = options.project_cols;
      atomic_write(options.out_prefix + "_projection.json", j.dump(2) + "\n");
      out << "projection written for " << options.project_cols.size()
          << " feature(s) + intercept\n";
    }

    atomic_write(options.out_prefix + "_diagnostics.json",
                 diagnostics::summarize(fit.artifacts).to_json().dump(2) + "\n");
    out << "fit complete: n=" << data.n() << ", statistic=" << spec.name() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_risk_profile(const RiskProfileOptions& options, std::ostream& out) {
  try {
    config::RiskProfileJob job;
    job.mu = options.mu;
    job.sigma = options.sigma;
    job.cap = options.cap;
    job.tau_points = options.tau_points;
    job.tau_min = options.tau_min;
    job.tau_max = options.tau_max;
    job.samples = options.samples;
    job.seed = options.seed;
    diagnostics::counters().reset();
    const auto rows = sim::risk_profile(job.mu, job.sigma, job.cap, job.tau_grid(),
                                        job.samples, job.seed);
    atomic_write(options.out_csv, risk_profile_csv(rows));
    atomic_write(options.out_csv + ".diagnostics.json",
                 diagnostics::summarize({}).to_json().dump(2) + "\n");
    out << "risk profile written to " << options.out_csv << " (" << rows.size()
        << " levels)\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cdte::cli

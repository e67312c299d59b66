#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdte/cli.hpp"
#include "cdte/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Conditional distributional treatment effects: benchmark "
               "reproduction, dataset fitting, and risk-measure profiles"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap the worker thread count (0 = all)");

  // simulate
  auto* sim = app.add_subcommand("simulate",
                                 "Run a benchmark or risk-profile config (TOML)");
  std::string config_path;
  std::string out_dir = ".";
  sim->add_option("--config", config_path, "Path to the TOML config")->required();
  sim->add_option("--out", out_dir, "Output directory");

  // fit
  auto* fit = app.add_subcommand(
      "fit",
      "Fit the CDTE learner on a CSV dataset. For lower-tail (below-quantile) "
      "superquantile effects, negate the outcome column and negate the "
      "resulting estimates.");
  cdte::cli::FitOptions fo;
  std::string features_csv, project_csv;
  std::string propensity = "logistic", quantile = "qrf", superquantile = "sqrf",
              evar = "forest-weights";
  double known_propensity = 0.5;
  fit->add_option("--data", fo.data_path, "CSV file")->required();
  fit->add_option("--outcome", fo.outcome_col, "Outcome column")->required();
  fit->add_option("--treatment", fo.treatment_col, "Treatment column (0/1)")
      ->required();
  fit->add_option("--features", features_csv, "Comma-separated feature columns")
      ->required();
  fit->add_option("--statistic", fo.statistic,
                  "mean|quantile|superquantile|klrisk");
  fit->add_option("--tau", fo.tau, "Level for quantile/superquantile");
  fit->add_option("--delta", fo.delta, "KL radius for klrisk");
  fit->add_option("--folds", fo.folds, "Cross-fitting folds K >= 2");
  fit->add_option("--final-stage", fo.final_stage, "forest|ols");
  fit->add_option("--project", project_csv,
                  "Comma-separated feature names for the OLS projection");
  fit->add_option("--seed", fo.seed, "Root seed");
  fit->add_flag("--shuffle", fo.shuffle,
                "Permute rows (seeded) before modular fold assignment");
  fit->add_option("--out", fo.out_prefix, "Output path prefix");
  fit->add_option("--propensity", propensity, "logistic|forest|known");
  fit->add_option("--known-propensity", known_propensity,
                  "Constant propensity when --propensity known");
  fit->add_option("--quantile-learner", quantile, "qrf|linear-quantile|kernel");
  fit->add_option("--superquantile-learner", superquantile,
                  "sqrf|two-stage-ols|kernel");
  fit->add_option("--evar-weights", evar, "forest-weights|kernel-weights");
  fit->add_option("--density-bandwidth", fo.nuisance.density_bandwidth,
                  "Kernel bandwidth for the density-at-quantile nuisance");
  fit->add_option("--trees", fo.nuisance.n_trees, "Trees per forest");

  // risk-profile
  auto* prof = app.add_subcommand("risk-profile",
                                  "Quantile/superquantile/EVaR comparison table");
  cdte::cli::RiskProfileOptions ro;
  prof->add_option("--mu", ro.mu, "Lognormal log-mean");
  prof->add_option("--sigma", ro.sigma, "Lognormal log-sd");
  prof->add_option("--cap", ro.cap, "Right cap on outcomes");
  prof->add_option("--tau-points", ro.tau_points, "Grid size");
  prof->add_option("--tau-min", ro.tau_min, "Smallest level");
  prof->add_option("--tau-max", ro.tau_max, "Largest level");
  prof->add_option("--samples", ro.samples, "Sample size");
  prof->add_option("--seed", ro.seed, "Seed");
  prof->add_option("--out", ro.out_csv, "Output CSV");

  CLI11_PARSE(app, argc, argv);
  cdte::cli::set_threads(threads);

  if (sim->parsed()) return cdte::cli::cmd_simulate(config_path, out_dir);

  if (fit->parsed()) {
    auto split_names = [](const std::string& csv) {
      std::vector<std::string> names;
      std::string cur;
      for (char c : csv) {
        if (c == ',') {
          if (!cur.empty()) names.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!cur.empty()) names.push_back(cur);
      return names;
    };
    fo.feature_cols = split_names(features_csv);
    fo.project_cols = split_names(project_csv);
    try {
      cdte::config::Table overrides;
      overrides["nuisance.propensity"] = cdte::config::Value{propensity, 0};
      overrides["nuisance.known_propensity"] = cdte::config::Value{known_propensity, 0};
      overrides["nuisance.quantile"] = cdte::config::Value{quantile, 0};
      overrides["nuisance.superquantile"] = cdte::config::Value{superquantile, 0};
      overrides["nuisance.evar"] = cdte::config::Value{evar, 0};
      cdte::config::Reader reader(overrides);
      const double bandwidth = fo.nuisance.density_bandwidth;
      const int trees = fo.nuisance.n_trees;
      fo.nuisance = cdte::config::parse_nuisance(reader);
      fo.nuisance.density_bandwidth = bandwidth;
      fo.nuisance.n_trees = trees;
    } catch (const cdte::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    return cdte::cli::cmd_fit(fo);
  }

  return cdte::cli::cmd_risk_profile(ro);
}

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdte/cli.hpp"
#include "cdte/rng.hpp"
#include "cdte/sim.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cdte;
namespace fs = std::filesystem;

namespace {

fs::path workdir() {
  const auto dir = fs::temp_directory_path() / "cdte_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fit command end to end on a synthetic dataset") {
  const auto dir = workdir();
  const auto csv = dir / "synthetic.csv";
  {
    sim::Dgp dgp;
    dgp.d = 4;
    Rng rng(2025);
    const Dataset data = dgp.sample(600, rng);
    write_csv(csv.string(), data, "wealth", "eligible",
              {"age", "income", "educ", "fsize"});
  }

  cli::FitOptions fo;
  fo.data_path = csv.string();
  fo.outcome_col = "wealth";
  fo.treatment_col = "eligible";
  fo.feature_cols = {"age", "income", "educ", "fsize"};
  fo.statistic = "superquantile";
  fo.tau = 0.75;
  fo.folds = 3;
  fo.seed = 9;
  fo.nuisance.n_trees = 20;
  fo.project_cols = {"income"};
  fo.out_prefix = (dir / "fit").string();

  std::ostringstream out;
  REQUIRE(cli::cmd_fit(fo, out) == 0);

  SUBCASE("per-row predictions align with the dataset") {
    const std::string pred = slurp(dir / "fit_predictions.csv");
    CHECK(pred.rfind("row,cdte\n", 0) == 0);
    CHECK(std::count(pred.begin(), pred.end(), '\n') == 601);
  }
  SUBCASE("projection json has matching coefficient and interval lengths") {
    const auto j = nlohmann::json::parse(slurp(dir / "fit_projection.json"));
    REQUIRE(j["coef"].size() == 2);  // intercept + income
    CHECK(j["stderr"].size() == 2);
    CHECK(j["ci_lower"].size() == 2);
    CHECK(j["ci_upper"].size() == 2);
    CHECK(j["level"] == 0.95);
    CHECK(j["features"][0] == "income");
  }
  SUBCASE("diagnostics emitted alongside") {
    const auto j = nlohmann::json::parse(slurp(dir / "fit_diagnostics.json"));
    CHECK(j.contains("counters"));
    CHECK(j["folds"].size() == 3);
  }
}

TEST_CASE("fit command surfaces bad inputs") {
  cli::FitOptions fo;
  fo.data_path = (workdir() / "does_not_exist.csv").string();
  fo.outcome_col = "y";
  fo.treatment_col = "a";
  fo.feature_cols = {"x"};
  std::ostringstream out;
  CHECK(cli::cmd_fit(fo, out) == 2);

  // projection column must be one of the features
  const auto dir = workdir();
  const auto csv = dir / "tiny.csv";
  {
    sim::Dgp dgp;
    dgp.d = 2;
    Rng rng(7);
    write_csv(csv.string(), dgp.sample(80, rng), "y", "a", {"x1", "x2"});
  }
  cli::FitOptions bad;
  bad.data_path = csv.string();
  bad.outcome_col = "y";
  bad.treatment_col = "a";
  bad.feature_cols = {"x1", "x2"};
  bad.statistic = "mean";
  bad.folds = 2;
  bad.nuisance.n_trees = 5;
  bad.project_cols = {"zzz"};
  bad.out_prefix = (dir / "bad").string();
  CHECK(cli::cmd_fit(bad, out) == 2);
}

TEST_CASE("simulate command rejects invalid configs with field messages") {
  const auto dir = workdir();
  const auto cfg = dir / "bad.toml";
  {
    std::ofstream f(cfg);
    f << "[statistic]\nkind = \"quantile\"\ntau = 1.5\n[benchmark]\nreps = 1\n";
  }
  std::ostringstream out;
  CHECK(cli::cmd_simulate(cfg.string(), dir.string(), out) == 2);
}

TEST_CASE("risk-profile command writes the table") {
  const auto dir = workdir();
  cli::RiskProfileOptions ro;
  ro.samples = 5000;
  ro.tau_points = 4;
  ro.out_csv = (dir / "profile.csv").string();
  std::ostringstream out;
  REQUIRE(cli::cmd_risk_profile(ro, out) == 0);
  const std::string csv = slurp(dir / "profile.csv");
  CHECK(csv.rfind("tau,quantile,superquantile,evar\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

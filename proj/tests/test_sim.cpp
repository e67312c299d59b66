#include <cmath>

#include "cdte/errors.hpp"
#include "cdte/rng.hpp"
#include "cdte/sim.hpp"
#include "doctest.h"

using namespace cdte;
using sim::Dgp;

TEST_CASE("sample_dgp marginals") {
  Dgp dgp;
  Rng rng(91);
  const Dataset data = dgp.sample(100000, rng);

  SUBCASE("treatment probability near x0 = 0.5 is about one half") {
    int treated = 0, total = 0;
    for (int i = 0; i < data.n(); ++i) {
      if (std::fabs(data.x()(i, 0) - 0.5) < 0.05) {
        ++total;
        treated += data.a_at(i);
      }
    }
    CHECK(total > 5000);
    CHECK(std::fabs(double(treated) / total - 0.5) < 0.01);
  }
  SUBCASE("log-outcome residuals center on zero in both arms") {
    for (int arm : {0, 1}) {
      double sum = 0;
      int count = 0;
      for (int i = 0; i < data.n(); ++i) {
        if (data.a_at(i) != arm) continue;
        sum += std::log(data.y_at(i)) -
               (data.x()(i, 0) + arm * data.x()(i, 1));
        ++count;
      }
      CHECK(std::fabs(sum / count) < 0.01);
    }
  }
}

TEST_CASE("truncated draws never exceed the conditional cap") {
  Dgp dgp;
  dgp.truncate = true;
  Rng rng(92);
  const Dataset data = dgp.sample(20000, rng);
  for (int i = 0; i < data.n(); ++i) {
    const double cap = dgp.cap(data.x_row(i), data.a_at(i));
    CHECK(data.y_at(i) <= cap + 1e-12);
  }
}

TEST_CASE("closed-form multipliers") {
  Dgp dgp;
  SUBCASE("superquantile multiplier matches the lognormal tail formula") {
    const sim::TruthModel truth(dgp, StatisticSpec::superquantile(0.75));
    // e^{sigma^2/2} Phi(sigma - z_{0.75}) / 0.25 at sigma = 0.2
    // (high-precision reference value 1.2959632015749463)
    CHECK(truth.multiplier() == doctest::Approx(1.2959632015749463).epsilon(1e-9));
  }
  SUBCASE("quantile multiplier") {
    const sim::TruthModel truth(dgp, StatisticSpec::quantile(0.75));
    CHECK(truth.multiplier() == doctest::Approx(1.1444199903768675).epsilon(1e-9));
  }
  SUBCASE("mean multiplier") {
    const sim::TruthModel truth(dgp, StatisticSpec::mean());
    CHECK(truth.multiplier() == doctest::Approx(std::exp(0.02)).epsilon(1e-12));
  }
  SUBCASE("entropic-risk multiplier agrees with an empirical dual solve") {
    Dgp tr;
    tr.truncate = true;
    const double delta = -std::log1p(-0.75);
    const sim::TruthModel truth(tr, StatisticSpec::kl_risk(delta));
    // Independent route: empirical entropic risk of two million capped draws.
    Rng rng(93);
    const int n = 2000000;
    const double cap = std::exp(0.2 * normal_quantile(0.99));
    std::vector<double> values(n), weights(n, 1.0);
    for (auto& v : values) v = std::min(rng.lognormal(0.0, 0.2), cap);
    const double empirical = weighted_evar(values, weights, delta).R;
    CHECK(std::fabs(truth.multiplier() - empirical) < 5e-3);
  }
  SUBCASE("entropic risk needs the truncated law") {
    CHECK_THROWS_AS(sim::TruthModel(dgp, StatisticSpec::kl_risk(0.5)), ConfigError);
  }
}

TEST_CASE("true_cdte values") {
  Dgp dgp;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(10);

  SUBCASE("no effect where x1 = 0") {
    x(0) = 0.8;
    CHECK(sim::true_cdte(dgp, StatisticSpec::mean(), x) == 0.0);
    CHECK(sim::true_cdte(dgp, StatisticSpec::quantile(0.75), x) == 0.0);
    CHECK(sim::true_cdte(dgp, StatisticSpec::superquantile(0.75), x) == 0.0);
  }
  SUBCASE("superquantile effect at x0 = x1 = 1") {
    x(0) = 1.0;
    x(1) = 1.0;
    const sim::TruthModel truth(dgp, StatisticSpec::superquantile(0.75));
    CHECK(sim::true_cdte(dgp, StatisticSpec::superquantile(0.75), x) ==
          doctest::Approx(truth.multiplier() * (std::exp(2.0) - std::exp(1.0)))
              .epsilon(1e-12));
  }
  SUBCASE("mean effect closed form") {
    x(0) = 0.4;
    x(1) = 0.9;
    CHECK(sim::true_cdte(dgp, StatisticSpec::mean(), x) ==
          doctest::Approx(std::exp(0.4) * std::exp(0.02) * (std::exp(0.9) - 1.0))
              .epsilon(1e-12));
  }
}

TEST_CASE("homogeneity of the truncated entropic risk in the scale") {
  // The oracle scales one standardized solve by e^{mu}; confirm against an
  // independent empirical solve at a non-trivial mu.
  const double delta = 0.9, mu = 0.73;
  const auto se = sim::evar_truncated_standard_lognormal(0.2, 0.99, delta);
  Rng rng(94);
  const int n = 1500000;
  const double cap = std::exp(mu + 0.2 * normal_quantile(0.99));
  std::vector<double> values(n), weights(n, 1.0);
  for (auto& v : values) v = std::min(rng.lognormal(mu, 0.2), cap);
  const double empirical = weighted_evar(values, weights, delta).R;
  CHECK(std::fabs(std::exp(mu) * se.R - empirical) < 6e-3);
}

TEST_CASE("oracle nuisance evaluators satisfy their own moment equations") {
  // E[rho(Y, nu_a(x)) | X=x, A=a] = 0 under the DGP, estimated by MC.
  Dgp dgp;
  dgp.truncate = true;
  Rng rng(95);
  Eigen::VectorXd x(10);
  for (int j = 0; j < 10; ++j) x(j) = rng.uniform01();
  for (const auto& spec :
       {StatisticSpec::quantile(0.75), StatisticSpec::superquantile(0.75),
        StatisticSpec::kl_risk(1.0)}) {
    const auto nuis = sim::true_nuisances(dgp, spec);
    for (int arm : {0, 1}) {
      const auto nu = nuis.nu[arm](x);
      const int n = 200000;
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(spec.aux_dim() + 1);
      for (int i = 0; i < n; ++i) {
        const double y =
            std::min(rng.lognormal(dgp.mu_log(x, arm), dgp.sigma), dgp.cap(x, arm));
        sum += rho(spec, y, nu);
      }
      for (int j = 0; j < sum.size(); ++j)
        CHECK(std::fabs(sum(j) / n) < 0.02);
    }
  }
}

TEST_CASE("benchmark smoke run") {
  sim::BenchmarkConfig config;
  config.spec = StatisticSpec::superquantile(0.75);
  config.n_grid = {200};
  config.reps = 1;
  config.eval_points = 50;
  config.K = 2;
  config.nuisance.n_trees = 10;
  config.seed = 11;
  const auto result = sim::run_benchmark(config);
  CHECK(result.failures.empty());
  CHECK(result.rows.size() == config.estimators.size());
  for (const auto& row : result.rows) CHECK(std::isfinite(row.mse));
  CHECK(result.oracle_coef.size() == 11);
  for (const auto& name : config.estimators) {
    const auto* s = result.find(name, 200);
    REQUIRE(s != nullptr);
    CHECK(s->reps_ok == 1);
  }
}

TEST_CASE("mean MSE trends downward in n") {
  sim::BenchmarkConfig config;
  config.spec = StatisticSpec::superquantile(0.75);
  config.n_grid = {100, 400, 1600};
  config.reps = 4;
  config.eval_points = 100;
  config.K = 2;
  config.nuisance.n_trees = 30;
  config.estimators = {"cdte_forest"};
  config.seed = 5150;
  const auto result = sim::run_benchmark(config);
  std::vector<double> mse;
  for (int n : config.n_grid) mse.push_back(result.find("cdte_forest", n)->mean_mse);
  // Spearman over three points: require a strictly decreasing arrangement up
  // to one tie in rank (negative correlation).
  int inversions = 0, pairs = 0;
  for (std::size_t i = 0; i < mse.size(); ++i)
    for (std::size_t j = i + 1; j < mse.size(); ++j) {
      ++pairs;
      if (mse[j] < mse[i]) ++inversions;
    }
  CHECK(inversions * 2 > pairs);  // Spearman rho < 0
}

TEST_CASE("risk profile on a small sample") {
  const std::vector<double> taus{0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.95, 0.99};
  const auto rows = sim::risk_profile(0.0, 0.5, 6.0, taus, 50000, 3);
  REQUIRE(rows.size() == taus.size());
  for (const auto& r : rows) {
    CHECK(r.quantile <= r.superquantile + 1e-12);
    CHECK(r.superquantile <= r.evar + 1e-9);
    CHECK(r.evar <= 6.0);
  }
  // median of Lognormal(0, 0.5) is 1; truncation at 6 is negligible there
  CHECK(std::fabs(rows[3].quantile - 1.0) < 0.02);
}

TEST_CASE("failed replications are recorded, not silent") {
  sim::BenchmarkConfig config;
  config.spec = StatisticSpec::superquantile(0.75);
  config.n_grid = {8};  // below the n >= 2K cross-fitting floor
  config.reps = 2;
  config.eval_points = 10;
  config.K = 5;
  config.nuisance.n_trees = 5;
  config.estimators = {"cdte_forest"};
  config.seed = 1;
  const auto result = sim::run_benchmark(config);
  CHECK(result.failures.size() == 2);
  CHECK(result.rows.empty());
}

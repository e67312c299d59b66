#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cdte/crossfit.hpp"
#include "cdte/dataset.hpp"
#include "cdte/pseudo.hpp"

namespace cdte::sim {

// The benchmark data generating process:
//   X ~ Unif([0,1]^d),  A ~ Bernoulli(sigmoid(6 x0 - 3)),
//   Y | X, A ~ Lognormal(x0 + a*x1, sigma),
// optionally capped at the 99th quantile of its own conditional lognormal
// (required for the entropic risk, whose untruncated value diverges).
struct Dgp {
  int d = 10;
  double sigma = 0.2;
  bool truncate = false;
  double trunc_q = 0.99;

  double propensity(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double mu_log(const Eigen::Ref<const Eigen::VectorXd>& x, int a) const;
  double cap(const Eigen::Ref<const Eigen::VectorXd>& x, int a) const;

  Dataset sample(int n, Rng& rng) const;
  // One draw of (A, Y) at a fixed covariate value.
  Observation sample_at(const Eigen::Ref<const Eigen::VectorXd>& x, Rng& rng) const;
};

// Entropic risk of the standardized law min(e^{sigma Z}, e^{sigma z_q}) with
// an atom of mass 1-q at the cap: 1-D numeric integration (composite
// Simpson) of E[e^{T/beta}] plus a log-spaced grid solve with parabolic
// refinement. This is the ground-truth oracle route, independent of the
// golden-section path used by weighted_evar.
struct StandardizedEvar {
  double R = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
};
StandardizedEvar evar_truncated_standard_lognormal(double sigma, double trunc_q,
                                                   double delta);

// Every statistic's true CDTE under this DGP factorizes as
// multiplier * (e^{x0+x1} - e^{x0}); the multiplier is the closed-form (or
// numerically integrated, for the KL risk) per-arm constant.
class TruthModel {
 public:
  TruthModel(const Dgp& dgp, const StatisticSpec& spec);

  double multiplier() const { return multiplier_; }
  double cdte(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Arm-wise true statistic value (kappa_a) at x.
  double kappa(const Eigen::Ref<const Eigen::VectorXd>& x, int a) const;

  const Dgp& dgp() const { return dgp_; }
  const StatisticSpec& spec() const { return spec_; }

 private:
  Dgp dgp_;
  StatisticSpec spec_;
  double multiplier_ = 0.0;
  double arm_constant_ = 0.0;  // kappa_a = arm_constant * e^{mu_log(x,a)}
  StandardizedEvar std_evar_;  // KLRisk only
};

// Analytic nuisances for the DGP: the oracle against which unbiasedness and
// oracle-injection behavior are tested.
NuisanceSet true_nuisances(const Dgp& dgp, const StatisticSpec& spec);

double true_cdte(const Dgp& dgp, const StatisticSpec& spec,
                 const Eigen::Ref<const Eigen::VectorXd>& x);

// ---------------------------------------------------------------------------
// Monte-Carlo benchmark

struct BenchmarkConfig {
  StatisticSpec spec;
  Dgp dgp;
  std::vector<int> n_grid{200, 800, 3200};
  int reps = 20;
  int eval_points = 500;
  int K = 5;
  NuisanceConfig nuisance;
  std::vector<std::string> estimators{"cdte_ols", "cdte_forest", "plugin_raw",
                                      "plugin_ols", "plugin_forest"};
  std::uint64_t seed = 20240817;
};

struct MseRow {
  std::string estimator;
  int n = 0;
  int rep = 0;
  double mse = std::numeric_limits<double>::quiet_NaN();
  // Coverage of the x1 projection coefficient; -1 when not an OLS stage.
  int covered = -1;
};

struct EstimatorSummary {
  std::string estimator;
  int n = 0;
  double mean_mse = 0.0;
  double mse_se = 0.0;
  double coverage = std::numeric_limits<double>::quiet_NaN();
  int reps_ok = 0;
};

struct BenchmarkResult {
  std::vector<MseRow> rows;
  std::vector<EstimatorSummary> summary;
  std::vector<std::pair<int, std::string>> failures;  // (global rep id, error)
  Eigen::VectorXd oracle_coef;  // best linear projection of the true CDTE
  double oracle_x1 = std::numeric_limits<double>::quiet_NaN();

  const EstimatorSummary* find(const std::string& estimator, int n) const;
};

// Runs the full grid; replications run concurrently, each with a seed
// derived from (root seed, n index, rep). Individual rep failures are
// recorded and excluded, never silently dropped.
BenchmarkResult run_benchmark(const BenchmarkConfig& config);

// ---------------------------------------------------------------------------
// Risk-measure comparison profile

struct RiskProfileRow {
  double tau = 0.0;
  double quantile = 0.0;
  double superquantile = 0.0;
  double evar = 0.0;  // at delta = -log(1-tau)
};

// Computes the three statistics of a right-capped Lognormal(mu, sigma)
// (Y <= cap) on one large i.i.d. sample via the statistics module.
std::vector<RiskProfileRow> risk_profile(double mu, double sigma, double cap,
                                         const std::vector<double>& taus,
                                         int n_samples, std::uint64_t seed);

}  // namespace cdte::sim

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>

namespace cdte {

// Which moment-defined distributional statistic the treatment effect is
// built on. The quantile and superquantile take a level tau; the
// KL-entropic risk takes a divergence radius delta. Generic f-divergences
// beyond KL are a deliberate extension point that is not populated.
enum class StatKind { Mean, Quantile, SuperQuantile, KLRisk };

struct StatisticSpec {
  StatKind kind = StatKind::Mean;
  double tau = 0.0;    // in (0,1) for Quantile / SuperQuantile
  double delta = 0.0;  // >= 0 for KLRisk

  static StatisticSpec mean() { return {StatKind::Mean, 0.0, 0.0}; }
  static StatisticSpec quantile(double tau);
  static StatisticSpec superquantile(double tau);
  static StatisticSpec kl_risk(double delta);

  // Length m of the auxiliary nuisance block: 0 for Mean/Quantile,
  // 1 for SuperQuantile (the quantile q), 2 for KLRisk (beta, lambda).
  int aux_dim() const;

  std::string name() const;
  void validate() const;
};

// Value of nu_a(x) = (kappa, h) at one point. h holds the statistic's
// auxiliary components: empty, (q), or (beta, lambda).
struct NuisanceValues {
  double kappa = 0.0;
  Eigen::VectorXd h;
};

// First row of the inverse moment Jacobian, length m+1.
struct AlphaVector {
  Eigen::VectorXd alpha;
};

// The moment function rho(y, nu) of length m+1:
//   Mean          [y - kappa]
//   Quantile      [tau - I(y <= q)]
//   SuperQuantile [(1-tau)^{-1} y I(y >= q) - mu,  tau - I(y <= q)]
//   KLRisk        [m(y,b,l;delta) - R,  dm/dbeta,  dm/dlambda]
// with m the KL dual objective below. Indicators treat equality as
// inclusive on both sides.
Eigen::VectorXd rho(const StatisticSpec& spec, double y, const NuisanceValues& nu);

// KL dual objective m(y,beta,lambda;delta) = delta*beta + lambda
//   + beta * exp((y-lambda)/beta - 1).
// The exponent is clamped to +-700 (IEEE double range); clamped evaluations
// bump diagnostics::counters().exponent_clamps.
double dual_objective_kl(double y, double beta, double lambda, double delta);

// Left-continuous inverse of the weighted empirical CDF:
// smallest v with sum_{values<=v} w >= tau * sum(w).
double weighted_quantile(std::span<const double> values,
                         std::span<const double> weights, double tau);

struct SuperQuantileResult {
  double mu = 0.0;  // tail expectation; always >= q
  double q = 0.0;   // the tau-quantile
};

// q = weighted quantile; mu = q + (1-tau)^{-1} * sum_i w_i max(v_i - q, 0)
// with normalized weights (value of the CVaR dual at beta = q, which attains
// the infimum for atomic distributions under the inf-CDF quantile).
SuperQuantileResult weighted_superquantile(std::span<const double> values,
                                           std::span<const double> weights,
                                           double tau);

struct EvarResult {
  double R = 0.0;
  double beta = 0.0;  // > 0
  double lambda = 0.0;
  bool at_boundary = false;
};

// Entropic value-at-risk of the weighted empirical distribution:
//   R = inf_{beta>0} beta * (log sum_i w_i e^{v_i/beta} + delta),
// solved by golden-section in log beta over
// [range/1e3, range*1e3], range = max-min over positive-weight values
// (floored at 1e-9). The log-sum-exp is max-shift stabilized. Exact
// special cases: delta = 0 returns the weighted mean (a KL ball of radius
// 0 contains only the distribution itself) and a point mass returns its
// location. lambda = R - beta*(delta+1). R is clamped at max(values), the
// risk measure's hard upper bound, which the bracketed solver can
// overshoot by O(lo) when the optimum sits at beta -> 0.
EvarResult weighted_evar(std::span<const double> values,
                         std::span<const double> weights, double delta);

// alpha_a = first row of the inverse moment Jacobian:
//   Mean          [-1]
//   Quantile      [-1/f]   (f = conditional density at the quantile, > 0)
//   SuperQuantile [-1, (1-tau)^{-1} q]
//   KLRisk        [-1, 0, 0]
AlphaVector alpha_vector(const StatisticSpec& spec, const NuisanceValues& nu,
                         std::optional<double> density_at_q = std::nullopt);

}  // namespace cdte

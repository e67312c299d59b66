#include "cdte/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cdte/diagnostics.hpp"
#include "cdte/errors.hpp"
#include "cdte/scalar_minimize.hpp"

namespace cdte {

StatisticSpec StatisticSpec::quantile(double tau) {
  StatisticSpec s{StatKind::Quantile, tau, 0.0};
  s.validate();
  return s;
}

StatisticSpec StatisticSpec::superquantile(double tau) {
  StatisticSpec s{StatKind::SuperQuantile, tau, 0.0};
  s.validate();
  return s;
}

StatisticSpec StatisticSpec::kl_risk(double delta) {
  StatisticSpec s{StatKind::KLRisk, 0.0, delta};
  s.validate();
  return s;
}

int StatisticSpec::aux_dim() const {
  switch (kind) {
    case StatKind::Mean:
    case StatKind::Quantile:
      return 0;
    case StatKind::SuperQuantile:
      return 1;
    case StatKind::KLRisk:
      return 2;
  }
  return 0;
}

std::string StatisticSpec::name() const {
  switch (kind) {
    case StatKind::Mean:
      return "mean";
    case StatKind::Quantile:
      return "quantile";
    case StatKind::SuperQuantile:
      return "superquantile";
    case StatKind::KLRisk:
      return "klrisk";
  }
  return "?";
}

void StatisticSpec::validate() const {
  if (kind == StatKind::Quantile || kind == StatKind::SuperQuantile) {
    if (!(tau > 0.0 && tau < 1.0))
      throw ConfigError("statistic: tau must be in (0,1), got " + std::to_string(tau));
  }
  if (kind == StatKind::KLRisk && !(delta >= 0.0))
    throw ConfigError("statistic: delta must be >= 0, got " + std::to_string(delta));
}

namespace {

void check_nu(const StatisticSpec& spec, const NuisanceValues& nu) {
  if (nu.h.size() != spec.aux_dim())
    throw ValidationError("nuisance values: auxiliary block has length " +
                          std::to_string(nu.h.size()) + ", statistic needs " +
                          std::to_string(spec.aux_dim()));
}

// Exponent of the KL dual, clamped to the IEEE double range.
double clamped_exp_arg(double y, double beta, double lambda) {
  double t = (y - lambda) / beta - 1.0;
  if (t > 700.0 || t < -700.0) {
    diagnostics::counters().exponent_clamps.fetch_add(1, std::memory_order_relaxed);
    t = std::clamp(t, -700.0, 700.0);
  }
  return t;
}

std::vector<int> argsort(std::span<const double> v) {
  std::vector<int> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return v[i] < v[j]; });
  return order;
}

double checked_weight_sum(std::span<const double> values,
                          std::span<const double> weights) {
  if (values.size() != weights.size() || values.empty())
    throw DomainError("weighted statistic: values and weights must be non-empty "
                      "and of equal length");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0))
      throw DomainError("weighted statistic: negative or NaN weight");
    if (!std::isfinite(values[i]))
      throw DomainError("weighted statistic: non-finite value");
    total += weights[i];
  }
  if (!(total > 0.0))
    throw DomainError("weighted statistic: weights must sum to a positive value");
  return total;
}

}  // namespace

double dual_objective_kl(double y, double beta, double lambda, double delta) {
  if (!(beta > 0.0))
    throw DomainError("dual_objective_kl: beta must be > 0, got " +
                      std::to_string(beta));
  const double t = clamped_exp_arg(y, beta, lambda);
  return delta * beta + lambda + beta * std::exp(t);
}

Eigen::VectorXd rho(const StatisticSpec& spec, double y, const NuisanceValues& nu) {
  check_nu(spec, nu);
  switch (spec.kind) {
    case StatKind::Mean: {
      Eigen::VectorXd r(1);
      r(0) = y - nu.kappa;
      return r;
    }
    case StatKind::Quantile: {
      Eigen::VectorXd r(1);
      r(0) = spec.tau - (y <= nu.kappa ? 1.0 : 0.0);
      return r;
    }
    case StatKind::SuperQuantile: {
      const double mu = nu.kappa;
      const double q = nu.h(0);
      Eigen::VectorXd r(2);
      r(0) = (y >= q ? y / (1.0 - spec.tau) : 0.0) - mu;
      r(1) = spec.tau - (y <= q ? 1.0 : 0.0);
      return r;
    }
    case StatKind::KLRisk: {
      const double R = nu.kappa;
      const double beta = nu.h(0);
      const double lambda = nu.h(1);
      if (!(beta > 0.0))
        throw DomainError("rho: KLRisk requires beta > 0, got " + std::to_string(beta));
      const double t = clamped_exp_arg(y, beta, lambda);
      const double e = std::exp(t);
      Eigen::VectorXd r(3);
      r(0) = spec.delta * beta + lambda + beta * e - R;
      r(1) = spec.delta + e * (1.0 - (y - lambda) / beta);
      r(2) = 1.0 - e;
      return r;
    }
  }
  throw DomainError("rho: unknown statistic");
}

double weighted_quantile(std::span<const double> values,
                         std::span<const double> weights, double tau) {
  const double total = checked_weight_sum(values, weights);
  if (!(tau > 0.0 && tau <= 1.0))
    throw DomainError("weighted_quantile: tau must be in (0,1], got " +
                      std::to_string(tau));
  const auto order = argsort(values);
  // The relative slack absorbs accumulation error in the cumulative weights
  // (thirty sums of 1/60 fall short of 0.5 in doubles).
  const double threshold = tau * total - 1e-9 * total;
  double cum = 0.0;
  int last_positive = order.back();
  for (int idx : order) {
    cum += weights[idx];
    if (cum >= threshold) return values[idx];
    if (weights[idx] > 0.0) last_positive = idx;
  }
  // Only reachable through floating-point shortfall at tau near 1.
  return values[last_positive];
}

SuperQuantileResult weighted_superquantile(std::span<const double> values,
                                           std::span<const double> weights,
                                           double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw DomainError("weighted_superquantile: tau must be in (0,1)");
  const double total = checked_weight_sum(values, weights);
  const double q = weighted_quantile(values, weights, tau);
  double excess = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > q) excess += weights[i] * (values[i] - q);
  return SuperQuantileResult{q + excess / (total * (1.0 - tau)), q};
}

namespace {

// log sum_i w_i e^{(v_i - shift)/beta} over positive-weight entries, with the
// sum accumulated in fixed-size chunks so the result does not depend on the
// number of OpenMP threads.
double shifted_lse(const std::vector<double>& v, const std::vector<double>& w,
                   double shift, double beta) {
  const std::size_t n = v.size();
  constexpr std::size_t kChunk = 8192;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(n_chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    double s = 0.0;
    for (std::size_t i = c * kChunk; i < end; ++i)
      s += w[i] * std::exp((v[i] - shift) / beta);
    partial[c] = s;
  }
  double sum = 0.0;
  for (double p : partial) sum += p;
  return std::log(sum);
}

}  // namespace

EvarResult weighted_evar(std::span<const double> values,
                         std::span<const double> weights, double delta) {
  if (!(delta >= 0.0))
    throw DomainError("weighted_evar: delta must be >= 0, got " +
                      std::to_string(delta));
  const double total = checked_weight_sum(values, weights);

  std::vector<double> v, w;
  v.reserve(values.size());
  w.reserve(values.size());
  double vmin = 0.0, vmax = 0.0, mean = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    const double wi = weights[i] / total;
    v.push_back(values[i]);
    w.push_back(wi);
    mean += wi * values[i];
    vmin = first ? values[i] : std::min(vmin, values[i]);
    vmax = first ? values[i] : std::max(vmax, values[i]);
    first = false;
  }

  const double range = std::max(vmax - vmin, 1e-9);
  const double lo = range * 1e-3;
  const double hi = range * 1e3;

  // A KL ball of radius 0 contains only the distribution itself.
  if (delta == 0.0)
    return EvarResult{mean, hi, mean - hi, true};
  // Degenerate distribution: every divergence ball contains only itself.
  if (vmax - vmin <= 0.0)
    return EvarResult{vmax, lo, vmax - lo * (delta + 1.0), true};

  ScalarConvexProblem prob;
  prob.objective = [&](double beta) {
    return vmax + beta * (delta + shifted_lse(v, w, vmax, beta));
  };
  prob.lo = lo;
  prob.hi = hi;
  prob.tol = 1e-10;
  prob.max_iter = 200;
  const ScalarMinimum m = minimize_scalar(prob);
  if (!m.converged)
    throw NumericalError("weighted_evar: no convergence within iteration cap, "
                         "last beta=" + std::to_string(m.argmin));
  const double R = std::min(m.min_value, vmax);
  return EvarResult{R, m.argmin, R - m.argmin * (delta + 1.0), m.at_boundary};
}

AlphaVector alpha_vector(const StatisticSpec& spec, const NuisanceValues& nu,
                         std::optional<double> density_at_q) {
  check_nu(spec, nu);
  switch (spec.kind) {
    case StatKind::Mean: {
      Eigen::VectorXd a(1);
      a(0) = -1.0;
      return AlphaVector{a};
    }
    case StatKind::Quantile: {
      if (!density_at_q || !(*density_at_q > 0.0))
        throw DomainError("alpha_vector: quantile statistic needs a positive "
                          "density at the quantile");
      Eigen::VectorXd a(1);
      a(0) = -1.0 / *density_at_q;
      return AlphaVector{a};
    }
    case StatKind::SuperQuantile: {
      Eigen::VectorXd a(2);
      a(0) = -1.0;
      a(1) = nu.h(0) / (1.0 - spec.tau);
      return AlphaVector{a};
    }
    case StatKind::KLRisk: {
      Eigen::VectorXd a(3);
      a << -1.0, 0.0, 0.0;
      return AlphaVector{a};
    }
  }
  throw DomainError("alpha_vector: unknown statistic");
}

}  // namespace cdte

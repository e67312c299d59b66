#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "cdte/dataset.hpp"
#include "cdte/learners.hpp"
#include "cdte/statistics.hpp"

namespace cdte {

// Everything needed to evaluate the debiased pseudo-outcome at a point:
// the propensity e, per-arm nu_a = (kappa_a, h_a), and per-arm alpha_a.
// The alpha evaluator receives the already-computed nu_a(x) so statistics
// whose alpha derives from nu (superquantile, KL risk) need no second model
// evaluation; the quantile statistic closes over its density estimate.
struct NuisanceSet {
  std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> propensity;
  std::array<std::function<NuisanceValues(const Eigen::Ref<const Eigen::VectorXd>&)>, 2>
      nu;
  std::array<std::function<AlphaVector(const Eigen::Ref<const Eigen::VectorXd>&,
                                       const NuisanceValues&)>,
             2>
      alpha;
};

// The generic debiased pseudo-outcome
//   psi = kappa_1(x) - kappa_0(x)
//         - (a - e(x)) / (e(x)(1-e(x))) * alpha_a(x)' rho(y, nu_a(x)),
// the single source of truth for all statistics. The specialized closed
// forms below exist as cross-checks and for speed.
double pseudo_outcome(const Observation& z, const NuisanceSet& nuis,
                      const StatisticSpec& spec);

// Closed form for the quantile effect:
//   (q1 - q0) + (a-e)/(e(1-e)) * (1/f_a) * (tau - I[y <= q_a]).
double pseudo_cqte(double y, int a, double e, double q0, double q1, double f0,
                   double f1, double tau);

// Closed form for the superquantile effect:
//   (mu1 - mu0) + (a-e)/(e(1-e)) *
//     (q_a + (1-tau)^{-1} (y - q_a) I[y >= q_a] - mu_a).
double pseudo_csqte(double y, int a, double e, double mu0, double mu1, double q0,
                    double q1, double tau);

// Closed form for the KL entropic-risk effect:
//   (R1 - R0) + (a-e)/(e(1-e)) * (m(y, beta_a, lambda_a; delta) - R_a).
double pseudo_cklrte(double y, int a, double e, double R0, double R1, double beta0,
                     double beta1, double lambda0, double lambda1, double delta);

// Cross-fitted pseudo-outcomes aligned with dataset rows; fold_of records
// which fold's (held-out) nuisances produced each value.
struct PseudoOutcomes {
  Eigen::VectorXd values;
  std::vector<int> fold_of;
};

}  // namespace cdte

#include "cdte/pseudo.hpp"

#include <cmath>
#include <string>

#include "cdte/errors.hpp"

namespace cdte {

double pseudo_outcome(const Observation& z, const NuisanceSet& nuis,
                      const StatisticSpec& spec) {
  const double e = nuis.propensity(z.x);
  const NuisanceValues nu1 = nuis.nu[1](z.x);
  const NuisanceValues nu0 = nuis.nu[0](z.x);
  const NuisanceValues& nu_a = (z.a == 1) ? nu1 : nu0;
  if (!std::isfinite(nu1.kappa) || !std::isfinite(nu0.kappa) ||
      !nu_a.h.allFinite())
    throw NumericalError("pseudo_outcome: non-finite nuisance value nu_" +
                         std::to_string(z.a) + " at evaluation point");
  const AlphaVector alpha = nuis.alpha[z.a](z.x, nu_a);
  if (!alpha.alpha.allFinite())
    throw NumericalError("pseudo_outcome: non-finite nuisance value alpha_" +
                         std::to_string(z.a) + " at evaluation point");
  const Eigen::VectorXd r = rho(spec, z.y, nu_a);
  const double correction = (z.a - e) / (e * (1.0 - e)) * alpha.alpha.dot(r);
  return nu1.kappa - nu0.kappa - correction;
}

double pseudo_cqte(double y, int a, double e, double q0, double q1, double f0,
                   double f1, double tau) {
  const double f = (a == 1) ? f1 : f0;
  if (!(f > 0.0))
    throw DomainError("pseudo_cqte: density at the quantile must be > 0, got " +
                      std::to_string(f));
  const double q = (a == 1) ? q1 : q0;
  const double indicator = (y <= q) ? 1.0 : 0.0;
  return (q1 - q0) + (a - e) / (e * (1.0 - e)) * (tau - indicator) / f;
}

double pseudo_csqte(double y, int a, double e, double mu0, double mu1, double q0,
                    double q1, double tau) {
  const double q = (a == 1) ? q1 : q0;
  const double mu = (a == 1) ? mu1 : mu0;
  const double tail = (y >= q) ? (y - q) / (1.0 - tau) : 0.0;
  return (mu1 - mu0) + (a - e) / (e * (1.0 - e)) * (q + tail - mu);
}

double pseudo_cklrte(double y, int a, double e, double R0, double R1, double beta0,
                     double beta1, double lambda0, double lambda1, double delta) {
  const double beta = (a == 1) ? beta1 : beta0;
  const double lambda = (a == 1) ? lambda1 : lambda0;
  const double R = (a == 1) ? R1 : R0;
  const double m = dual_objective_kl(y, beta, lambda, delta);
  return (R1 - R0) + (a - e) / (e * (1.0 - e)) * (m - R);
}

}  // namespace cdte

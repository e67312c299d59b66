#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"

namespace cdte {

// phi(x): intercept first, then the selected covariate coordinates
// (all of them when coords is empty).
struct FeatureMap {
  std::vector<int> coords;

  int p(int d) const { return 1 + (coords.empty() ? d : static_cast<int>(coords.size())); }
  Eigen::VectorXd phi(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd phi_all(const Eigen::MatrixXd& X) const;
};

struct ProjectionResult {
  Eigen::VectorXd gamma;     // OLS coefficients
  Eigen::MatrixXd cov;       // HC1 sandwich, variance of gamma directly
  Eigen::VectorXd se;        // sqrt(diag(cov))
  Eigen::VectorXd ci_lower;  // normal critical values
  Eigen::VectorXd ci_upper;
  double level = 0.95;
  int n_used = 0;

  nlohmann::json to_json() const;
};

// OLS of psi on the feature matrix with heteroskedasticity-robust (HC1)
// covariance:
//   cov = (F'F)^{-1} (sum_i eps_i^2 f_i f_i') (F'F)^{-1} * n/(n-p).
// cov is reported as the variance of gamma itself (the asymptotic Sigma*/n
// scaling is absorbed), so CI half-widths are z * sqrt(diag(cov)).
ProjectionResult ols_project(const Eigen::VectorXd& psi,
                             const Eigen::MatrixXd& features, double level = 0.95);

// Population best-linear-projection coefficients of a target function on
// phi(X) with X ~ Unif([0,1]^dim): large-sample OLS over n_draws draws.
// This is the independent oracle coverage is judged against.
Eigen::VectorXd true_projection_coef(
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& target,
    const FeatureMap& phi, int dim, std::uint64_t seed, int n_draws = 1000000);

}  // namespace cdte

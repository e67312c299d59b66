#include "cdte/inference.hpp"

#include <cmath>

#include "cdte/errors.hpp"
#include "cdte/rng.hpp"

namespace cdte {

Eigen::VectorXd FeatureMap::phi(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd out(p(d));
  out(0) = 1.0;
  if (coords.empty()) {
    out.tail(d) = x;
  } else {
    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (coords[j] < 0 || coords[j] >= d)
        throw ConfigError("feature map: coordinate " + std::to_string(coords[j]) +
                          " out of range for dimension " + std::to_string(d));
      out(1 + j) = x(coords[j]);
    }
  }
  return out;
}

Eigen::MatrixXd FeatureMap::phi_all(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), p(static_cast<int>(X.cols())));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out.row(i) = phi(X.row(i).transpose()).transpose();
  return out;
}

nlohmann::json ProjectionResult::to_json() const {
  nlohmann::json j;
  j["coef"] = std::vector<double>(gamma.data(), gamma.data() + gamma.size());
  j["stderr"] = std::vector<double>(se.data(), se.data() + se.size());
  j["ci_lower"] = std::vector<double>(ci_lower.data(), ci_lower.data() + ci_lower.size());
  j["ci_upper"] = std::vector<double>(ci_upper.data(), ci_upper.data() + ci_upper.size());
  j["level"] = level;
  j["n"] = n_used;
  j["cov_normalization"] = "variance of the coefficient estimates (Sigma*/n absorbed)";
  return j;
}

ProjectionResult ols_project(const Eigen::VectorXd& psi,
                             const Eigen::MatrixXd& features, double level) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (psi.size() != n) throw ConfigError("ols_project: psi length mismatch");
  if (n <= p) throw ConfigError("ols_project: need n > p");
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("ols_project: level must be in (0,1)");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(features);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    const auto perm = qr.colsPermutation().indices();
    throw SingularDesignError("ols_project: rank-deficient features; offending column " +
                              std::to_string(perm(qr.rank())));
  }
  ProjectionResult out;
  out.gamma = qr.solve(psi);
  const Eigen::VectorXd resid = psi - features * out.gamma;

  const Eigen::MatrixXd gram_inv =
      (features.transpose() * features).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i)
    meat.noalias() += resid(i) * resid(i) * features.row(i).transpose() * features.row(i);
  out.cov = gram_inv * meat * gram_inv * (static_cast<double>(n) / (n - p));
  out.cov = 0.5 * (out.cov + out.cov.transpose());  // symmetrize roundoff

  out.se = out.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  const double z = normal_quantile(0.5 + level / 2.0);
  out.ci_lower = out.gamma - z * out.se;
  out.ci_upper = out.gamma + z * out.se;
  out.level = level;
  out.n_used = static_cast<int>(n);
  return out;
}

Eigen::VectorXd true_projection_coef(
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& target,
    const FeatureMap& phi, int dim, std::uint64_t seed, int n_draws) {
  Rng rng(seed);
  const int p = phi.p(dim);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < n_draws; ++i) {
    for (int j = 0; j < dim; ++j) x(j) = rng.uniform01();
    const Eigen::VectorXd f = phi.phi(x);
    gram.noalias() += f * f.transpose();
    cross.noalias() += target(x) * f;
  }
  return gram.ldlt().solve(cross);
}

}  // namespace cdte

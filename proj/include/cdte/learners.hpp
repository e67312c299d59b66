#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "cdte/dataset.hpp"
#include "cdte/statistics.hpp"

namespace cdte {

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
  virtual int dim() const = 0;
  virtual int train_size() const = 0;
};

// Probabilistic classifier; predictions are clipped to
// [kPropensityClip, 1 - kPropensityClip] to enforce overlap numerically.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
};

inline constexpr double kPropensityClip = 0.01;

double clip_probability(double p);  // bumps the diagnostics counter when it binds

// Batch prediction, parallel over rows.
Eigen::VectorXd predict_all(const Regressor& model, const Eigen::MatrixXd& X);

// ---------------------------------------------------------------------------
// Linear models

class OlsRegressor : public Regressor {
 public:
  OlsRegressor(Eigen::VectorXd coef, int n_train, int d)
      : coef_(std::move(coef)), n_train_(n_train), d_(d) {}
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  int dim() const override { return d_; }
  int train_size() const override { return n_train_; }
  // coef_(0) is the intercept.
  const Eigen::VectorXd& coef() const { return coef_; }

 private:
  Eigen::VectorXd coef_;
  int n_train_;
  int d_;
};

// Least squares with an intercept column, solved by a rank-revealing QR.
// Throws SingularDesignError naming the offending column on rank deficiency.
OlsRegressor fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

class LogisticClassifier : public Classifier {
 public:
  LogisticClassifier(Eigen::VectorXd coef, bool separation)
      : coef_(std::move(coef)), separation_(separation) {}
  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  const Eigen::VectorXd& coef() const { return coef_; }
  bool separation_detected() const { return separation_; }

 private:
  Eigen::VectorXd coef_;
  bool separation_;
};

// IRLS on the log-likelihood; stops on relative change < tol or max_iter.
// Complete separation (|coef| beyond 1e3) is flagged, not fatal: the fit is
// returned and the clipping bounds the predictions.
LogisticClassifier fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& a,
                                int max_iter = 100, double tol = 1e-8);

class KnownPropensity : public Classifier {
 public:
  explicit KnownPropensity(double p);
  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>&) const override;

 private:
  double p_;
};

// ---------------------------------------------------------------------------
// Forests

struct ForestParams {
  int n_trees = 100;
  int min_leaf = 1;
  int mtry = 0;  // 0 = ceil(d/3) for regression, set explicitly otherwise
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// Nonnegative weights over training rows summing to 1.
struct LocalityWeights {
  Eigen::VectorXd w;
};

// Bagged CART regression trees with a variance-reduction split criterion.
// Leaves store the in-bag training indices (with bootstrap multiplicity), so
// the forest doubles as a locality-weight generator (Meinshausen-style QRF).
// Deterministic given the seed: each tree draws from its own derived stream
// and trees build independently (parallel across trees).
class Forest : public Regressor {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;  // leaf item range
    int end = 0;
    double leaf_mean = 0.0;
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<int> items;  // training indices, bootstrap duplicates kept
  };

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  int dim() const override { return d_; }
  int train_size() const override { return n_; }

  const std::vector<Tree>& trees() const { return trees_; }
  const Eigen::VectorXd& train_y() const { return y_; }
  const ForestParams& params() const { return params_; }

  // Leaf node id for x in one tree.
  int leaf_of(const Tree& tree, const Eigen::Ref<const Eigen::VectorXd>& x) const;

  friend Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const ForestParams& params);

 private:
  std::vector<Tree> trees_;
  Eigen::VectorXd y_;
  ForestParams params_;
  int n_ = 0;
  int d_ = 0;
};

Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ForestParams& params);

// w_i = average over trees of multiplicity_i / |leaf(x)|, renormalized.
LocalityWeights forest_weights(const Forest& forest,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

// Product Gaussian kernel with per-dimension Silverman bandwidths
// h_j = (4/(d+2))^{1/(d+4)} n^{-1/(d+4)} sigma_j. Zero-variance dimensions
// are skipped (counted in diagnostics). Computed in log space.
LocalityWeights kernel_weights(const Eigen::MatrixXd& X_train,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::VectorXd silverman_bandwidths(const Eigen::MatrixXd& X_train);

// Forest classifier: regression trees on 0/1 labels, leaf-fraction
// probabilities, mtry defaulting to ceil(sqrt(d)).
class ForestClassifier : public Classifier {
 public:
  ForestClassifier(std::shared_ptr<const Forest> forest) : forest_(std::move(forest)) {}
  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const override;

 private:
  std::shared_ptr<const Forest> forest_;
};

ForestClassifier fit_forest_classifier(const Eigen::MatrixXd& X,
                                       const std::vector<int>& a, ForestParams params);

// ---------------------------------------------------------------------------
// Conditional distributional estimators

double qrf_quantile(const Forest& forest, const Eigen::Ref<const Eigen::VectorXd>& x,
                    std::span<const double> values, double tau);
double qrf_quantile(const Forest& forest, const Eigen::Ref<const Eigen::VectorXd>& x,
                    double tau);

double sqrf_superquantile(const Forest& forest,
                          const Eigen::Ref<const Eigen::VectorXd>& x,
                          std::span<const double> values, double tau);
double sqrf_superquantile(const Forest& forest,
                          const Eigen::Ref<const Eigen::VectorXd>& x, double tau);

class QuantileModel {
 public:
  virtual ~QuantileModel() = default;
  virtual double quantile(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
};

class LinearQuantileModel : public QuantileModel {
 public:
  explicit LinearQuantileModel(Eigen::VectorXd coef) : coef_(std::move(coef)) {}
  double quantile(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  // coef_(0) is the intercept.
  const Eigen::VectorXd& coef() const { return coef_; }

 private:
  Eigen::VectorXd coef_;
};

// Check-loss minimization via iteratively reweighted least squares.
std::shared_ptr<LinearQuantileModel> fit_linear_quantile(const Eigen::MatrixXd& X,
                                                         const Eigen::VectorXd& y,
                                                         double tau, int iters = 60);

using QuantileLearner = std::function<std::shared_ptr<QuantileModel>(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
    std::uint64_t seed)>;

using RegressionLearner = std::function<std::shared_ptr<Regressor>(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed)>;

// Ready-made quantile learners (QRF / linear check-loss / kernel weights).
QuantileLearner qrf_quantile_learner(int n_trees = 100, bool bootstrap = true);
QuantileLearner linear_quantile_learner();
QuantileLearner kernel_quantile_learner();

// The deterministic half split shared by the two-stage procedures: even/odd
// by within-arm position, or a seeded shuffle first. First half fits the
// quantile, second half carries the pseudo-targets.
std::pair<std::vector<int>, std::vector<int>> arm_half_split(
    const Dataset& train, int arm, std::uint64_t seed, bool shuffle);

struct TwoStageFit {
  std::shared_ptr<Regressor> mu;      // conditional superquantile estimate
  std::shared_ptr<QuantileModel> q;   // the first-half quantile fit
  std::vector<int> half_fit_rows;     // arm-subset rows used to fit q
  std::vector<int> half_target_rows;  // arm-subset rows carrying the targets
};

// Split the arm's training rows into deterministic halves (even/odd by
// within-arm position, or seeded shuffle first), fit the quantile on one,
// form omega_i = (1-tau)^{-1} Y_i I[Y_i >= qhat(X_i)] on the other, and
// regress omega on X. Throws DegenerateSplitError below 4 arm rows.
TwoStageFit two_stage_superquantile(const Dataset& train, int arm, double tau,
                                    const QuantileLearner& quantile_learner,
                                    const RegressionLearner& final_regressor,
                                    std::uint64_t seed, bool shuffle = false);

// Density-at-quantile nuisance: omega_i = K((Y_i - qhat(X_i))/b)/b with the
// standard normal kernel on the target half, regressed on X. qhat must be
// independent of that half (fit it on the other half). Predictions are
// floored at 1e-3 so 1/f stays bounded.
std::shared_ptr<Regressor> density_at_quantile(const Dataset& train, int arm,
                                               const QuantileModel& qhat,
                                               double bandwidth,
                                               const RegressionLearner& final_regressor,
                                               std::uint64_t seed,
                                               bool shuffle = false);

inline constexpr double kDensityFloor = 1e-3;

// Locally weighted entropic risk at x over the arm's outcomes.
EvarResult kernel_evar(const Dataset& train, int arm, double delta,
                       const Eigen::Ref<const Eigen::VectorXd>& x);
EvarResult forest_evar(const Forest& arm_forest, double delta,
                       const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace cdte

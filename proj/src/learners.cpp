#include "cdte/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdte/diagnostics.hpp"
#include "cdte/errors.hpp"
#include "cdte/rng.hpp"

namespace cdte {

double clip_probability(double p) {
  if (p < kPropensityClip) {
    diagnostics::counters().propensity_clips.fetch_add(1, std::memory_order_relaxed);
    return kPropensityClip;
  }
  if (p > 1.0 - kPropensityClip) {
    diagnostics::counters().propensity_clips.fetch_add(1, std::memory_order_relaxed);
    return 1.0 - kPropensityClip;
  }
  return p;
}

Eigen::VectorXd predict_all(const Regressor& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out(X.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out(i) = model.predict(X.row(i).transpose());
  return out;
}

// ---------------------------------------------------------------------------
// OLS

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Phi(X.rows(), X.cols() + 1);
  Phi.col(0).setOnes();
  Phi.rightCols(X.cols()) = X;
  return Phi;
}

}  // namespace

double OlsRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coef_(0) + coef_.tail(coef_.size() - 1).dot(x);
}

OlsRegressor fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols() + 1;
  if (n <= p - 1 || y.size() != n)
    throw ConfigError("fit_ols: need n > p and matching y length");
  const Eigen::MatrixXd Phi = with_intercept(X);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    // The permutation moves dependent columns past the rank boundary.
    const auto perm = qr.colsPermutation().indices();
    const int bad = perm(qr.rank());
    throw SingularDesignError(
        "fit_ols: design is rank deficient; offending column " +
        (bad == 0 ? std::string("intercept") : "x" + std::to_string(bad - 1)));
  }
  return OlsRegressor(qr.solve(y), static_cast<int>(n), static_cast<int>(X.cols()));
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {
inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
}  // namespace

double LogisticClassifier::predict_proba(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return clip_probability(sigmoid(coef_(0) + coef_.tail(coef_.size() - 1).dot(x)));
}

LogisticClassifier fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& a,
                                int max_iter, double tol) {
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(a.size()) != n)
    throw ConfigError("fit_logistic: label length mismatch");
  const auto ones = std::count(a.begin(), a.end(), 1);
  if (ones == 0 || ones == n)
    throw ValidationError("fit_logistic: both classes must be present");

  const Eigen::MatrixXd Phi = with_intercept(X);
  const Eigen::Index p = Phi.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd av(n);
  for (Eigen::Index i = 0; i < n; ++i) av(i) = a[i];

  double ll_prev = -std::numeric_limits<double>::infinity();
  bool separation = false;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = Phi * beta;
    Eigen::VectorXd prob(n), w(n);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = sigmoid(eta(i));
      prob(i) = pi;
      w(i) = std::max(pi * (1.0 - pi), 1e-10);
      const double ps = std::clamp(pi, 1e-12, 1.0 - 1e-12);
      ll += av(i) * std::log(ps) + (1.0 - av(i)) * std::log(1.0 - ps);
    }
    if (std::fabs(ll - ll_prev) < tol * (std::fabs(ll_prev) + 1e-10)) break;
    ll_prev = ll;

    Eigen::MatrixXd H = Phi.transpose() * w.asDiagonal() * Phi;
    H.diagonal().array() += 1e-12 * (1.0 + H.trace());
    beta += H.ldlt().solve(Phi.transpose() * (av - prob));

    if (beta.cwiseAbs().maxCoeff() > 1e3) {
      separation = true;
      diagnostics::counters().separation_warnings.fetch_add(1,
                                                            std::memory_order_relaxed);
      break;
    }
  }
  return LogisticClassifier(std::move(beta), separation);
}

KnownPropensity::KnownPropensity(double p) : p_(p) {
  if (!(p > 0.0 && p < 1.0))
    throw ConfigError("known propensity must lie in (0,1), got " + std::to_string(p));
}

double KnownPropensity::predict_proba(const Eigen::Ref<const Eigen::VectorXd>&) const {
  return clip_probability(p_);
}

// ---------------------------------------------------------------------------
// Linear quantile regression (IRLS on the check loss)

double LinearQuantileModel::quantile(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coef_(0) + coef_.tail(coef_.size() - 1).dot(x);
}

std::shared_ptr<LinearQuantileModel> fit_linear_quantile(const Eigen::MatrixXd& X,
                                                         const Eigen::VectorXd& y,
                                                         double tau, int iters) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("fit_linear_quantile: tau must be in (0,1)");
  const Eigen::MatrixXd Phi = with_intercept(X);
  const Eigen::Index n = Phi.rows();
  Eigen::VectorXd beta =
      (Phi.transpose() * Phi +
       1e-8 * Eigen::MatrixXd::Identity(Phi.cols(), Phi.cols()))
          .ldlt()
          .solve(Phi.transpose() * y);
  const double scale = std::max(1e-12, (y.array() - y.mean()).abs().mean());
  const double eps = 1e-6 * scale;
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd r = y - Phi * beta;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
      w(i) = (r(i) > 0.0 ? tau : 1.0 - tau) / std::max(std::fabs(r(i)), eps);
    Eigen::MatrixXd H = Phi.transpose() * w.asDiagonal() * Phi;
    H.diagonal().array() += 1e-10 * (1.0 + H.trace());
    beta = H.ldlt().solve(Phi.transpose() * (w.asDiagonal() * y));
  }
  return std::make_shared<LinearQuantileModel>(std::move(beta));
}

// ---------------------------------------------------------------------------
// Forest

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const ForestParams& params;
  Rng rng;
  Forest::Tree& tree;
  std::vector<std::pair<double, int>> scratch;  // (feature value, item slot)
  std::vector<int> feat_order;
  std::vector<int> swap_buf;

  void build() {
    const int n = static_cast<int>(tree.items.size());
    tree.nodes.reserve(2 * std::max(1, n / std::max(1, params.min_leaf)));
    tree.nodes.emplace_back();
    split_node(0, 0, n);
  }

  void make_leaf(int node_id, int begin, int end) {
    auto& nd = tree.nodes[node_id];
    nd.feature = -1;
    nd.begin = begin;
    nd.end = end;
    double s = 0.0;
    for (int i = begin; i < end; ++i) s += y(tree.items[i]);
    nd.leaf_mean = s / (end - begin);
  }

  void split_node(int node_id, int begin, int end) {
    const int size = end - begin;
    if (size < 2 * params.min_leaf) {
      make_leaf(node_id, begin, end);
      return;
    }
    double ysum = 0.0;
    double ymin = y(tree.items[begin]), ymax = ymin;
    for (int i = begin; i < end; ++i) {
      const double yi = y(tree.items[i]);
      ysum += yi;
      ymin = std::min(ymin, yi);
      ymax = std::max(ymax, yi);
    }
    if (ymax - ymin <= 0.0) {
      make_leaf(node_id, begin, end);
      return;
    }

    const int d = static_cast<int>(X.cols());
    feat_order.resize(d);
    std::iota(feat_order.begin(), feat_order.end(), 0);
    for (int i = d - 1; i > 0; --i)
      std::swap(feat_order[i], feat_order[rng.uniform_int(i + 1)]);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = -std::numeric_limits<double>::infinity();
    int informative_tried = 0;
    for (int f : feat_order) {
      // mtry informative features per split; constant features do not count,
      // and the search continues past mtry until at least one valid split
      // has been seen.
      if (informative_tried >= params.mtry && best_feature >= 0) break;
      scratch.resize(size);
      for (int i = 0; i < size; ++i) {
        const int item = tree.items[begin + i];
        scratch[i] = {X(item, f), item};
      }
      std::sort(scratch.begin(), scratch.end());
      if (scratch.front().first >= scratch.back().first) continue;
      ++informative_tried;
      double left_sum = 0.0;
      for (int s = 1; s < size; ++s) {
        left_sum += y(scratch[s - 1].second);
        if (s < params.min_leaf || size - s < params.min_leaf) continue;
        if (scratch[s - 1].first >= scratch[s].first) continue;
        const double right_sum = ysum - left_sum;
        const double score =
            left_sum * left_sum / s + right_sum * right_sum / (size - s);
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (scratch[s - 1].first + scratch[s].first);
        }
      }
    }
    if (best_feature < 0) {
      make_leaf(node_id, begin, end);
      return;
    }

    // Stable partition keeps within-side order deterministic.
    swap_buf.clear();
    int mid = begin;
    for (int i = begin; i < end; ++i) {
      const int item = tree.items[i];
      if (X(item, best_feature) <= best_threshold)
        tree.items[mid++] = item;
      else
        swap_buf.push_back(item);
    }
    std::copy(swap_buf.begin(), swap_buf.end(), tree.items.begin() + mid);

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& nd = tree.nodes[node_id];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = left_id;
    nd.right = left_id + 1;
    split_node(left_id, begin, mid);
    split_node(left_id + 1, mid, end);
  }
};

}  // namespace

Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ForestParams& params_in) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  ForestParams params = params_in;
  if (params.n_trees < 1) throw ConfigError("fit_forest: n_trees must be >= 1");
  if (params.min_leaf < 1) throw ConfigError("fit_forest: min_leaf must be >= 1");
  if (n < 2 * params.min_leaf)
    throw ConfigError("fit_forest: need n >= 2*min_leaf, got n=" + std::to_string(n) +
                      ", min_leaf=" + std::to_string(params.min_leaf));
  if (params.mtry == 0)
    params.mtry = static_cast<int>(std::ceil(d / 3.0));
  params.mtry = std::clamp(params.mtry, 1, d);

  Forest forest;
  forest.y_ = y;
  forest.params_ = params;
  forest.n_ = n;
  forest.d_ = d;
  forest.trees_.resize(params.n_trees);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
    auto& tree = forest.trees_[t];
    tree.items.resize(n);
    if (params.bootstrap) {
      for (int i = 0; i < n; ++i) tree.items[i] = rng.uniform_int(n);
    } else {
      std::iota(tree.items.begin(), tree.items.end(), 0);
    }
    TreeBuilder builder{X, y, params, rng, tree, {}, {}, {}};
    builder.build();
  }
  return forest;
}

int Forest::leaf_of(const Tree& tree, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  int id = 0;
  while (tree.nodes[id].feature >= 0) {
    const auto& nd = tree.nodes[id];
    id = (x(nd.feature) <= nd.threshold) ? nd.left : nd.right;
  }
  return id;
}

double Forest::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double s = 0.0;
  for (const auto& tree : trees_) s += tree.nodes[leaf_of(tree, x)].leaf_mean;
  return s / trees_.size();
}

LocalityWeights forest_weights(const Forest& forest,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(forest.train_size());
  for (const auto& tree : forest.trees()) {
    const auto& nd = tree.nodes[forest.leaf_of(tree, x)];
    const double inv = 1.0 / (nd.end - nd.begin);
    for (int i = nd.begin; i < nd.end; ++i) w(tree.items[i]) += inv;
  }
  w /= w.sum();
  return LocalityWeights{std::move(w)};
}

Eigen::VectorXd silverman_bandwidths(const Eigen::MatrixXd& X_train) {
  const Eigen::Index n = X_train.rows();
  const Eigen::Index d = X_train.cols();
  if (n < 2) throw ConfigError("silverman_bandwidths: need n >= 2");
  const double factor = std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) *
                        std::pow(static_cast<double>(n), -1.0 / (d + 4.0));
  Eigen::VectorXd h(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = X_train.col(j).mean();
    const double var = (X_train.col(j).array() - mean).square().sum() / (n - 1);
    h(j) = factor * std::sqrt(var);
  }
  return h;
}

LocalityWeights kernel_weights(const Eigen::MatrixXd& X_train,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = X_train.rows();
  const Eigen::Index d = X_train.cols();
  const Eigen::VectorXd h = silverman_bandwidths(X_train);
  Eigen::VectorXd logw = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(h(j) > 0.0)) {
      diagnostics::counters().kernel_dims_skipped.fetch_add(1,
                                                            std::memory_order_relaxed);
      continue;
    }
    const double inv2h2 = 1.0 / (2.0 * h(j) * h(j));
    logw.array() -= (X_train.col(j).array() - x(j)).square() * inv2h2;
  }
  const double shift = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - shift).exp();
  w /= w.sum();
  return LocalityWeights{std::move(w)};
}

double ForestClassifier::predict_proba(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return clip_probability(forest_->predict(x));
}

ForestClassifier fit_forest_classifier(const Eigen::MatrixXd& X,
                                       const std::vector<int>& a, ForestParams params) {
  const auto ones = std::count(a.begin(), a.end(), 1);
  if (ones == 0 || static_cast<Eigen::Index>(ones) == X.rows())
    throw ValidationError("fit_forest_classifier: both classes must be present");
  if (params.mtry == 0)
    params.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));
  Eigen::VectorXd ya(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) ya(i) = a[i];
  return ForestClassifier(std::make_shared<Forest>(fit_forest(X, ya, params)));
}

// ---------------------------------------------------------------------------
// Conditional estimators

double qrf_quantile(const Forest& forest, const Eigen::Ref<const Eigen::VectorXd>& x,
                    std::span<const double> values, double tau) {
  const auto lw = forest_weights(forest, x);
  return weighted_quantile(values, {lw.w.data(), static_cast<std::size_t>(lw.w.size())},
                           tau);
}

double qrf_quantile(const Forest& forest, const Eigen::Ref<const Eigen::VectorXd>& x,
                    double tau) {
  const auto& y = forest.train_y();
  return qrf_quantile(forest, x, {y.data(), static_cast<std::size_t>(y.size())}, tau);
}

double sqrf_superquantile(const Forest& forest,
                          const Eigen::Ref<const Eigen::VectorXd>& x,
                          std::span<const double> values, double tau) {
  const auto lw = forest_weights(forest, x);
  return weighted_superquantile(
             values, {lw.w.data(), static_cast<std::size_t>(lw.w.size())}, tau)
      .mu;
}

double sqrf_superquantile(const Forest& forest,
                          const Eigen::Ref<const Eigen::VectorXd>& x, double tau) {
  const auto& y = forest.train_y();
  return sqrf_superquantile(forest, x,
                            {y.data(), static_cast<std::size_t>(y.size())}, tau);
}

namespace {

class QrfQuantileModel : public QuantileModel {
 public:
  QrfQuantileModel(std::shared_ptr<const Forest> f, double tau)
      : forest_(std::move(f)), tau_(tau) {}
  double quantile(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    return qrf_quantile(*forest_, x, tau_);
  }

 private:
  std::shared_ptr<const Forest> forest_;
  double tau_;
};

class KernelQuantileModel : public QuantileModel {
 public:
  KernelQuantileModel(Eigen::MatrixXd X, Eigen::VectorXd y, double tau)
      : X_(std::move(X)), y_(std::move(y)), tau_(tau) {}
  double quantile(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    const auto lw = kernel_weights(X_, x);
    return weighted_quantile({y_.data(), static_cast<std::size_t>(y_.size())},
                             {lw.w.data(), static_cast<std::size_t>(lw.w.size())},
                             tau_);
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  double tau_;
};

class FlooredRegressor : public Regressor {
 public:
  FlooredRegressor(std::shared_ptr<Regressor> inner, double floor)
      : inner_(std::move(inner)), floor_(floor) {}
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    const double v = inner_->predict(x);
    if (v < floor_) {
      diagnostics::counters().density_floors.fetch_add(1, std::memory_order_relaxed);
      return floor_;
    }
    return v;
  }
  int dim() const override { return inner_->dim(); }
  int train_size() const override { return inner_->train_size(); }

 private:
  std::shared_ptr<Regressor> inner_;
  double floor_;
};

}  // namespace

std::pair<std::vector<int>, std::vector<int>> arm_half_split(const Dataset& train,
                                                             int arm,
                                                             std::uint64_t seed,
                                                             bool shuffle) {
  std::vector<int> rows = train.arm_indices(arm);
  if (shuffle) {
    Rng rng(mix_seed(seed, 0x4a1f));
    for (int i = static_cast<int>(rows.size()) - 1; i > 0; --i)
      std::swap(rows[i], rows[rng.uniform_int(i + 1)]);
  }
  std::vector<int> a, b;
  for (std::size_t i = 0; i < rows.size(); ++i)
    (i % 2 == 0 ? a : b).push_back(rows[i]);
  return {a, b};
}

QuantileLearner qrf_quantile_learner(int n_trees, bool bootstrap) {
  return [n_trees, bootstrap](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double tau, std::uint64_t seed) {
    ForestParams p;
    p.n_trees = n_trees;
    p.bootstrap = bootstrap;
    p.min_leaf = std::max(1, static_cast<int>(X.rows()) / 20);
    p.seed = seed;
    auto forest = std::make_shared<Forest>(fit_forest(X, y, p));
    return std::static_pointer_cast<QuantileModel>(
        std::make_shared<QrfQuantileModel>(std::move(forest), tau));
  };
}

QuantileLearner linear_quantile_learner() {
  return [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
            std::uint64_t) {
    return std::static_pointer_cast<QuantileModel>(fit_linear_quantile(X, y, tau));
  };
}

QuantileLearner kernel_quantile_learner() {
  return [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
            std::uint64_t) {
    return std::static_pointer_cast<QuantileModel>(
        std::make_shared<KernelQuantileModel>(X, y, tau));
  };
}

TwoStageFit two_stage_superquantile(const Dataset& train, int arm, double tau,
                                    const QuantileLearner& quantile_learner,
                                    const RegressionLearner& final_regressor,
                                    std::uint64_t seed, bool shuffle) {
  const auto arm_rows = train.arm_indices(arm);
  if (arm_rows.size() < 4)
    throw DegenerateSplitError("two_stage_superquantile: arm " + std::to_string(arm) +
                               " has only " + std::to_string(arm_rows.size()) +
                               " rows, need >= 4");
  auto [fit_rows, target_rows] = arm_half_split(train, arm, seed, shuffle);

  const Dataset fit_half = train.subset(fit_rows);
  auto q = quantile_learner(fit_half.x(), fit_half.y(), tau, mix_seed(seed, 1));

  const Dataset target_half = train.subset(target_rows);
  Eigen::VectorXd omega(target_half.n());
  for (int i = 0; i < target_half.n(); ++i) {
    const double yi = target_half.y_at(i);
    const double qi = q->quantile(target_half.x_row(i));
    omega(i) = (yi >= qi) ? yi / (1.0 - tau) : 0.0;
  }
  auto mu = final_regressor(target_half.x(), omega, mix_seed(seed, 2));
  return TwoStageFit{std::move(mu), std::move(q), std::move(fit_rows),
                     std::move(target_rows)};
}

std::shared_ptr<Regressor> density_at_quantile(const Dataset& train, int arm,
                                               const QuantileModel& qhat,
                                               double bandwidth,
                                               const RegressionLearner& final_regressor,
                                               std::uint64_t seed, bool shuffle) {
  if (!(bandwidth > 0.0))
    throw ConfigError("density_at_quantile: bandwidth must be > 0, got " +
                      std::to_string(bandwidth));
  const auto arm_rows = train.arm_indices(arm);
  if (arm_rows.size() < 4)
    throw DegenerateSplitError("density_at_quantile: arm " + std::to_string(arm) +
                               " has only " + std::to_string(arm_rows.size()) +
                               " rows, need >= 4");
  auto [fit_rows, target_rows] = arm_half_split(train, arm, seed, shuffle);
  const Dataset target_half = train.subset(target_rows);
  Eigen::VectorXd omega(target_half.n());
  for (int i = 0; i < target_half.n(); ++i) {
    const double u = (target_half.y_at(i) - qhat.quantile(target_half.x_row(i))) /
                     bandwidth;
    omega(i) = normal_pdf(u) / bandwidth;
  }
  auto fit = final_regressor(target_half.x(), omega, mix_seed(seed, 3));
  return std::make_shared<FlooredRegressor>(std::move(fit), kDensityFloor);
}

EvarResult kernel_evar(const Dataset& train, int arm, double delta,
                       const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto arm_rows = train.arm_indices(arm);
  if (arm_rows.empty())
    throw DegenerateSplitError("kernel_evar: arm " + std::to_string(arm) +
                               " has no rows");
  const Dataset sub = train.subset(arm_rows);
  Eigen::VectorXd w;
  if (sub.n() == 1)
    w = Eigen::VectorXd::Ones(1);
  else
    w = kernel_weights(sub.x(), x).w;
  return weighted_evar({sub.y().data(), static_cast<std::size_t>(sub.n())},
                       {w.data(), static_cast<std::size_t>(w.size())}, delta);
}

EvarResult forest_evar(const Forest& arm_forest, double delta,
                       const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto lw = forest_weights(arm_forest, x);
  const auto& y = arm_forest.train_y();
  return weighted_evar({y.data(), static_cast<std::size_t>(y.size())},
                       {lw.w.data(), static_cast<std::size_t>(lw.w.size())}, delta);
}

}  // namespace cdte

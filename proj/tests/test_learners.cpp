#include <omp.h>

#include <cmath>
#include <numeric>

#include "cdte/errors.hpp"
#include "cdte/learners.hpp"
#include "cdte/rng.hpp"
#include "cdte/sim.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cdte;

namespace {

Eigen::MatrixXd uniform_matrix(int n, int d, Rng& rng, double lo = 0.0,
                               double hi = 1.0) {
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform(lo, hi);
  return X;
}

class ConstantQuantile : public QuantileModel {
 public:
  explicit ConstantQuantile(double q) : q_(q) {}
  double quantile(const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return q_;
  }

 private:
  double q_;
};

RegressionLearner test_forest_learner() {
  return [](const Eigen::MatrixXd& Xf, const Eigen::VectorXd& yf, std::uint64_t seed) {
    ForestParams p;
    p.min_leaf = std::max(1, static_cast<int>(Xf.rows()) / 20);
    p.seed = seed;
    return std::static_pointer_cast<Regressor>(
        std::make_shared<Forest>(fit_forest(Xf, yf, p)));
  };
}

RegressionLearner test_ols_learner() {
  return [](const Eigen::MatrixXd& Xf, const Eigen::VectorXd& yf, std::uint64_t) {
    return std::static_pointer_cast<Regressor>(
        std::make_shared<OlsRegressor>(fit_ols(Xf, yf)));
  };
}

}  // namespace

TEST_CASE("fit_ols") {
  Rng rng(1);
  SUBCASE("interpolates an exactly linear response") {
    const auto X = uniform_matrix(50, 3, rng, -2, 2);
    Eigen::VectorXd y =
        Eigen::VectorXd::Constant(50, 1.5) + X * Eigen::Vector3d(0.5, -1.0, 2.0);
    const auto model = fit_ols(X, y);
    for (int i = 0; i < X.rows(); ++i)
      CHECK(std::fabs(model.predict(X.row(i).transpose()) - y(i)) < 1e-10);
  }
  SUBCASE("constant response gives (c, 0, ..., 0)") {
    const auto X = uniform_matrix(30, 2, rng);
    const auto model = fit_ols(X, Eigen::VectorXd::Constant(30, 4.2));
    CHECK(model.coef()(0) == doctest::Approx(4.2).epsilon(1e-10));
    CHECK(std::fabs(model.coef()(1)) < 1e-10);
    CHECK(std::fabs(model.coef()(2)) < 1e-10);
  }
  SUBCASE("duplicated column raises a singular-design error") {
    Eigen::MatrixXd X = uniform_matrix(20, 3, rng);
    X.col(2) = X.col(0);
    Eigen::VectorXd y = X.col(1);
    CHECK_THROWS_AS(fit_ols(X, y), SingularDesignError);
  }
  SUBCASE("matches an independent Gauss-Jordan normal-equation solve") {
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 20 + rng.uniform_int(180);
      const int p = 1 + rng.uniform_int(9);
      const auto X = uniform_matrix(n, p, rng, -1, 1);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) y(i) = rng.normal() + X.row(i).sum();
      const auto model = fit_ols(X, y);
      const auto oracle = oracles::ols_gauss_jordan(X, y);
      CHECK((model.coef() - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("fit_logistic") {
  SUBCASE("null model on independent balanced labels") {
    Rng rng(12);
    const int n = 10000;
    const auto X = uniform_matrix(n, 3, rng);
    std::vector<int> a(n);
    for (int i = 0; i < n; ++i) a[i] = rng.bernoulli(0.5) ? 1 : 0;
    const auto model = fit_logistic(X, a);
    CHECK(model.coef().cwiseAbs().maxCoeff() < 0.1);
  }
  SUBCASE("recovers the benchmark propensity slope") {
    Rng rng(34);
    sim::Dgp dgp;
    const Dataset data = dgp.sample(10000, rng);
    const auto model = fit_logistic(data.x(), data.a());
    CHECK(std::fabs(model.coef()(1) - 6.0) < 0.3);
    CHECK(std::fabs(model.coef()(0) + 3.0) < 0.3);
  }
  SUBCASE("single class rejected") {
    Rng rng(2);
    const auto X = uniform_matrix(20, 2, rng);
    CHECK_THROWS_AS(fit_logistic(X, std::vector<int>(20, 1)), ValidationError);
  }
  SUBCASE("predictions stay inside the clip range") {
    Rng rng(3);
    const int n = 200;
    const auto X = uniform_matrix(n, 1, rng, -1, 1);
    std::vector<int> a(n);
    for (int i = 0; i < n; ++i)
      a[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-20.0 * X(i, 0)))) ? 1 : 0;
    const auto model = fit_logistic(X, a);
    Eigen::VectorXd far(1);
    far << 50.0;
    CHECK(model.predict_proba(far) <= 0.99);
    far << -50.0;
    CHECK(model.predict_proba(far) >= 0.01);
  }
}

TEST_CASE("fit_forest") {
  SUBCASE("constant response predicts the constant everywhere") {
    Rng rng(4);
    const auto X = uniform_matrix(100, 2, rng);
    ForestParams p;
    p.n_trees = 20;
    p.min_leaf = 5;
    p.seed = 9;
    const Forest f = fit_forest(X, Eigen::VectorXd::Constant(100, 2.5), p);
    for (int i = 0; i < 10; ++i)
      CHECK(f.predict(uniform_matrix(1, 2, rng).row(0).transpose()) == 2.5);
  }
  SUBCASE("learns y = x with MSE below half the response variance") {
    Rng rng(5);
    const int n = 2000;
    const auto X = uniform_matrix(n, 1, rng);
    const Eigen::VectorXd y = X.col(0);
    ForestParams p;
    p.min_leaf = 100;
    p.seed = 10;
    const Forest f = fit_forest(X, y, p);
    const auto X_test = uniform_matrix(500, 1, rng);
    double mse = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double diff = f.predict(X_test.row(i).transpose()) - X_test(i, 0);
      mse += diff * diff;
    }
    mse /= 500;
    CHECK(mse < (1.0 / 12.0) / 2.0);
  }
  SUBCASE("same seed gives bit-identical predictions") {
    Rng rng(6);
    const auto X = uniform_matrix(300, 4, rng);
    Eigen::VectorXd y(300);
    for (int i = 0; i < 300; ++i) y(i) = std::sin(3 * X(i, 0)) + rng.normal() * 0.2;
    ForestParams p;
    p.min_leaf = 10;
    p.seed = 77;
    const Forest f1 = fit_forest(X, y, p);
    const Forest f2 = fit_forest(X, y, p);
    const auto Xt = uniform_matrix(50, 4, rng);
    for (int i = 0; i < 50; ++i)
      CHECK(f1.predict(Xt.row(i).transpose()) == f2.predict(Xt.row(i).transpose()));
  }
  SUBCASE("serial and parallel builds are identical") {
    Rng rng(61);
    const auto X = uniform_matrix(400, 3, rng);
    Eigen::VectorXd y(400);
    for (int i = 0; i < 400; ++i) y(i) = X(i, 0) + rng.normal() * 0.1;
    ForestParams p;
    p.min_leaf = 20;
    p.seed = 5;
    const int before = omp_get_max_threads();
    omp_set_num_threads(1);
    const Forest serial = fit_forest(X, y, p);
    omp_set_num_threads(std::max(2, before));
    const Forest parallel = fit_forest(X, y, p);
    omp_set_num_threads(before);
    const auto Xt = uniform_matrix(25, 3, rng);
    for (int i = 0; i < 25; ++i)
      CHECK(serial.predict(Xt.row(i).transpose()) ==
            parallel.predict(Xt.row(i).transpose()));
  }
  SUBCASE("too-small sample rejected") {
    Rng rng(7);
    const auto X = uniform_matrix(10, 1, rng);
    ForestParams p;
    p.min_leaf = 6;
    CHECK_THROWS_AS(fit_forest(X, Eigen::VectorXd::Zero(10), p), ConfigError);
  }
}

TEST_CASE("forest_weights") {
  Rng rng(8);
  SUBCASE("single unsplit tree gives uniform weights") {
    // constant features leave no valid split, so the root is the only leaf
    const int n = 40;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(n, 2, 0.5);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.normal();
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    const Forest f = fit_forest(X, y, p);
    const auto w = forest_weights(f, X.row(0).transpose()).w;
    for (int i = 0; i < n; ++i) CHECK(w(i) == doctest::Approx(1.0 / n));
  }
  SUBCASE("weights are a distribution at random query points") {
    const int n = 200;
    const auto X = uniform_matrix(n, 3, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = X(i, 0) + 0.3 * rng.normal();
    ForestParams p;
    p.min_leaf = 10;
    p.seed = 3;
    const Forest f = fit_forest(X, y, p);
    for (int t = 0; t < 10; ++t) {
      const auto w = forest_weights(f, uniform_matrix(1, 3, rng).row(0).transpose()).w;
      CHECK(w.minCoeff() >= 0.0);
      CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("weights concentrate on same-leaf neighbors") {
    const int n = 50;
    const auto X = uniform_matrix(n, 1, rng);
    const Eigen::VectorXd y = X.col(0);
    ForestParams p;
    p.n_trees = 1;
    p.min_leaf = 10;
    p.bootstrap = false;
    p.seed = 2;
    const Forest f = fit_forest(X, y, p);
    const auto x0 = X.row(7).transpose();
    const auto& tree = f.trees()[0];
    const auto& nd = tree.nodes[f.leaf_of(tree, x0)];
    std::vector<bool> member(n, false);
    for (int i = nd.begin; i < nd.end; ++i) member[tree.items[i]] = true;
    const auto w = forest_weights(f, x0).w;
    for (int i = 0; i < n; ++i) {
      if (member[i])
        CHECK(w(i) > 0.0);
      else
        CHECK(w(i) == 0.0);
    }
  }
}

TEST_CASE("kernel_weights") {
  SUBCASE("silverman bandwidth closed form in one dimension") {
    Rng rng(9);
    const int n = 100;
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = rng.normal();
    const double mean = X.col(0).mean();
    const double sd = std::sqrt((X.col(0).array() - mean).square().sum() / (n - 1));
    const double expected = std::pow(4.0 / 3.0, 0.2) * sd * std::pow(double(n), -0.2);
    CHECK(std::fabs(silverman_bandwidths(X)(0) - expected) < 1e-9);
  }
  SUBCASE("query at an isolated training point concentrates") {
    Rng rng(10);
    const int n = 101;
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n - 1; ++i) X(i, 0) = rng.uniform01();
    X(n - 1, 0) = 50.0;
    const auto w = kernel_weights(X, X.row(n - 1).transpose()).w;
    CHECK(w(n - 1) > 0.99);
  }
  SUBCASE("translation invariance") {
    Rng rng(11);
    const int n = 60;
    const auto X = uniform_matrix(n, 2, rng);
    Eigen::VectorXd x0(2);
    x0 << 0.4, 0.6;
    const auto w1 = kernel_weights(X, x0).w;
    const Eigen::MatrixXd Xs = X.array() + 5.0;
    const auto w2 = kernel_weights(Xs, (x0.array() + 5.0).matrix()).w;
    for (int i = 0; i < n; ++i) CHECK(w2(i) == doctest::Approx(w1(i)).epsilon(1e-9));
  }
  SUBCASE("zero-variance dimension skipped with a counter") {
    diagnostics::counters().reset();
    Rng rng(12);
    Eigen::MatrixXd X = uniform_matrix(30, 2, rng);
    X.col(1).setConstant(3.0);
    Eigen::VectorXd x0(2);
    x0 << 0.5, 3.0;
    const auto w = kernel_weights(X, x0).w;
    CHECK(w.sum() == doctest::Approx(1.0));
    CHECK(diagnostics::snapshot().kernel_dims_skipped > 0);
    diagnostics::counters().reset();
  }
}

TEST_CASE("qrf quantile prediction") {
  SUBCASE("single-leaf forest reduces to the sample quantile") {
    Rng rng(13);
    const int n = 60;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(n, 2, 0.3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform(-1, 1);
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    const Forest f = fit_forest(X, y, p);
    const std::vector<double> values(y.data(), y.data() + n);
    const std::vector<double> u(n, 1.0);
    for (double tau : {0.1, 0.5, 0.9})
      CHECK(qrf_quantile(f, X.row(0).transpose(), tau) ==
            weighted_quantile(values, u, tau));
    CHECK(qrf_quantile(f, X.row(0).transpose(), 1e-9) ==
          *std::min_element(values.begin(), values.end()));
  }
  SUBCASE("recovers the conditional lognormal quantile on the benchmark DGP") {
    Rng rng(14);
    sim::Dgp dgp;
    const Dataset data = dgp.sample(5000, rng);
    const Dataset sub = data.subset(data.arm_indices(1));
    ForestParams p;
    p.min_leaf = std::max(1, sub.n() / 20);
    p.seed = 15;
    const Forest f = fit_forest(sub.x(), sub.y(), p);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.5);
    const double truth = std::exp(1.0 + 0.2 * normal_quantile(0.75));
    CHECK(std::fabs(qrf_quantile(f, x, 0.75) - truth) < 0.15);
  }
}

TEST_CASE("sqrf superquantile prediction") {
  Rng rng(16);
  SUBCASE("uniform-weight reduction") {
    Eigen::VectorXd vals(4);
    vals << 1, 2, 3, 4;
    const Eigen::MatrixXd X4 = Eigen::MatrixXd::Constant(4, 1, 0.5);
    ForestParams p4;
    p4.n_trees = 1;
    p4.bootstrap = false;
    const Forest f4 = fit_forest(X4, vals, p4);
    CHECK(sqrf_superquantile(f4, X4.row(0).transpose(), 0.5) == doctest::Approx(3.5));
  }
  SUBCASE("dominates the quantile at the same point and level") {
    const int n = 80;
    const auto X = uniform_matrix(n, 2, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform(0, 4);
    ForestParams p;
    p.min_leaf = 10;
    p.seed = 44;
    const Forest f = fit_forest(X, y, p);
    for (int t = 0; t < 5; ++t) {
      const auto x = uniform_matrix(1, 2, rng).row(0).transpose().eval();
      const double tau = rng.uniform(0.2, 0.9);
      CHECK(sqrf_superquantile(f, x, tau) >= qrf_quantile(f, x, tau) - 1e-12);
    }
  }
}

TEST_CASE("two_stage_superquantile") {
  SUBCASE("constant outcome exposes the inclusive-tail atom convention") {
    // With Y = c the half-1 quantile is c, so omega = c/(1-tau) = 4c at
    // tau = 0.75 on every target row and the fitted surface is 4c.
    Rng rng(17);
    const int n = 40;
    Eigen::MatrixXd X = uniform_matrix(n, 2, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 2.0);
    std::vector<int> a(n, 1);
    for (int i = 0; i < n; i += 2) a[i] = 0;
    const Dataset train(X, a, y);
    const auto fit = two_stage_superquantile(train, 1, 0.75, qrf_quantile_learner(10),
                                             test_ols_learner(), 7);
    for (int t = 0; t < 5; ++t)
      CHECK(fit.mu->predict(uniform_matrix(1, 2, rng).row(0).transpose()) ==
            doctest::Approx(8.0).epsilon(1e-9));
  }
  SUBCASE("approximates the lognormal superquantile on the benchmark DGP") {
    Rng rng(18);
    sim::Dgp dgp;
    const Dataset data = dgp.sample(5000, rng);
    const auto fit = two_stage_superquantile(data, 1, 0.75, qrf_quantile_learner(100),
                                             test_forest_learner(), 19);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.5);
    const double truth = std::exp(1.0) * std::exp(0.02) *
                         normal_cdf(0.2 - normal_quantile(0.75)) / 0.25;
    CHECK(std::fabs(fit.mu->predict(x) - truth) < 0.2);
  }
  SUBCASE("misspecified OLS final stage runs and stays finite") {
    Rng rng(19);
    sim::Dgp dgp;
    const Dataset data = dgp.sample(600, rng);
    const auto fit = two_stage_superquantile(data, 0, 0.75, qrf_quantile_learner(50),
                                             test_ols_learner(), 20);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.3);
    CHECK(std::isfinite(fit.mu->predict(x)));
  }
  SUBCASE("tiny arm rejected") {
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, 3;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const Dataset train(X, {1, 1, 1}, y);
    CHECK_THROWS_AS(
        two_stage_superquantile(train, 1, 0.5, qrf_quantile_learner(5),
                                test_ols_learner(), 1),
        DegenerateSplitError);
  }
}

TEST_CASE("density_at_quantile") {
  SUBCASE("uniform outcome density near one") {
    Rng rng(20);
    const int n = 5000;
    Eigen::MatrixXd X = uniform_matrix(n, 2, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform01();
    const Dataset train(X, std::vector<int>(n, 1), y);
    const ConstantQuantile qhat(0.5);
    const auto dens =
        density_at_quantile(train, 1, qhat, 0.1, test_forest_learner(), 3);
    Eigen::VectorXd x(2);
    x << 0.5, 0.5;
    CHECK(std::fabs(dens->predict(x) - 1.0) < 0.15);
  }
  SUBCASE("floor keeps 1/f bounded") {
    diagnostics::counters().reset();
    Rng rng(21);
    const int n = 200;
    Eigen::MatrixXd X = uniform_matrix(n, 1, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform01();
    const Dataset train(X, std::vector<int>(n, 1), y);
    const ConstantQuantile far(1000.0);
    const auto dens = density_at_quantile(train, 1, far, 1.0, test_ols_learner(), 3);
    Eigen::VectorXd x(1);
    x << 0.5;
    CHECK(dens->predict(x) == kDensityFloor);
    CHECK(diagnostics::snapshot().density_floors > 0);
    diagnostics::counters().reset();
  }
  SUBCASE("the scaled kernel integrates to one over y") {
    for (double b : {0.25, 1.0, 3.0}) {
      double integral = 0.0;
      const double q = 0.7, dy = 1e-3;
      for (double y = q - 40 * b; y <= q + 40 * b; y += dy)
        integral += normal_pdf((y - q) / b) / b * dy;
      CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
  SUBCASE("nonpositive bandwidth rejected") {
    Eigen::MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    const Dataset train(X, {1, 1, 1, 1}, y);
    const ConstantQuantile qhat(0.5);
    CHECK_THROWS_AS(
        density_at_quantile(train, 1, qhat, 0.0, test_ols_learner(), 1), ConfigError);
  }
}

TEST_CASE("kernel and forest entropic risk") {
  SUBCASE("single training point is a point mass") {
    Eigen::MatrixXd X(2, 1);
    X << 0.5, 0.6;
    Eigen::VectorXd y(2);
    y << 3.14, -1.0;
    const Dataset train(X, {1, 0}, y);
    Eigen::VectorXd x(1);
    x << 0.5;
    CHECK(kernel_evar(train, 1, 0.7, x).R == doctest::Approx(3.14));
  }
  SUBCASE("zero radius gives the locally weighted mean") {
    Rng rng(22);
    const int n = 100;
    Eigen::MatrixXd X = uniform_matrix(n, 2, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform(0, 2);
    const Dataset train(X, std::vector<int>(n, 1), y);
    Eigen::VectorXd x(2);
    x << 0.5, 0.5;
    const auto lw = kernel_weights(X, x);
    CHECK(kernel_evar(train, 1, 0.0, x).R ==
          doctest::Approx(lw.w.dot(y)).epsilon(1e-12));
  }
  SUBCASE("tracks the truncated-lognormal oracle in low dimension") {
    Rng rng(23);
    sim::Dgp dgp;
    dgp.d = 2;
    dgp.truncate = true;
    const Dataset data = dgp.sample(5000, rng);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.5);
    const double delta = -std::log1p(-0.75);
    const auto oracle = sim::evar_truncated_standard_lognormal(0.2, 0.99, delta);
    const double truth = std::exp(1.0) * oracle.R;
    CHECK(std::fabs(kernel_evar(data, 1, delta, x).R - truth) < 0.3);

    const Dataset sub = data.subset(data.arm_indices(1));
    ForestParams p;
    p.min_leaf = std::max(1, sub.n() / 20);
    p.seed = 24;
    const Forest f = fit_forest(sub.x(), sub.y(), p);
    CHECK(std::fabs(forest_evar(f, delta, x).R - truth) < 0.6);
  }
  SUBCASE("stays the right order of magnitude in ten dimensions") {
    // Locality weights in d=10 leave only a handful of effective neighbors
    // whose log-scale dispersion biases the local risk upward; the estimate
    // is loose here by construction (the slow learner).
    Rng rng(23);
    sim::Dgp dgp;
    dgp.truncate = true;
    const Dataset data = dgp.sample(5000, rng);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.5);
    const double delta = -std::log1p(-0.75);
    const auto oracle = sim::evar_truncated_standard_lognormal(0.2, 0.99, delta);
    const double truth = std::exp(1.0) * oracle.R;
    CHECK(std::fabs(kernel_evar(data, 1, delta, x).R - truth) < 2.0);
  }
}

TEST_CASE("linear quantile regression tracks conditional quantile lines") {
  Rng rng(25);
  const int n = 4000;
  const auto X = uniform_matrix(n, 1, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = 1.0 + 2.0 * X(i, 0) + rng.normal();
  const auto model = fit_linear_quantile(X, y, 0.75);
  CHECK(std::fabs(model->coef()(0) - (1.0 + normal_quantile(0.75))) < 0.15);
  CHECK(std::fabs(model->coef()(1) - 2.0) < 0.2);
}

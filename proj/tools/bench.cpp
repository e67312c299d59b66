// Serial vs parallel timing for the OpenMP kernels: forest fitting, the
// entropic-risk log-sum-exp profile, and a small benchmark cell. The same
// seeds feed both runs, and outputs are compared so the table doubles as a
// determinism check across thread counts.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "cdte/learners.hpp"
#include "cdte/rng.hpp"
#include "cdte/sim.hpp"

using h_clock = std::chrono::steady_clock;

namespace {

double seconds_since(h_clock::time_point t0) {
  return std::chrono::duration<double>(h_clock::now() - t0).count();
}

struct Timed {
  double serial = 0.0;
  double parallel = 0.0;
  bool identical = false;
};

template <typename Fn>
Timed time_both(Fn&& fn) {
  Timed t;
  omp_set_num_threads(1);
  auto t0 = h_clock::now();
  const auto serial_out = fn();
  t.serial = seconds_since(t0);
  omp_set_num_threads(omp_get_num_procs());
  t0 = h_clock::now();
  const auto parallel_out = fn();
  t.parallel = seconds_since(t0);
  t.identical = serial_out == parallel_out;
  return t;
}

void report(const char* name, const Timed& t) {
  std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   %s\n", name,
              t.serial, t.parallel, t.serial / std::max(t.parallel, 1e-12),
              t.identical ? "outputs identical" : "OUTPUT MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", omp_get_num_procs());

  {
    cdte::Rng rng(42);
    const int n = 20000, d = 10;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = rng.uniform01();
      y(i) = std::exp(X(i, 0) + X(i, 1)) + rng.normal() * 0.1;
    }
    cdte::ForestParams params;
    params.min_leaf = n / 20;
    params.seed = 7;
    const auto t = time_both([&] {
      const cdte::Forest f = cdte::fit_forest(X, y, params);
      double s = 0.0;
      for (int i = 0; i < 200; ++i) s += f.predict(X.row(i).transpose());
      return s;
    });
    report("forest fit (n=20k, 100 trees)", t);
  }

  {
    cdte::Rng rng(43);
    const int n = 1000000;
    std::vector<double> values(n), weights(n, 1.0);
    for (auto& v : values) v = std::min(rng.lognormal(0.0, 0.5), 6.0);
    const auto t = time_both([&] {
      double s = 0.0;
      for (double tau : {0.5, 0.9, 0.99})
        s += cdte::weighted_evar(values, weights, -std::log1p(-tau)).R;
      return s;
    });
    report("entropic risk (n=1e6 x 3)", t);
  }

  {
    cdte::sim::BenchmarkConfig cfg;
    cfg.spec = cdte::StatisticSpec::superquantile(0.75);
    cfg.n_grid = {400};
    cfg.reps = 8;
    cfg.eval_points = 100;
    cfg.estimators = {"cdte_forest", "plugin_raw"};
    const auto t = time_both([&] {
      const auto r = cdte::sim::run_benchmark(cfg);
      return r.find("cdte_forest", 400)->mean_mse;
    });
    report("benchmark cell (8 reps)", t);
  }
  return 0;
}

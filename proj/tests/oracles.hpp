// Brute-force reference implementations used as independent oracles. These
// deliberately avoid the library's computation paths: direct CDF scans,
// breakpoint/grid enumeration for the dual objectives, and a hand-rolled
// Gauss-Jordan solve for least squares.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// inf{y : F_n(y) >= tau} by scanning candidate values directly.
inline double quantile_enum(std::span<const double> values,
                            std::span<const double> weights, double tau) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  for (double candidate : sorted) {
    double below = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] <= candidate) below += weights[i];
    if (below >= tau * total) return candidate;
  }
  return sorted.back();
}

// Superquantile as the minimum of the dual objective
//   beta + (1-tau)^{-1} E[max(y-beta, 0)]
// over all breakpoints (the objective is piecewise linear in beta, so the
// minimum sits at a data value) plus a dense grid for good measure.
inline double superquantile_min_enum(std::span<const double> values,
                                     std::span<const double> weights, double tau) {
  double total = 0.0;
  for (double w : weights) total += w;
  auto objective = [&](double beta) {
    double e = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      e += weights[i] * std::max(values[i] - beta, 0.0);
    return beta + e / (total * (1.0 - tau));
  };
  double best = std::numeric_limits<double>::infinity();
  for (double v : values) best = std::min(best, objective(v));
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  for (int i = 0; i <= 2000; ++i)
    best = std::min(best, objective(lo + (hi - lo) * i / 2000.0));
  return best;
}

// Entropic risk by dense log-spaced grid search over beta in [1e-4, 1e4],
// max-shift stabilized.
inline double evar_grid(std::span<const double> values,
                        std::span<const double> weights, double delta,
                        int grid_points = 100000) {
  double total = 0.0, vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    total += weights[i];
    if (weights[i] > 0.0) vmax = std::max(vmax, values[i]);
  }
  double best = std::numeric_limits<double>::infinity();
  const double lo = std::log(1e-4), hi = std::log(1e4);
  for (int g = 0; g < grid_points; ++g) {
    const double beta = std::exp(lo + (hi - lo) * g / (grid_points - 1));
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      s += weights[i] / total * std::exp((values[i] - vmax) / beta);
    best = std::min(best, vmax + beta * (std::log(s) + delta));
  }
  // The infimum over beta > 0 never exceeds the largest supported value;
  // when the optimum sits below the grid floor this tightens the bound.
  return std::min(best, vmax);
}

// Normal-equation least squares via Gauss-Jordan elimination (no Eigen
// decompositions), intercept column prepended.
inline Eigen::VectorXd ols_gauss_jordan(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols()) + 1;
  std::vector<std::vector<double>> aug(p, std::vector<double>(p + 1, 0.0));
  auto phi = [&](int i, int j) { return j == 0 ? 1.0 : X(i, j - 1); };
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += phi(i, r) * phi(i, c);
      aug[r][c] = s;
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += phi(i, r) * y(i);
    aug[r][p] = s;
  }
  for (int col = 0; col < p; ++col) {
    int pivot = col;
    for (int r = col + 1; r < p; ++r)
      if (std::fabs(aug[r][col]) > std::fabs(aug[pivot][col])) pivot = r;
    std::swap(aug[col], aug[pivot]);
    if (std::fabs(aug[col][col]) < 1e-12)
      throw std::runtime_error("oracle solve: singular system");
    const double inv = 1.0 / aug[col][col];
    for (int c = col; c <= p; ++c) aug[col][c] *= inv;
    for (int r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = aug[r][col];
      for (int c = col; c <= p; ++c) aug[r][c] -= f * aug[col][c];
    }
  }
  Eigen::VectorXd out(p);
  for (int r = 0; r < p; ++r) out(r) = aug[r][p];
  return out;
}

}  // namespace oracles

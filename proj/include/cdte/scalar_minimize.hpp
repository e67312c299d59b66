#pragma once

#include <functional>

namespace cdte {

// One-dimensional convex minimization over beta > 0, parameterized in
// log(beta) so brackets spanning many decades behave. Golden-section rather
// than derivative-based: the entropic-risk objective's derivative is noisy
// near the overflow-clamped region.
struct ScalarConvexProblem {
  std::function<double(double)> objective;  // evaluated at beta > 0
  double lo = 0.0;                          // bracket in beta, 0 < lo < hi
  double hi = 0.0;
  double tol = 1e-10;  // relative tolerance on the log-bracket width
  int max_iter = 200;
};

struct ScalarMinimum {
  double argmin = 0.0;
  double min_value = 0.0;
  int iters = 0;
  bool converged = false;
  bool at_boundary = false;  // argmin stuck at lo or hi
};

// Throws NumericalError (reporting beta) on a non-finite objective value.
ScalarMinimum minimize_scalar(const ScalarConvexProblem& problem);

}  // namespace cdte

#include "cdte/scalar_minimize.hpp"

#include <cmath>
#include <string>

#include "cdte/errors.hpp"

namespace cdte {

namespace {
constexpr double kGolden = 0.6180339887498948482;  // (sqrt(5)-1)/2
}

ScalarMinimum minimize_scalar(const ScalarConvexProblem& problem) {
  if (!(problem.lo > 0.0) || !(problem.lo < problem.hi))
    throw ConfigError("minimize_scalar: need 0 < lo < hi");

  auto eval = [&](double u) {
    const double beta = std::exp(u);
    const double v = problem.objective(beta);
    if (!std::isfinite(v))
      throw NumericalError("minimize_scalar: non-finite objective at beta=" +
                           std::to_string(beta));
    return v;
  };

  double a = std::log(problem.lo);
  double b = std::log(problem.hi);
  const double a0 = a, b0 = b;

  double best_u = a;
  double best_f = eval(a);
  const double fb = eval(b);
  if (fb < best_f) {
    best_f = fb;
    best_u = b;
  }

  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);

  const double scale = std::max(1.0, std::max(std::fabs(a0), std::fabs(b0)));
  int it = 0;
  for (; it < problem.max_iter && (b - a) > problem.tol * scale; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = eval(x2);
    }
    if (f1 < best_f) {
      best_f = f1;
      best_u = x1;
    }
    if (f2 < best_f) {
      best_f = f2;
      best_u = x2;
    }
  }

  ScalarMinimum out;
  out.iters = it;
  out.converged = (b - a) <= problem.tol * scale;
  const double margin = std::max(b - a, problem.tol * scale) * 2.0;
  out.at_boundary = (best_u - a0) <= margin || (b0 - best_u) <= margin;
  out.argmin = std::exp(best_u);
  out.min_value = best_f;
  return out;
}

}  // namespace cdte

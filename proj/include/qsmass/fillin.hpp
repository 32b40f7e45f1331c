#pragma once

// Lower bound on the supremum of normalized total mean curvature over
// mean-convex fill-ins with nonnegative scalar curvature:
//   Lambda >= r^{n-1} sqrt(min R / ((n-1)(n-2))).

#include <cmath>
#include <string>

#include "qsmass/errors.hpp"
#include "qsmass/metric.hpp"

namespace qsmass {

struct FillinBound {
  int n = 3;
  double r = 1.0;
  double min_R = 0.0;
  double lambda_lower = 0.0;
};

inline FillinBound lambda_lower_general(int n, double r, double min_R) {
  if (n < 3) throw ContractViolation("fill-in bound needs dimension n >= 3, got " + std::to_string(n));
  if (!(r > 0.0) || !std::isfinite(r)) throw ContractViolation("volume radius must be positive");
  if (!(min_R >= 0.0) || !std::isfinite(min_R)) throw ContractViolation("minimum scalar curvature must be >= 0");
  FillinBound f{n, r, min_R, 0.0};
  f.lambda_lower = std::pow(r, n - 1) * std::sqrt(min_R / ((n - 1.0) * (n - 2.0)));
  return f;
}

/// n = 3 via R = 2K: r^2 sqrt(min K).
inline FillinBound lambda_lower_from_metric(const ConformalMetric& m) {
  double kmin = gauss_curvature(m).min();
  if (kmin < -1e-10)
    throw NegativeCurvature("fill-in bound needs K >= 0, min K = " + std::to_string(kmin));
  kmin = std::max(kmin, 0.0);
  return lambda_lower_general(3, m.r(), 2.0 * kmin);
}

}  // namespace qsmass

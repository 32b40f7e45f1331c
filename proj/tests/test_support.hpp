#pragma once

// Shared fixtures: canonical boundary data and seeded random fields.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qsmass/qsmass.hpp"

namespace qsmass::fixtures {

inline double y00_coef(double value) { return value * std::sqrt(4.0 * std::numbers::pi); }

/// Round sphere of radius r with the Schwarzschild mean curvature of mass m.
inline BoundaryData schwarzschild(const GridPtr& g, double m, double r = 1.0) {
  const double H = 2.0 * std::sqrt(1.0 - 2.0 * m / r) / r;
  return BoundaryData(ConformalMetric::round(g, r), ScalarField(g, H));
}

/// phi = eps Re Y22.
inline ScalarField y22_phi(const GridPtr& g, double eps) {
  const std::vector<HarmonicTerm> t{{2, 2, eps, 0.0}};
  return field_from_harmonics(g, t);
}

/// H = 2 (+ 0.3 cos theta when tilted).
inline ScalarField mean_curvature(const GridPtr& g, bool tilted) {
  return ScalarField::from_function(g, [tilted](double th, double) { return 2.0 + (tilted ? 0.3 * std::cos(th) : 0.0); });
}

inline BoundaryData perturbed(const GridPtr& g, double eps, bool tilted) {
  return BoundaryData(make_metric(y22_phi(g, eps), 1.0), mean_curvature(g, tilted));
}

/// Random real field with harmonics of degree 1..lmax, scaled so that
/// sup |phi| <= sup_bound and sup |Delta phi| <= lap_bound (so K > 0 when
/// lap_bound < 1).
inline ScalarField random_phi(const GridPtr& g, int lmax, double sup_bound, double lap_bound, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Spectrum s(g->truncation());
  for (int l = 1; l <= lmax; ++l)
    for (int m = 0; m <= l; ++m) s(l, m) = {nd(rng), m == 0 ? 0.0 : nd(rng)};
  ScalarField phi = synthesize(g, s);
  const double scale = std::min(sup_bound / phi.sup_norm(), lap_bound / laplacian_round(phi).sup_norm());
  return scale * phi;
}

}  // namespace qsmass::fixtures

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "qsmass/errors.hpp"
#include "qsmass/sphere_grid.hpp"

namespace qsmass {

/// Sphere metric gamma = r^2 e^{2 phi} sigma_o, always stored with
/// int e^{2 phi} dmu_o = 4 pi so that r is the area radius.
class ConformalMetric {
 public:
  ConformalMetric() = default;

  /// Normalizes (phi_raw, r_raw) without changing the metric. Inputs that are
  /// already normalized to within 1e-13 are returned untouched, which makes
  /// normalization idempotent bit for bit.
  static ConformalMetric make(const ScalarField& phi_raw, double r_raw) {
    if (!phi_raw.all_finite()) throw ContractViolation("conformal factor has non-finite values");
    if (!(r_raw > 0.0) || !std::isfinite(r_raw)) throw ContractViolation("area radius must be positive");
    const double mass = integrate(phi_raw.map([](double p) { return std::exp(2.0 * p); }));
    const double ratio = mass / (4.0 * std::numbers::pi);
    ConformalMetric m;
    if (std::abs(ratio - 1.0) <= 1e-13) {
      m.phi_ = phi_raw;
      m.r_ = r_raw;
      return m;
    }
    const double shift = 0.5 * std::log(ratio);
    m.phi_ = phi_raw.map([shift](double p) { return p - shift; });
    m.r_ = r_raw * std::exp(shift);
    return m;
  }

  static ConformalMetric round(const GridPtr& g, double r = 1.0) { return make(ScalarField(g, 0.0), r); }

  double r() const { return r_; }
  double area() const { return 4.0 * std::numbers::pi * r_ * r_; }
  const ScalarField& phi() const { return phi_; }
  const GridPtr& grid() const { return phi_.grid(); }

  /// Same conformal class rescaled: c^2 gamma.
  ConformalMetric scaled(double c) const {
    ConformalMetric m = *this;
    m.r_ *= c;
    return m;
  }

 private:
  ScalarField phi_;
  double r_ = 1.0;
};

inline ConformalMetric make_metric(const ScalarField& phi_raw, double r_raw) {
  return ConformalMetric::make(phi_raw, r_raw);
}

/// Bartnik data (gamma, H) with H > 0.
struct BoundaryData {
  ConformalMetric metric;
  ScalarField H;

  BoundaryData(ConformalMetric m, ScalarField h) : metric(std::move(m)), H(std::move(h)) {
    if (!H.all_finite() || !(H.min() > 0.0))
      throw ContractViolation("mean curvature must be strictly positive, min H = " + std::to_string(H.min()));
  }

  /// (c^2 gamma, H / c)
  BoundaryData scaled(double c) const { return BoundaryData(metric.scaled(c), (1.0 / c) * H); }
};

/// K = r^{-2} e^{-2 phi} (1 - Delta phi).
inline ScalarField gauss_curvature(const ConformalMetric& m) {
  const ScalarField lap = laplacian_round(m.phi());
  ScalarField K(m.grid());
  const double r2 = m.r() * m.r();
  for (std::size_t i = 0; i < K.size(); ++i) K[i] = std::exp(-2.0 * m.phi()[i]) * (1.0 - lap[i]) / r2;
  return K;
}

/// Area element of gamma per node, as a multiple of dmu_o: r^2 e^{2 phi}.
inline ScalarField area_density(const ConformalMetric& m) {
  const double r2 = m.r() * m.r();
  return m.phi().map([r2](double p) { return r2 * std::exp(2.0 * p); });
}

/// max K / min K over grid nodes.
inline double kappa_ratio(const ConformalMetric& m) {
  const ScalarField K = gauss_curvature(m);
  const double kmin = K.min();
  if (!(kmin > 0.0))
    throw NonPositiveCurvature("curvature ratio undefined: min K = " + std::to_string(kmin));
  return K.max() / kmin;
}

/// Normalized total mean curvature (1 / (8 pi r)) int H dmu_gamma.
inline double calH(const BoundaryData& b) {
  const auto& m = b.metric;
  ScalarField integrand(m.grid());
  for (std::size_t i = 0; i < integrand.size(); ++i) integrand[i] = b.H[i] * std::exp(2.0 * m.phi()[i]);
  return m.r() * integrate(integrand) / (8.0 * std::numbers::pi);
}

}  // namespace qsmass

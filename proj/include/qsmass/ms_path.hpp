#pragma once

// Constant-area conformal path from the normalized metric e^{2 phi} sigma_o
// to the round metric,
//   sigma(t) = c(t)^{-1} e^{2 (1-t) phi} sigma_o = e^{2 w} sigma_o,
// made trace-free by the gauge potential psi_t (X_t = grad_sigma psi_t).
// Only frame-invariant data are kept: the flows generated by X_t are never
// integrated.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "qsmass/chebyshev.hpp"
#include "qsmass/errors.hpp"
#include "qsmass/metric.hpp"
#include "qsmass/sphere_grid.hpp"

namespace qsmass {

struct PathSample {
  double t = 0.0;
  double c = 1.0;        ///< c(t)
  double c_prime = 0.0;  ///< d(ln c)/dt
  ScalarField w;         ///< sigma(t) = e^{2w} sigma_o
  ScalarField K;         ///< Gauss curvature of sigma(t)
  ScalarField psi;       ///< gauge potential, int psi dmu_o = 0
  CovectorField dpsi;    ///< d psi, round frame
  SymTensorField D;      ///< sigma' + L_X sigma, round frame
  ScalarField D_norm2;   ///< |D|^2 measured in sigma(t)
  double alpha = 0.0;
  double beta = 1.0;
  double gauge_residual = 0.0;  ///< sup |tr_sigma sigma' + 2 Delta_sigma psi|
  double area = 4.0 * std::numbers::pi;
  double solvability = 0.0;  ///< int of the gauge right side before solving
};

/// Quantities of the input metric reused at every t.
class PathGenerator {
 public:
  explicit PathGenerator(const ConformalMetric& m)
      : grid_(m.grid()), phi_(m.phi()), lap_phi_(laplacian_round(m.phi())), dphi_(gradient_round(m.phi())) {}

  const GridPtr& grid() const { return grid_; }
  const ScalarField& phi() const { return phi_; }

  PathSample sample(double t, double gauge_tol) const {
    if (!(t >= 0.0 && t <= 1.0)) throw ContractViolation("path parameter outside [0, 1]");
    const std::size_t n = grid_->size();
    const double s = 1.0 - t;
    PathSample ps;
    ps.t = t;

    ScalarField e(grid_), phie(grid_);
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = std::exp(2.0 * s * phi_[i]);
      phie[i] = 2.0 * phi_[i] * e[i];
    }
    const double Ie = integrate(e);
    ps.c = Ie / (4.0 * std::numbers::pi);
    ps.c_prime = -integrate(phie) / Ie;
    const double log_c = std::log(ps.c);

    ps.w = phi_.map([&](double p) { return s * p - 0.5 * log_c; });
    ScalarField e2w = ps.w.map([](double x) { return std::exp(2.0 * x); });
    ps.area = integrate(e2w);

    ps.K = ScalarField(grid_);
    for (std::size_t i = 0; i < n; ++i)
      ps.K[i] = ps.c / e[i] * (t + s * (1.0 - lap_phi_[i]));

    // Delta_o psi = e^{2w} (2 phi + c')
    ScalarField rhs(grid_);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = e2w[i] * (2.0 * phi_[i] + ps.c_prime);
    ps.solvability = integrate(rhs);
    if (!(std::abs(ps.solvability) <= 1e-10))
      throw GaugeSolveFailed("gauge equation not solvable at t = " + std::to_string(t) +
                             ": integral of right side = " + std::to_string(ps.solvability));
    ps.psi = inverse_laplacian_round(rhs);
    const ScalarField lap_psi = laplacian_round(ps.psi);
    ps.dpsi = gradient_round(ps.psi);
    const SymTensorField hess = hessian_round(ps.psi);

    ps.D = SymTensorField(grid_);
    ps.D_norm2 = ScalarField(grid_);
    double resid = 0.0, amax = 0.0, kmin = ps.K[0];
    for (std::size_t i = 0; i < n; ++i) {
      const double pt = ps.dpsi.theta[i], pl = ps.dpsi.lambda[i];
      const double ft = dphi_.theta[i], fl = dphi_.lambda[i];
      const double dot = pt * ft + pl * fl;
      // Hess_sigma psi = Hess_o psi - (1-t)[dpsi (x) dphi + dphi (x) dpsi - <dphi, dpsi> sigma_o]
      const double htt = hess.tt[i] - s * (2.0 * pt * ft - dot);
      const double htl = hess.tl[i] - s * (pt * fl + pl * ft);
      const double hll = hess.ll[i] - s * (2.0 * pl * fl - dot);
      const double vel = -(2.0 * phi_[i] + ps.c_prime) * e2w[i];  // sigma' = (-2 phi - c') sigma
      ps.D.tt[i] = vel + 2.0 * htt;
      ps.D.tl[i] = 2.0 * htl;
      ps.D.ll[i] = vel + 2.0 * hll;
      const double inv = 1.0 / e2w[i];
      const double nrm = (ps.D.tt[i] * ps.D.tt[i] + 2.0 * ps.D.tl[i] * ps.D.tl[i] + ps.D.ll[i] * ps.D.ll[i]) *
                         inv * inv;
      ps.D_norm2[i] = nrm;
      amax = std::max(amax, nrm);
      kmin = std::min(kmin, ps.K[i]);
      // tr_sigma sigma' + 2 Delta_sigma psi
      const double g = -2.0 * (2.0 * phi_[i] + ps.c_prime) + 2.0 * inv * lap_psi[i];
      resid = std::max(resid, std::abs(g));
    }
    ps.alpha = amax / 8.0;
    ps.beta = kmin;
    ps.gauge_residual = resid;
    if (!(resid <= gauge_tol))
      throw GaugeSolveFailed("gauge residual " + std::to_string(resid) + " exceeds tolerance " +
                             std::to_string(gauge_tol) + " at t = " + std::to_string(t) +
                             " (raise the band limit)");
    if (ps.beta < -1e-8)
      throw PathCurvatureViolation("path metric has negative curvature (beta = " + std::to_string(ps.beta) +
                                   ") at t = " + std::to_string(t));
    return ps;
  }

 private:
  GridPtr grid_;
  ScalarField phi_;
  ScalarField lap_phi_;
  CovectorField dphi_;
};

inline PathSample path_sample(const ConformalMetric& m, double t, double gauge_tol) {
  return PathGenerator(m).sample(t, gauge_tol);
}

/// Scalar path data on the shared Chebyshev t-nodes.
struct PathTable {
  ChebyshevRule rule{9};
  std::vector<double> t, c, c_prime, alpha, beta, gauge_residual, area;

  int size() const { return rule.size(); }

  /// Interpolation in tau = sqrt(t) through the node polynomial.
  double alpha_at(double tt) const { return rule.interpolate(alpha, std::sqrt(tt)); }
  double beta_at(double tt) const { return rule.interpolate(beta, std::sqrt(tt)); }

  /// Table from explicit alpha/beta node values (no geometry); for oracles
  /// and synthetic studies.
  static PathTable synthetic(int n, const std::function<double(double)>& alpha_of,
                             const std::function<double(double)>& beta_of) {
    PathTable tab;
    tab.rule = ChebyshevRule(n);
    tab.t = tab.rule.t_nodes();
    for (double tt : tab.t) {
      tab.alpha.push_back(alpha_of(tt));
      tab.beta.push_back(beta_of(tt));
    }
    tab.c.assign(n, 1.0);
    tab.c_prime.assign(n, 0.0);
    tab.gauge_residual.assign(n, 0.0);
    tab.area.assign(n, 4.0 * std::numbers::pi);
    return tab;
  }
};

inline constexpr int kMinPathNodes = 9;

inline PathTable build_path_table(const ConformalMetric& m, int n_nodes, double gauge_tol) {
  if (n_nodes < kMinPathNodes)
    throw ConfigurationError("path needs at least " + std::to_string(kMinPathNodes) + " nodes");
  PathTable tab;
  tab.rule = ChebyshevRule(n_nodes);
  tab.t = tab.rule.t_nodes();
  const PathGenerator gen(m);
  for (double tt : tab.t) {
    const PathSample ps = gen.sample(tt, gauge_tol);
    tab.c.push_back(ps.c);
    tab.c_prime.push_back(ps.c_prime);
    tab.alpha.push_back(ps.alpha);
    tab.beta.push_back(ps.beta);
    tab.gauge_residual.push_back(ps.gauge_residual);
    tab.area.push_back(ps.area);
  }
  return tab;
}

}  // namespace qsmass

#pragma once

// Prescribed Gauss curvature on the round sphere: find phi with
//   Delta_o phi + K e^{2 phi} = 1,
// so that e^{2 phi} sigma_o has curvature K. Damped Newton on the
// Galerkin-projected equation; the Jacobian Delta + 2 K e^{2 phi} is
// symmetric and nearly singular along conformal (l = 1) directions, so the
// linear step is a truncated eigen-pseudo-inverse. When the line search
// stalls, the step switches to Levenberg-Marquardt damping, which tends to a
// gradient flow on the residual as the damping grows.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "qsmass/errors.hpp"
#include "qsmass/metric.hpp"
#include "qsmass/sphere_grid.hpp"

namespace qsmass {

struct UniformizationSolution {
  ScalarField phi;  ///< un-normalized: e^{2 phi} sigma_o has curvature K
  double residual_sup = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
};

namespace detail {

/// Real orthonormal basis ordering: l-major; m = 0, then (cos, sin) per m > 0.
inline int real_dim(int lmax) { return (lmax + 1) * (lmax + 1); }

inline Eigen::VectorXd to_real(const Spectrum& s) {
  Eigen::VectorXd v(real_dim(s.lmax));
  int k = 0;
  for (int l = 0; l <= s.lmax; ++l) {
    v[k++] = s(l, 0).real();
    for (int m = 1; m <= l; ++m) {
      v[k++] = s(l, m).real() / std::numbers::sqrt2;
      v[k++] = -s(l, m).imag() / std::numbers::sqrt2;
    }
  }
  return v;
}

inline Spectrum from_real(const Eigen::VectorXd& v, int lmax) {
  Spectrum s(lmax);
  int k = 0;
  for (int l = 0; l <= lmax; ++l) {
    s(l, 0) = v[k++];
    for (int m = 1; m <= l; ++m) {
      const double c = v[k++];
      const double sn = v[k++];
      s(l, m) = std::complex<double>(std::numbers::sqrt2 * c, -std::numbers::sqrt2 * sn);
    }
  }
  return s;
}

inline ScalarField curvature_residual(const ScalarField& phi, const ScalarField& K) {
  const ScalarField lap = laplacian_round(phi);
  ScalarField F(phi.grid());
  for (std::size_t i = 0; i < F.size(); ++i) F[i] = lap[i] + K[i] * std::exp(2.0 * phi[i]) - 1.0;
  return F;
}

}  // namespace detail

/// Solves Delta phi + K e^{2 phi} = 1 to sup-residual `tol`.
inline UniformizationSolution solve_conformal_factor(const ScalarField& K, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ContractViolation("uniformization tolerance must be positive");
  if (!K.all_finite() || !(K.min() > 0.0))
    throw NonPositiveCurvature("prescribed curvature must be positive everywhere (min K = " +
                               std::to_string(K.min()) + ")");
  const GridPtr& g = K.grid();
  const int T = g->truncation();
  const int n = detail::real_dim(T);

  const double meanK = integrate(K) / (4.0 * std::numbers::pi);
  Spectrum coef(T);
  coef(0, 0) = -0.5 * std::log(meanK) * std::sqrt(4.0 * std::numbers::pi);
  Eigen::VectorXd x = detail::to_real(coef);

  auto phi_of = [&](const Eigen::VectorXd& v) { return synthesize(g, detail::from_real(v, T)); };

  ScalarField phi = phi_of(x);
  ScalarField F = detail::curvature_residual(phi, K);
  double res = F.sup_norm();
  UniformizationSolution out;
  out.residual_history.push_back(res);

  // unit basis fields, reused for every Jacobian assembly
  std::vector<std::vector<double>> basis(n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    basis[j] = g->synthesize(detail::from_real(e, T));
  }

  int it = 0;
  while (res > tol) {
    if (it >= max_iter)
      throw SolverDiverged("uniformization did not converge in " + std::to_string(max_iter) +
                               " iterations (residual " + std::to_string(res) + ")",
                           out.residual_history);
    ++it;

    Eigen::MatrixXd J(n, n);
    std::vector<double> q(g->size()), col(g->size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 2.0 * K[i] * std::exp(2.0 * phi[i]);
    for (int j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < q.size(); ++i) col[i] = q[i] * basis[j][i];
      J.col(j) = detail::to_real(g->analyze(col));
    }
    {
      int k = 0;
      for (int l = 0; l <= T; ++l)
        for (int c = 0; c < 2 * l + 1; ++c, ++k) J(k, k) -= static_cast<double>(l) * (l + 1);
    }
    J = 0.5 * (J + J.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const Eigen::MatrixXd& V = eig.eigenvectors();
    const Eigen::VectorXd rhs = V.transpose() * detail::to_real(g->analyze(F.values()));
    const double lam_max = lam.cwiseAbs().maxCoeff();

    auto step_with = [&](double mu) {
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        const double li = lam[i];
        if (mu == 0.0)
          y[i] = (std::abs(li) > 1e-10 * lam_max) ? -rhs[i] / li : 0.0;
        else
          y[i] = -rhs[i] * li / (li * li + mu * mu);
      }
      return Eigen::VectorXd(V * y);
    };

    bool accepted = false;
    auto try_step = [&](const Eigen::VectorXd& dx) {
      double damp = 1.0;
      for (int ls = 0; ls < 12; ++ls, damp *= 0.5) {
        const Eigen::VectorXd xn = x + damp * dx;
        ScalarField pn = phi_of(xn);
        ScalarField Fn = detail::curvature_residual(pn, K);
        const double rn = Fn.sup_norm();
        if (std::isfinite(rn) && rn < res) {
          x = xn;
          phi = std::move(pn);
          F = std::move(Fn);
          res = rn;
          return true;
        }
      }
      return false;
    };

    accepted = try_step(step_with(0.0));
    for (double mu = 1e-3 * lam_max; !accepted && mu <= 1e6 * lam_max; mu *= 10.0)
      accepted = try_step(step_with(mu));
    out.residual_history.push_back(res);
    if (!accepted)
      throw SolverDiverged("uniformization stalled at residual " + std::to_string(res),
                           out.residual_history);
  }
  out.phi = std::move(phi);
  out.residual_sup = res;
  out.iterations = it;
  return out;
}

/// Metric with prescribed curvature K, normalized.
inline ConformalMetric uniformize(const ScalarField& K, double tol, int max_iter) {
  return make_metric(solve_conformal_factor(K, tol, max_iter).phi, 1.0);
}

/// (1 / 4 pi) int x_i e^{2 phi} dmu_o; the Moebius balancing diagnostic.
inline std::array<double, 3> center_of_mass(const ScalarField& phi) {
  const GridPtr& g = phi.grid();
  std::array<double, 3> out{};
  std::vector<double> f(g->size());
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double st = g->sin_theta(i), lam = g->lambda(i);
      const double xc = (c == 0) ? st * std::cos(lam) : (c == 1) ? st * std::sin(lam) : g->cos_theta(i);
      f[i] = xc * std::exp(2.0 * phi[i]);
    }
    out[c] = g->integrate(f) / (4.0 * std::numbers::pi);
  }
  return out;
}

}  // namespace qsmass

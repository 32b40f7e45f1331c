#pragma once

// Path-parameter nodes and quadrature. Nodes are Chebyshev-Lobatto points
// tau_j in [0, 1] and t_j = tau_j^2, so they cluster at t = 0 where beta may
// vanish. Integrals over t are done in tau (dt = 2 tau dtau), which absorbs
// the t^{-1/2} endpoint behaviour of the zeta integrand. All rules here are
// exact for polynomials in tau of degree < n.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "qsmass/errors.hpp"

namespace qsmass {

/// Polynomial in tau in [0, 1] stored as a Chebyshev series in x = 1 - 2 tau.
struct ChebSeries {
  std::vector<double> a;

  double operator()(double tau) const {
    const double x = 1.0 - 2.0 * tau;
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(a.size()) - 1; k >= 1; --k) {
      const double t = 2.0 * x * b1 - b2 + a[k];
      b2 = b1;
      b1 = t;
    }
    return x * b1 - b2 + (a.empty() ? 0.0 : a[0]);
  }

  /// int_0^tau of this series, exactly.
  ChebSeries integral() const {
    const int N = static_cast<int>(a.size()) - 1;
    ChebSeries F;
    F.a.assign(a.size() + 1, 0.0);
    for (int k = 0; k <= N; ++k) {
      if (k == 0) {
        F.a[1] += a[0];
      } else if (k == 1) {
        F.a[2] += a[1] / 4.0;
        F.a[0] += a[1] / 4.0;
      } else {
        F.a[k + 1] += a[k] / (2.0 * (k + 1));
        F.a[k - 1] -= a[k] / (2.0 * (k - 1));
      }
    }
    // dtau = -dx / 2 and the value at tau = 0 (x = 1) is removed
    for (double& c : F.a) c *= -0.5;
    F.a[0] -= F(0.0);
    return F;
  }
};

class ChebyshevRule {
 public:
  explicit ChebyshevRule(int n) : n_(n) {
    if (n < 3) throw ContractViolation("Chebyshev rule needs at least 3 nodes");
    const int N = n - 1;
    tau_.resize(n);
    for (int j = 0; j < n; ++j) tau_[j] = 0.5 * (1.0 - std::cos(std::numbers::pi * j / N));
    tau_[0] = 0.0;
    tau_[N] = 1.0;

    // Clenshaw-Curtis weights on [-1, 1], halved for [0, 1].
    weights_.assign(n, 0.0);
    for (int j = 0; j <= N; ++j) {
      double s = 0.0;
      for (int k = 0; k <= N / 2; ++k) {
        const double bk = (k == 0 || 2 * k == N) ? 1.0 : 2.0;
        s += bk / (1.0 - 4.0 * k * k) * std::cos(2.0 * std::numbers::pi * j * k / N);
      }
      const double cj = (j == 0 || j == N) ? 1.0 : 2.0;
      weights_[j] = 0.5 * cj * s / N;
    }

    // Cumulative integration matrix: (C g)_j = int_0^{tau_j} g.
    cumulative_.assign(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> e(n), col(n);
    for (int i = 0; i < n; ++i) {
      std::fill(e.begin(), e.end(), 0.0);
      e[i] = 1.0;
      cumulative_apply_basis(e, col);
      for (int j = 0; j < n; ++j) cumulative_[static_cast<std::size_t>(j) * n + i] = col[j];
    }

    bary_.resize(n);
    for (int j = 0; j < n; ++j) bary_[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == N) ? 0.5 : 1.0);
  }

  int size() const { return n_; }
  std::span<const double> tau() const { return tau_; }
  double tau(int j) const { return tau_[j]; }
  double t(int j) const { return tau_[j] * tau_[j]; }
  std::vector<double> t_nodes() const {
    std::vector<double> out(n_);
    for (int j = 0; j < n_; ++j) out[j] = t(j);
    return out;
  }
  std::span<const double> weights() const { return weights_; }

  /// int_0^1 g(tau) dtau from node values.
  double integrate(std::span<const double> g) const {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += weights_[j] * g[j];
    return s;
  }

  /// Values of int_0^{tau_j} g at every node.
  std::vector<double> cumulative(std::span<const double> g) const {
    std::vector<double> out(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      double s = 0.0;
      const double* row = &cumulative_[static_cast<std::size_t>(j) * n_];
      for (int i = 0; i < n_; ++i) s += row[i] * g[i];
      out[j] = s;
    }
    return out;
  }

  /// Values of int_{tau_j}^1 g at every node.
  std::vector<double> cumulative_from_end(std::span<const double> g) const {
    std::vector<double> c = cumulative(g);
    const double total = c.back();
    for (double& v : c) v = total - v;
    c.back() = 0.0;
    return c;
  }

  /// Interpolating polynomial of node values as a Chebyshev series.
  ChebSeries fit(std::span<const double> g) const {
    const int N = n_ - 1;
    ChebSeries p;
    p.a.assign(n_, 0.0);
    for (int k = 0; k <= N; ++k) {
      double s = 0.0;
      for (int j = 0; j <= N; ++j) {
        const double cj = (j == 0 || j == N) ? 0.5 : 1.0;
        s += cj * g[j] * std::cos(std::numbers::pi * static_cast<double>(j) * k / N);
      }
      p.a[k] = s * 2.0 / N;
    }
    p.a[0] *= 0.5;
    p.a[N] *= 0.5;
    return p;
  }

  /// Barycentric polynomial interpolation in tau at an arbitrary tau.
  double interpolate(std::span<const double> g, double tau) const {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < n_; ++j) {
      const double d = tau - tau_[j];
      if (d == 0.0) return g[j];
      const double w = bary_[j] / d;
      num += w * g[j];
      den += w;
    }
    return num / den;
  }

 private:
  void cumulative_apply_basis(const std::vector<double>& g, std::vector<double>& out) const {
    const ChebSeries F = fit(g).integral();
    for (int j = 0; j < n_; ++j) out[j] = F(tau_[j]);
    out[0] = 0.0;
  }

  int n_;
  std::vector<double> tau_, weights_, cumulative_, bary_;
};

}  // namespace qsmass

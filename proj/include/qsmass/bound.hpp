#pragma once

// Mass bounds along the conformal path. Every t-integral is evaluated in
// tau = sqrt(t) on the path table's Chebyshev nodes.
//
// For a reparameterization s(t) with s(0) = 1, s' > 0 the general bound is
//   (r/2) [ s(1) - int_0^1 beta s' e^{-int_t^1 alpha s / s'} dt
//           - e^{-int_0^1 alpha s / s'} calH^2 ].
// The choice s = (1 + k Z)^2, Z = int_0^t sqrt(alpha / 4 beta), k = calH,
// collapses it to (r/2) [ (1 + zeta calH)^2 - calH^2 ].

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qsmass/chebyshev.hpp"
#include "qsmass/errors.hpp"
#include "qsmass/metric.hpp"
#include "qsmass/ms_path.hpp"

namespace qsmass {

enum class ReparamFamily { OdeSqrt, AffineDensity, PiecewiseLinear };

inline std::string family_name(ReparamFamily f) {
  switch (f) {
    case ReparamFamily::OdeSqrt: return "ode_sqrt";
    case ReparamFamily::AffineDensity: return "affine_density";
    case ReparamFamily::PiecewiseLinear: return "piecewise_linear";
  }
  return "unknown";
}

namespace detail {

/// zeta integrand in tau: 2 tau sqrt(alpha / (4 beta)) = tau sqrt(alpha / beta).
inline std::vector<double> zeta_integrand(const PathTable& tab) {
  const int n = tab.size();
  std::vector<double> g(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double b = tab.beta[j];
    if (j > 0 && !(b > 0.0))
      throw NonIntegrableZeta("beta = " + std::to_string(b) + " at interior node t = " + std::to_string(tab.t[j]));
    if (j == 0 && b < -1e-8)
      throw NonIntegrableZeta("beta(0) = " + std::to_string(b) + " is negative");
    if (j > 0) g[j] = tab.rule.tau(j) * std::sqrt(std::max(tab.alpha[j], 0.0) / b);
  }
  if (!(tab.beta[0] > 0.0) && n >= 4) {
    // beta(0) = 0: the integrand tends to sqrt(alpha(0) / beta'(0)); take
    // the quadratic extrapolation from the first interior nodes.
    const double x1 = tab.rule.tau(1), x2 = tab.rule.tau(2), x3 = tab.rule.tau(3);
    g[0] = g[1] * (x2 * x3) / ((x1 - x2) * (x1 - x3)) + g[2] * (x1 * x3) / ((x2 - x1) * (x2 - x3)) +
           g[3] * (x1 * x2) / ((x3 - x1) * (x3 - x2));
    g[0] = std::max(g[0], 0.0);
  }
  return g;
}

}  // namespace detail

/// Monotone reparameterization s(t) with s(0) = 1, s' > 0, evaluated in
/// closed form for its family. S(tau) = s(tau^2), so dS/dtau = 2 tau s'(t).
class Reparameterization {
 public:
  struct Knots {
    std::vector<double> t;
    std::vector<double> values;
  };

  ReparamFamily family = ReparamFamily::OdeSqrt;
  double k = 0.0;
  Knots knots;  ///< affine_density: density values; piecewise_linear: s values

  double b() const { return b_; }

  /// Points in tau where S is only finitely smooth, including 0 and 1.
  std::vector<double> breakpoints() const {
    if (family == ReparamFamily::OdeSqrt) return {0.0, 1.0};
    std::vector<double> out;
    for (double t : knots.t) out.push_back(std::sqrt(t));
    return out;
  }

  double S(double tau) const { return s_at(tau * tau); }

  double dS(double tau) const {
    if (family == ReparamFamily::OdeSqrt) return 2.0 * k * (1.0 + k * Z_(tau)) * g_(tau);
    return 2.0 * tau * ds_dt_at(tau * tau);
  }

  double s_at(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    switch (family) {
      case ReparamFamily::OdeSqrt: {
        const double a = 1.0 + k * Z_(std::sqrt(t));
        return a * a;
      }
      case ReparamFamily::AffineDensity: {
        const auto [i, u] = locate(t);
        const double slope = (knots.values[i + 1] - knots.values[i]) / (knots.t[i + 1] - knots.t[i]);
        return 1.0 + aux_[i] + knots.values[i] * u + 0.5 * slope * u * u;
      }
      case ReparamFamily::PiecewiseLinear: {
        const auto [i, u] = locate(t);
        const double h = knots.t[i + 1] - knots.t[i], x = u / h;
        const double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
        const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
        return h00 * knots.values[i] + h10 * h * aux_[i] + h01 * knots.values[i + 1] + h11 * h * aux_[i + 1];
      }
    }
    return 1.0;
  }

  /// s'(t); at t = 0 the one-sided limit (infinite when S'(0) > 0).
  double ds_dt_at(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    if (t == 0.0) return ds_dt0_;
    switch (family) {
      case ReparamFamily::OdeSqrt: {
        const double tau = std::sqrt(t);
        return dS(tau) / (2.0 * tau);
      }
      case ReparamFamily::AffineDensity: {
        const auto [i, u] = locate(t);
        const double slope = (knots.values[i + 1] - knots.values[i]) / (knots.t[i + 1] - knots.t[i]);
        return knots.values[i] + slope * u;
      }
      case ReparamFamily::PiecewiseLinear: {
        const auto [i, u] = locate(t);
        const double h = knots.t[i + 1] - knots.t[i], x = u / h;
        const double dh00 = 6 * x * x - 6 * x, dh10 = 3 * x * x - 4 * x + 1;
        const double dh01 = -6 * x * x + 6 * x, dh11 = 3 * x * x - 2 * x;
        return (dh00 * knots.values[i] + dh01 * knots.values[i + 1]) / h + dh10 * aux_[i] + dh11 * aux_[i + 1];
      }
    }
    return 0.0;
  }

  /// s'(1) from the left.
  double ds_dt_end() const { return ds_dt_at(1.0); }

  /// (t, dt/ds) for s >= 1; t = 1 and dt/ds = 0 beyond s = b.
  std::pair<double, double> t_of_s(double s) const {
    if (s >= b_) return {1.0, 0.0};
    if (s <= 1.0) return {0.0, 1.0 / ds_dt0_};
    double lo = 0.0, hi = 1.0;
    double x = std::sqrt((s - 1.0) / (b_ - 1.0));
    for (int iter = 0; iter < 200; ++iter) {
      const double f = S(x) - s;
      if (f == 0.0) break;
      if (f > 0.0) hi = x; else lo = x;
      const double d = dS(x);
      double xn = (d > 0.0) ? x - f / d : 0.5 * (lo + hi);
      // a Newton step that stalls on x has converged; keep x
      if (xn == x) break;
      if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
      const bool done = std::abs(xn - x) <= 4e-16 * std::max(x, 1e-300) || hi - lo <= 4e-16;
      x = xn;
      if (done) break;
    }
    const double t = x * x;
    return {t, 1.0 / ds_dt_at(t)};
  }

  /// (1 + k Z(t))^2 with Z = int_0^t sqrt(alpha / 4 beta), alpha and beta
  /// taken from the interpolating polynomials of the table in tau.
  static Reparameterization ode_sqrt(const PathTable& tab, double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw InvalidReparameterization("ode_sqrt needs k > 0");
    Reparameterization r;
    r.family = ReparamFamily::OdeSqrt;
    r.k = k;
    const std::vector<double> g = detail::zeta_integrand(tab);
    r.g_ = tab.rule.fit(g);
    r.Z_ = r.g_.integral();
    const double a = 1.0 + k * r.Z_(1.0);
    r.b_ = a * a;
    r.ds_dt0_ = (tab.beta[0] > 0.0) ? k * std::sqrt(std::max(tab.alpha[0], 0.0) / tab.beta[0])
                                    : std::numeric_limits<double>::infinity();
    r.validate();
    return r;
  }

  /// s = 1 + int_0^t rho with rho > 0 piecewise linear in t through
  /// (knot_t[i], density[i]). `k` is a label only.
  static Reparameterization affine_density(double k, std::vector<double> knot_t, std::vector<double> density) {
    check_knots(knot_t, density.size());
    for (double d : density)
      if (!(d > 0.0) || !std::isfinite(d)) throw InvalidReparameterization("affine_density needs positive density");
    Reparameterization r;
    r.family = ReparamFamily::AffineDensity;
    r.k = k;
    r.aux_.assign(knot_t.size(), 0.0);
    for (std::size_t i = 1; i < knot_t.size(); ++i)
      r.aux_[i] = r.aux_[i - 1] + 0.5 * (density[i] + density[i - 1]) * (knot_t[i] - knot_t[i - 1]);
    r.b_ = 1.0 + r.aux_.back();
    r.ds_dt0_ = density.front();
    r.knots = {std::move(knot_t), std::move(density)};
    r.validate();
    return r;
  }

  /// Monotone C^1 cubic in t (weighted harmonic-mean slopes, secant end
  /// slopes) through increasing values s(knot_t[i]) with s(0) = 1.
  static Reparameterization piecewise_monotone(std::vector<double> knot_t, std::vector<double> knot_s) {
    check_knots(knot_t, knot_s.size());
    const std::size_t m = knot_t.size();
    if (knot_s.front() != 1.0) throw InvalidReparameterization("piecewise reparameterization needs s(0) = 1");
    std::vector<double> delta(m - 1), d(m);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      delta[i] = (knot_s[i + 1] - knot_s[i]) / (knot_t[i + 1] - knot_t[i]);
      if (!(delta[i] > 0.0) || !std::isfinite(delta[i]))
        throw InvalidReparameterization("piecewise knot values must increase");
    }
    d[0] = delta[0];
    d[m - 1] = delta[m - 2];
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const double h0 = knot_t[i] - knot_t[i - 1], h1 = knot_t[i + 1] - knot_t[i];
      const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    Reparameterization r;
    r.family = ReparamFamily::PiecewiseLinear;
    r.k = d[0];
    r.b_ = knot_s.back();
    r.ds_dt0_ = d[0];
    r.aux_ = std::move(d);
    r.knots = {std::move(knot_t), std::move(knot_s)};
    r.validate();
    return r;
  }

 private:
  static void check_knots(const std::vector<double>& t, std::size_t nvalues) {
    if (t.size() < 2 || t.size() != nvalues || t.front() != 0.0 || t.back() != 1.0)
      throw InvalidReparameterization("reparameterization knots must span [0, 1]");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1])) throw InvalidReparameterization("reparameterization knots must increase");
  }

  std::pair<std::size_t, double> locate(double t) const {
    const auto& kt = knots.t;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(kt.begin(), kt.end(), t) - kt.begin());
    i = std::clamp<std::size_t>(i, 1, kt.size() - 1) - 1;
    return {i, t - kt[i]};
  }

  void validate() const {
    if (!(ds_dt0_ > 0.0)) throw InvalidReparameterization("s'(0) must be positive");
    if (!(b_ > 1.0) || !std::isfinite(b_)) throw InvalidReparameterization("s(1) must exceed 1");
    const std::vector<double> br = breakpoints();
    constexpr int kProbe = 64;
    for (std::size_t seg = 0; seg + 1 < br.size(); ++seg)
      for (int j = 1; j <= kProbe; ++j) {
        const double tau = br[seg] + (br[seg + 1] - br[seg]) * j / kProbe;
        const double d = dS(tau);
        if (!(d > 0.0) || !std::isfinite(d))
          throw InvalidReparameterization("s'(t) <= 0 at t = " + std::to_string(tau * tau));
      }
  }

  ChebSeries g_, Z_;          // ode_sqrt
  std::vector<double> aux_;   // affine: cumulative integral at knots; piecewise: knot slopes
  double ds_dt0_ = 1.0;
  double b_ = 2.0;
};

/// Composite Clenshaw-Curtis rule in tau whose panels end at the
/// reparameterization's breakpoints, with alpha and beta interpolated from
/// the path table.
class BoundQuadrature {
 public:
  BoundQuadrature(const PathTable& tab, const std::vector<double>& breakpoints)
      : q_(2 * tab.size() + 1), rule_(q_), panels_(breakpoints) {
    for (std::size_t p = 0; p + 1 < panels_.size(); ++p) {
      const double a = panels_[p], h = panels_[p + 1] - panels_[p];
      for (int j = 0; j < q_; ++j) {
        const double tau = (j == q_ - 1) ? panels_[p + 1] : a + h * rule_.tau(j);
        tau_.push_back(tau);
        w_.push_back(h * rule_.weights()[j]);
        alpha_.push_back(std::max(tab.rule.interpolate(tab.alpha, tau), 0.0));
        beta_.push_back(tab.rule.interpolate(tab.beta, tau));
      }
    }
  }

  const std::vector<double>& tau() const { return tau_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& beta() const { return beta_; }
  const std::vector<double>& breakpoints() const { return panels_; }

  double integrate(const std::vector<double>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w_[i] * f[i];
    return s;
  }

  /// int_{tau_i}^1 f at every point.
  std::vector<double> cumulative_from_end(const std::vector<double>& f) const {
    const std::size_t np = panels_.size() - 1;
    std::vector<double> out(f.size());
    double tail = 0.0;
    for (std::size_t p = np; p-- > 0;) {
      const std::size_t off = p * q_;
      const double h = panels_[p + 1] - panels_[p];
      const std::vector<double> seg(f.begin() + off, f.begin() + off + q_);
      const std::vector<double> c = rule_.cumulative_from_end(seg);
      for (int j = 0; j < q_; ++j) out[off + j] = tail + h * c[j];
      tail = out[off];
    }
    return out;
  }

 private:
  int q_;
  ChebyshevRule rule_;
  std::vector<double> panels_;
  std::vector<double> tau_, w_, alpha_, beta_;
};

/// Upper bound for zeta: int_0^1 sqrt(alpha / (4 beta)) dt along the path.
inline double zeta_upper(const PathTable& tab) {
  const std::vector<double> g = detail::zeta_integrand(tab);
  return std::max(tab.rule.integrate(g), 0.0);
}

/// Bracket of the general bound for normalized data (the value without r/2).
inline double bound_general_bracket(const BoundQuadrature& quad, const Reparameterization& rep, double calH_value) {
  const auto& tau = quad.tau();
  const std::size_t n = tau.size();
  std::vector<double> S(n), dS(n), h(n, 0.0), f(n);
  for (std::size_t i = 0; i < n; ++i) {
    S[i] = rep.S(tau[i]);
    dS[i] = rep.dS(tau[i]);
    // alpha s / s' dt, written in tau
    if (tau[i] > 0.0) h[i] = 4.0 * tau[i] * tau[i] * quad.alpha()[i] * S[i] / dS[i];
  }
  const std::vector<double> E = quad.cumulative_from_end(h);
  for (std::size_t i = 0; i < n; ++i) f[i] = quad.beta()[i] * dS[i] * std::exp(-E[i]);
  return rep.b() - quad.integrate(f) - std::exp(-E[0]) * calH_value * calH_value;
}

inline double bound_general_bracket(const PathTable& tab, const Reparameterization& rep, double calH_value) {
  return bound_general_bracket(BoundQuadrature(tab, rep.breakpoints()), rep, calH_value);
}

inline double bound_general(const PathTable& tab, const Reparameterization& rep, const BoundaryData& b) {
  return 0.5 * b.metric.r() * bound_general_bracket(tab, rep, calH(b));
}

struct TheoremBound {
  double value = 0.0;
  double zeta = 0.0;
  double calH = 0.0;
  /// ode_sqrt rep with k = calH; absent when it degenerates (alpha vanishes
  /// at an interior node, e.g. for round metrics).
  std::optional<Reparameterization> rep;
};

inline double theorem_formula(double r, double zeta, double H) {
  const double a = 1.0 + zeta * H;
  return 0.5 * r * (a * a - H * H);
}

inline TheoremBound bound_theorem(const PathTable& tab, const BoundaryData& b) {
  TheoremBound out;
  out.zeta = zeta_upper(tab);
  out.calH = calH(b);
  out.value = theorem_formula(b.metric.r(), out.zeta, out.calH);
  try {
    out.rep = Reparameterization::ode_sqrt(tab, out.calH);
  } catch (const InvalidReparameterization&) {
    out.rep.reset();
  }
  return out;
}

/// The k -> 0 limit of the affine-density family: r / 2.
inline double bound_half_r(const BoundaryData& b) { return 0.5 * b.metric.r(); }

}  // namespace qsmass

#pragma once

// Quasi-spherical extension of Bartnik data along the conformal path.
//
// On M = [1, inf) x S^2 with background ds^2 + s^2 sigma(t(s)), the lapse u
// making u^2 ds^2 + s^2 sigma(t(s)) scalar-flat solves a parabolic equation.
// It is solved here in rho = ln s for v, the lapse relabelled by the gauge
// flow, so every coefficient is a field already produced by the path
// generator:
//
//   dv/drho = (v^2/2) e^{-2w} Lap_o v + v/2 + (s^2/16) |D|^2 t'^2 v
//             - (K/2) v^3 - s t' e^{-2w} <dpsi, dv>_o.
//
// The advection sign follows from u(s, y) = v(s, phi_t(y)); with it the total
// mean curvature computed in either frame agrees (the advection and the w
// drift cancel inside d/ds int v^{-1} e^{2w}).
//
// For s >= b the path has reached the round metric: w = 0, K = 1, t' = 0
// and the background is Euclidean.
//
// Time stepping: Lawson (integrating-factor) Dormand-Prince 5(4). The
// diffusion part with frozen constant coefficient a = mean(v^2 e^{-2w}) / 2
// is integrated exactly in spectral space; the remainder is explicit.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qsmass/bound.hpp"
#include "qsmass/errors.hpp"
#include "qsmass/metric.hpp"
#include "qsmass/ms_path.hpp"
#include "qsmass/sphere_grid.hpp"

namespace qsmass {

struct ExtensionConfig {
  BoundaryData boundary;
  Reparameterization rep;
  double s_max = 1000.0;
  double step_tol = 1e-8;
  double h_max = std::numbers::ln2 / 40.0;  ///< largest step in ln s
  double gauge_tol = 1e-8;
};

/// One accepted step. At the junction s = b the path terms switch off, so
/// one-sided values are kept for both sides.
struct ExtensionSample {
  double s = 1.0;
  double calH = 0.0;  ///< (s / 4 pi) int v^{-1} e^{2w} dmu_o
  double min_v = 0.0;
  double max_v = 0.0;
  double t = 0.0;
  std::array<double, 2> tprime{0.0, 0.0};   ///< dt/ds from the left, from the right
  std::array<double, 2> dcalH2{0.0, 0.0};   ///< d calH^2 / ds from the left, from the right
  double alpha = 0.0;
  double beta = 1.0;
  bool junction = false;  ///< s = b
};

struct MonotonicityReport {
  double worst_residual = std::numeric_limits<double>::infinity();  ///< min over samples
  double worst_s = 1.0;
  double fd_worst_residual = std::numeric_limits<double>::infinity();  ///< same with centred differences
  double q_max_increase = 0.0;  ///< max increase of s - calH^2 / s between samples
  double q_min = 0.0;
  double q_max = 0.0;
};

struct MassFit {
  double mass = 0.0;
  double c1 = 0.0;
  double fit_residual = 0.0;  ///< rms of the fit
  double mass_q = 0.0;        ///< (s - calH^2 / s) / 2 at the last sample
  int samples = 0;
};

struct ExtensionResult {
  std::vector<ExtensionSample> samples;
  double b = 1.0;
  double s_max = 1.0;
  double r = 1.0;       ///< area radius; samples are in normalized units
  double mass = 0.0;    ///< in units of r
  double mass_q = 0.0;  ///< in units of r
  double fit_residual = 0.0;
  double min_v = 0.0;
  int steps = 0;
  int rejected = 0;
  ScalarField v_final;
  MonotonicityReport monotonicity;
};

/// Lapse became non-positive; carries the run up to that point.
class LapseBlowup : public Error {
 public:
  LapseBlowup(const std::string& what, ExtensionResult partial_result)
      : Error("LapseBlowup", what), partial(std::move(partial_result)) {}
  ExtensionResult partial;
};

/// v at s = 1 in the normalized frame: 2 / (r H).
inline ScalarField init_lapse(const BoundaryData& b) {
  if (!(b.H.min() > 0.0)) throw ContractViolation("initial lapse needs H > 0");
  const double r = b.metric.r();
  return b.H.map([r](double h) { return 2.0 / (r * h); });
}

/// Least-squares fit of s - calH = m - c1 / s over s in [lo, hi].
inline MassFit fit_mass(std::span<const double> s, std::span<const double> H, double lo, double hi,
                        int min_samples = 20) {
  double S11 = 0, S12 = 0, S22 = 0, R1 = 0, R2 = 0;
  int n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < lo || s[i] > hi) continue;
    const double x = -1.0 / s[i], y = s[i] - H[i];
    S11 += 1.0;
    S12 += x;
    S22 += x * x;
    R1 += y;
    R2 += x * y;
    ++n;
  }
  if (n < min_samples)
    throw InsufficientTail("mass fit window [" + std::to_string(lo) + ", " + std::to_string(hi) + "] has " +
                           std::to_string(n) + " samples, need " + std::to_string(min_samples));
  const double det = S11 * S22 - S12 * S12;
  MassFit f;
  f.samples = n;
  if (std::abs(det) <= 1e-300 * std::max(1.0, S11 * S22)) {
    f.mass = R1 / S11;
  } else {
    f.mass = (R1 * S22 - R2 * S12) / det;
    f.c1 = (S11 * R2 - S12 * R1) / det;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < lo || s[i] > hi) continue;
    const double e = (s[i] - H[i]) - (f.mass - f.c1 / s[i]);
    ss += e * e;
  }
  f.fit_residual = std::sqrt(ss / n);
  return f;
}

/// Mass from the tail [s_last / 2, s_last] of a series (normalized units).
inline MassFit extract_mass(const std::vector<ExtensionSample>& series) {
  if (series.empty()) throw InsufficientTail("empty series");
  std::vector<double> s, H;
  for (const auto& x : series) {
    s.push_back(x.s);
    H.push_back(x.calH);
  }
  const double smax = s.back();
  MassFit f = fit_mass(s, H, 0.5 * smax, smax);
  f.mass_q = 0.5 * (smax - H.back() * H.back() / smax);
  return f;
}

/// Signed residual of d calH^2/ds >= (1/s - alpha t'^2 s) calH^2 + s beta,
/// scaled by 1/s.
inline double monotonicity_residual(double s, double H, double dH2, double alpha, double tprime, double beta) {
  return (dH2 - (1.0 / s - alpha * tprime * tprime * s) * H * H - s * beta) / s;
}

namespace detail {

/// Three-point derivative of f at sample i using samples lo..hi only
/// (centred inside, one-sided at the ends).
inline double three_point(const std::vector<double>& s, const std::vector<double>& f, std::size_t i,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return (f[hi] - f[lo]) / (s[hi] - s[lo]);
  std::size_t a = (i == lo) ? lo : (i == hi) ? hi - 2 : i - 1;
  const double x0 = s[a], x1 = s[a + 1], x2 = s[a + 2], x = s[i];
  // derivative of the quadratic through the three points, evaluated at x
  const double l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
  const double l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
  const double l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
  return l0 * f[a] + l1 * f[a + 1] + l2 * f[a + 2];
}

}  // namespace detail

inline MonotonicityReport verify_monotonicity(const std::vector<ExtensionSample>& series) {
  MonotonicityReport rep;
  const std::size_t n = series.size();
  if (n >= 3) {
    // finite differences never straddle the junction, where d calH/ds jumps
    std::vector<double> s(n), f(n);
    std::size_t J = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = series[i].s;
      f[i] = series[i].calH * series[i].calH;
      if (series[i].junction && i > 0) J = std::min(J, i);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& x = series[i];
      for (int side = 0; side < 2; ++side) {
        const bool left = (side == 0);
        std::size_t lo = 0, hi = n - 1;
        if (i < J || (i == J && left)) hi = J; else lo = J;
        if (hi == lo) continue;
        const double d = detail::three_point(s, f, i, lo, hi);
        rep.fd_worst_residual =
            std::min(rep.fd_worst_residual, monotonicity_residual(x.s, x.calH, d, x.alpha, x.tprime[side], x.beta));
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = series[i];
    for (int side = 0; side < 2; ++side) {
      const double r = monotonicity_residual(x.s, x.calH, x.dcalH2[side], x.alpha, x.tprime[side], x.beta);
      if (r < rep.worst_residual) {
        rep.worst_residual = r;
        rep.worst_s = x.s;
      }
    }
  }
  if (n > 0) {
    double prev = series[0].s - series[0].calH * series[0].calH / series[0].s;
    rep.q_min = rep.q_max = prev;
    for (std::size_t i = 1; i < n; ++i) {
      const double q = series[i].s - series[i].calH * series[i].calH / series[i].s;
      rep.q_max_increase = std::max(rep.q_max_increase, q - prev);
      rep.q_min = std::min(rep.q_min, q);
      rep.q_max = std::max(rep.q_max, q);
      prev = q;
    }
  }
  return rep;
}

namespace detail {

/// Coefficient fields of the lapse equation at one s.
struct LapseCoefficients {
  double s = 1.0;
  double t = 1.0;
  double tprime = 0.0;
  bool flat = true;  ///< s >= b: Euclidean background
  std::shared_ptr<const PathSample> path;
  ScalarField e2w;   ///< empty when flat
  ScalarField em2w;  ///< empty when flat
};

class LapseOperator {
 public:
  LapseOperator(const BoundaryData& b, const Reparameterization& rep, double gauge_tol)
      : grid_(b.metric.grid()), gen_(b.metric), rep_(rep), gauge_tol_(gauge_tol) {}

  const GridPtr& grid() const { return grid_; }
  double b() const { return rep_.b(); }

  /// `left`: at s = b use the path-side limit.
  LapseCoefficients coefficients(double s, bool left) const {
    LapseCoefficients c;
    c.s = s;
    const double bb = rep_.b();
    if (s > bb || (s == bb && !left)) return c;
    double t, tp;
    if (s >= bb) {
      t = 1.0;
      tp = 1.0 / rep_.ds_dt_end();
    } else {
      std::tie(t, tp) = rep_.t_of_s(s);
    }
    c.flat = false;
    c.t = t;
    c.tprime = tp;
    c.path = sample(t);
    c.e2w = c.path->w.map([](double x) { return std::exp(2.0 * x); });
    c.em2w = c.path->w.map([](double x) { return std::exp(-2.0 * x); });
    return c;
  }

  /// Right side in rho = ln s, from the spectrum of v.
  ScalarField rhs(const LapseCoefficients& c, const Spectrum& vs, ScalarField* v_out = nullptr) const {
    const std::size_t n = grid_->size();
    ScalarField v(grid_), lap(grid_);
    grid_->synthesize(vs, v.values());
    grid_->synthesize(vs, lap.values(), SphereGrid::Deriv::None, 0, true);
    ScalarField out(grid_);
    if (c.flat) {
      for (std::size_t i = 0; i < n; ++i) {
        const double x = v[i];
        out[i] = 0.5 * x * x * lap[i] + 0.5 * x - 0.5 * x * x * x;
      }
    } else {
      ScalarField vt(grid_), vl(grid_);
      grid_->synthesize(vs, vt.values(), SphereGrid::Deriv::Theta);
      grid_->synthesize(vs, vl.values(), SphereGrid::Deriv::None, 1);
      const PathSample& p = *c.path;
      const double s = c.s, tp = c.tprime;
      const double dcoef = s * s / 16.0 * tp * tp;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = v[i];
        const double adv = p.dpsi.theta[i] * vt[i] + p.dpsi.lambda[i] * vl[i] / grid_->sin_theta(i);
        out[i] = 0.5 * x * x * c.em2w[i] * lap[i] + 0.5 * x + dcoef * p.D_norm2[i] * x - 0.5 * p.K[i] * x * x * x -
                 s * tp * c.em2w[i] * adv;
      }
    }
    if (v_out) *v_out = std::move(v);
    return out;
  }

  /// calH_s and d calH^2 / ds for the state v (grid values) with its rho-rate.
  std::pair<double, double> calH_and_rate(const LapseCoefficients& c, const ScalarField& v,
                                          const ScalarField& rate) const {
    const std::size_t n = grid_->size();
    const double s = c.s;
    std::vector<double> f(n), df(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = c.flat ? 1.0 : c.e2w[i];
      const double vs = rate[i] / s;  // dv/ds
      double ws = 0.0;
      if (!c.flat) ws = c.tprime * (-gen_.phi()[i] - 0.5 * c.path->c_prime);
      f[i] = e / v[i];
      df[i] = (-vs / (v[i] * v[i]) + 2.0 * ws / v[i]) * e;
    }
    const double I = grid_->integrate(f), dI = grid_->integrate(df);
    const double H = s * I / (4.0 * std::numbers::pi);
    const double dH = (I + s * dI) / (4.0 * std::numbers::pi);
    return {H, 2.0 * H * dH};
  }

 private:
  std::shared_ptr<const PathSample> sample(double t) const {
    for (const auto& [tt, p] : cache_)
      if (tt == t) return p;
    auto p = std::make_shared<const PathSample>(gen_.sample(t, gauge_tol_));
    cache_.emplace_back(t, p);
    if (cache_.size() > 8) cache_.pop_front();
    return p;
  }

  GridPtr grid_;
  PathGenerator gen_;
  const Reparameterization& rep_;
  double gauge_tol_;
  mutable std::deque<std::pair<double, std::shared_ptr<const PathSample>>> cache_;
};

inline void scale_heat(Spectrum& s, double a, double tau) {
  if (tau == 0.0) return;
  for (int l = 1; l <= s.lmax; ++l) {
    const double f = std::exp(-a * l * (l + 1.0) * tau);
    for (int m = 0; m <= l; ++m) s(l, m) *= f;
  }
}

inline void axpy(Spectrum& y, double a, const Spectrum& x) {
  for (std::size_t i = 0; i < y.c.size(); ++i) y.c[i] += a * x.c[i];
}

}  // namespace detail

/// Integrates the lapse from s = 1 to s_max; returns the normalized-frame
/// series together with the mass in units of the area radius.
inline ExtensionResult evolve(const ExtensionConfig& cfg) {
  const BoundaryData& bd = cfg.boundary;
  const Reparameterization& rep = cfg.rep;
  if (!(cfg.s_max >= 100.0)) throw ConfigurationError("s_max must be at least 100");
  if (!(cfg.s_max > rep.b())) throw ConfigurationError("s_max must exceed b = s(1)");
  if (!(cfg.step_tol > 0.0) || !(cfg.h_max > 0.0)) throw ConfigurationError("step controls must be positive");

  const detail::LapseOperator op(bd, rep, cfg.gauge_tol);
  const GridPtr& g = op.grid();
  const std::size_t n = g->size();

  ExtensionResult res;
  res.b = rep.b();
  res.s_max = cfg.s_max;
  res.r = bd.metric.r();

  // the equation is posed for normalized data: H' = r H
  ScalarField v = init_lapse(bd);
  Spectrum vs = g->analyze(v.values());
  v = synthesize(g, vs);

  const double rho_b = std::log(rep.b());
  const double rho_end = std::log(cfg.s_max);
  double rho = 0.0;
  res.min_v = v.min();

  auto record = [&](double r, const ScalarField& vv, const Spectrum& vsp, bool junction) {
    ExtensionSample x;
    x.s = std::exp(r);
    if (r == rho_end) x.s = cfg.s_max;
    if (r == rho_b) x.s = rep.b();
    x.min_v = vv.min();
    x.max_v = vv.max();
    x.junction = junction;
    for (int side = 0; side < 2; ++side) {
      const bool left = (side == 0);
      if (side == 1 && !junction) {
        x.tprime[1] = x.tprime[0];
        x.dcalH2[1] = x.dcalH2[0];
        break;
      }
      const detail::LapseCoefficients c = op.coefficients(x.s, left || !junction);
      const ScalarField rate = op.rhs(c, vsp);
      const auto [H, dH2] = op.calH_and_rate(c, vv, rate);
      x.calH = H;
      x.dcalH2[side] = dH2;
      x.tprime[side] = c.tprime;
      if (side == 0) {
        x.t = c.flat ? 1.0 : c.t;
        x.alpha = c.flat ? 0.0 : c.path->alpha;
        x.beta = c.flat ? 1.0 : c.path->beta;
      }
    }
    res.samples.push_back(x);
    res.min_v = std::min(res.min_v, x.min_v);
  };
  record(0.0, v, vs, rho_b == 0.0);

  static constexpr double C[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double A[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double B[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
  static constexpr double BH[7] = {5179.0 / 57600, 0.0,          7571.0 / 16695, 393.0 / 640,
                                   -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

  double h = std::min(cfg.h_max, 1e-3);
  const double h_min = 1e-12;
  while (rho < rho_end) {
    const double target = (rho < rho_b) ? rho_b : rho_end;
    const bool to_target = (h >= target - rho);
    const double hs = to_target ? target - rho : h;
    const bool on_path = rho < rho_b;

    // frozen diffusion coefficient
    double a;
    {
      const detail::LapseCoefficients c0 = op.coefficients(std::exp(rho), true);
      std::vector<double> q(n);
      for (std::size_t i = 0; i < n; ++i) q[i] = 0.5 * v[i] * v[i] * (c0.flat ? 1.0 : c0.em2w[i]);
      a = g->integrate(q) / (4.0 * std::numbers::pi);
    }

    std::array<Spectrum, 7> K;
    Spectrum y5;
    bool bad = false;
    for (int st = 0; st < 7; ++st) {
      Spectrum y = vs;
      detail::scale_heat(y, a, C[st] * hs);
      for (int j = 0; j < st; ++j) {
        if (A[st][j] == 0.0) continue;
        Spectrum kj = K[j];
        detail::scale_heat(kj, a, (C[st] - C[j]) * hs);
        detail::axpy(y, hs * A[st][j], kj);
      }
      if (st == 6) y5 = y;
      const double rs = rho + C[st] * hs;
      double s_st = std::exp(rs);
      if (to_target && C[st] == 1.0) s_st = std::exp(target);
      if (on_path && to_target && C[st] == 1.0 && target == rho_b) s_st = rep.b();
      const detail::LapseCoefficients c = op.coefficients(s_st, on_path);
      ScalarField yv;
      ScalarField f = op.rhs(c, y, &yv);
      // subtract the frozen linear part a Lap v
      ScalarField lap(g);
      g->synthesize(y, lap.values(), SphereGrid::Deriv::None, 0, true);
      for (std::size_t i = 0; i < n; ++i) f[i] -= a * lap[i];
      if (!f.all_finite() || !yv.all_finite()) {
        bad = true;
        break;
      }
      K[st] = g->analyze(f.values());
    }

    double err = std::numeric_limits<double>::infinity();
    if (!bad) {
      Spectrum diff(vs.lmax);
      for (int j = 0; j < 7; ++j) {
        const double d = B[j] - BH[j];
        if (d == 0.0) continue;
        Spectrum kj = K[j];
        detail::scale_heat(kj, a, (1.0 - C[j]) * hs);
        detail::axpy(diff, hs * d, kj);
      }
      const std::vector<double> dv = g->synthesize(diff);
      const std::vector<double> vnew = g->synthesize(y5);
      err = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        err = std::max(err, std::abs(dv[i]) / (cfg.step_tol * (1.0 + std::abs(vnew[i]))));
      if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    }

    if (err <= 1.0) {
      vs = std::move(y5);
      v = synthesize(g, vs);
      rho = to_target ? target : rho + hs;
      ++res.steps;
      const bool junction = to_target && target == rho_b;
      if (!(v.min() > 0.0) || !v.all_finite()) {
        res.v_final = v;
        throw LapseBlowup("lapse lost positivity at s = " + std::to_string(std::exp(rho)), std::move(res));
      }
      record(rho, v, vs, junction);
      const double fac = (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (!to_target) h = std::min(cfg.h_max, hs * fac);
      else h = std::min(cfg.h_max, std::max(h, hs) * std::min(fac, 1.0));
    } else {
      ++res.rejected;
      const double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.25;
      h = hs * fac;
      if (h < h_min) {
        res.v_final = v;
        throw StepSizeUnderflow("step size underflow at s = " + std::to_string(std::exp(rho)));
      }
    }
  }

  res.v_final = v;
  const MassFit fit = extract_mass(res.samples);
  res.mass = res.r * fit.mass;
  res.mass_q = res.r * fit.mass_q;
  res.fit_residual = res.r * fit.fit_residual;
  res.monotonicity = verify_monotonicity(res.samples);
  return res;
}

}  // namespace qsmass

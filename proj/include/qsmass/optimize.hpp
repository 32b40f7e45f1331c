#pragma once

// Direct search over low-dimensional reparameterization families. All
// schedules are fixed, so results are reproducible for a given budget.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qsmass/bound.hpp"
#include "qsmass/errors.hpp"
#include "qsmass/ms_path.hpp"

namespace qsmass {

struct SearchResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

/// Golden-section minimization on [lo, hi]. Non-finite values count as +inf.
inline SearchResult golden_section(const std::function<double(double)>& f, double lo, double hi, int max_evals) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  SearchResult best;
  auto eval = [&](double x) {
    double v = f(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.x = {x};
    }
    return v;
  };
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = eval(c), fd = eval(d);
  while (best.evaluations < max_evals && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }
  return best;
}

/// Cyclic coordinate descent: each coordinate gets a short golden-section
/// line search on [x_i - radius, x_i + radius]; the radius halves after every
/// sweep that fails to improve by more than 1e-14.
inline SearchResult coordinate_descent(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x0, double radius, int max_evals,
                                       int evals_per_line = 10) {
  SearchResult best;
  auto eval = [&](const std::vector<double>& x) {
    double v = f(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    ++best.evaluations;
    return v;
  };
  best.x = std::move(x0);
  best.value = eval(best.x);
  while (best.evaluations + evals_per_line <= max_evals && radius > 1e-8) {
    const double before = best.value;
    for (std::size_t i = 0; i < best.x.size() && best.evaluations + evals_per_line <= max_evals; ++i) {
      std::vector<double> trial = best.x;
      const double xi = best.x[i];
      const SearchResult line = golden_section(
          [&](double v) {
            trial[i] = v;
            return f(trial);
          },
          xi - radius, xi + radius, evals_per_line);
      best.evaluations += line.evaluations;
      if (line.value < best.value) {
        best.value = line.value;
        best.x[i] = line.x[0];
      }
    }
    if (!(best.value < before - 1e-14 * std::abs(before))) radius *= 0.5;
  }
  return best;
}

struct FamilyResult {
  ReparamFamily family;
  double value = std::numeric_limits<double>::infinity();  ///< bound in mass units
  std::optional<Reparameterization> rep;
  int evaluations = 0;
};

struct OptimizedBound {
  double value = 0.0;          ///< min over the theorem, r/2 and every searched family
  std::string family;          ///< "ode_sqrt" | "affine_density" | "piecewise_linear" | "half_r"
  std::optional<Reparameterization> rep;  ///< argmin; absent for the r/2 limit
  double theorem = 0.0;
  double half_r = 0.0;
  std::vector<FamilyResult> families;
};

inline constexpr int kFamilyKnots = 6;

namespace detail {

inline std::vector<double> family_knots() {
  std::vector<double> t(kFamilyKnots);
  for (int i = 0; i < kFamilyKnots; ++i) {
    const double tau = static_cast<double>(i) / (kFamilyKnots - 1);
    t[i] = tau * tau;
  }
  t.front() = 0.0;
  t.back() = 1.0;
  return t;
}

}  // namespace detail

/// Searches `family` with `budget` bound evaluations. Candidates with
/// s' <= 0 are rejected as +inf.
inline FamilyResult search_family(const PathTable& tab, const BoundaryData& b, ReparamFamily family, int budget,
                                  const std::optional<Reparameterization>& seed) {
  const double H = calH(b);
  const double half = 0.5 * b.metric.r();
  FamilyResult out{family};
  std::vector<double> panels{0.0, 1.0};
  if (family != ReparamFamily::OdeSqrt)
    for (double t : detail::family_knots()) panels.push_back(std::sqrt(t));
  std::sort(panels.begin(), panels.end());
  panels.erase(std::unique(panels.begin(), panels.end()), panels.end());
  const BoundQuadrature quad(tab, panels);
  auto value_of = [&](const Reparameterization& rep) { return half * bound_general_bracket(quad, rep, H); };
  auto consider = [&](std::optional<Reparameterization> rep) {
    if (!rep) return;
    const double v = value_of(*rep);
    if (std::isfinite(v) && v < out.value) {
      out.value = v;
      out.rep = std::move(rep);
    }
  };

  switch (family) {
    case ReparamFamily::OdeSqrt: {
      auto make = [&](double lnk) -> std::optional<Reparameterization> {
        try {
          return Reparameterization::ode_sqrt(tab, std::exp(lnk));
        } catch (const InvalidReparameterization&) {
          return std::nullopt;
        }
      };
      const double centre = std::log(std::max(H, 1e-12));
      const SearchResult r = golden_section(
          [&](double lnk) {
            auto rep = make(lnk);
            return rep ? value_of(*rep) : std::numeric_limits<double>::infinity();
          },
          centre - 12.0, centre + 6.0, std::max(budget - 1, 2));
      out.evaluations = r.evaluations + 1;
      if (!r.x.empty()) consider(make(r.x[0]));
      consider(make(centre));
      break;
    }
    case ReparamFamily::AffineDensity: {
      const std::vector<double> kt = detail::family_knots();
      auto make = [&](const std::vector<double>& x) -> std::optional<Reparameterization> {
        std::vector<double> dens(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dens[i] = std::exp(x[i]);
        try {
          const double k = dens.front();
          return Reparameterization::affine_density(k, kt, std::move(dens));
        } catch (const InvalidReparameterization&) {
          return std::nullopt;
        }
      };
      std::vector<double> x0(kt.size(), 0.0);
      if (seed)
        for (std::size_t i = 0; i < kt.size(); ++i) {
          const double d = seed->ds_dt_at(kt[i]);
          x0[i] = std::log(std::clamp(std::isfinite(d) ? d : 1e3, 1e-8, 1e3));
        }
      const SearchResult r = coordinate_descent(
          [&](const std::vector<double>& x) {
            auto rep = make(x);
            return rep ? value_of(*rep) : std::numeric_limits<double>::infinity();
          },
          x0, 2.0, budget);
      out.evaluations = r.evaluations;
      consider(make(r.x));
      break;
    }
    case ReparamFamily::PiecewiseLinear: {
      const std::vector<double> kt = detail::family_knots();
      auto make = [&](const std::vector<double>& x) -> std::optional<Reparameterization> {
        std::vector<double> sv(kt.size(), 1.0);
        for (std::size_t i = 0; i < x.size(); ++i) sv[i + 1] = sv[i] + std::exp(x[i]);
        try {
          return Reparameterization::piecewise_monotone(kt, std::move(sv));
        } catch (const InvalidReparameterization&) {
          return std::nullopt;
        }
      };
      std::vector<double> x0(kt.size() - 1);
      for (std::size_t i = 0; i + 1 < kt.size(); ++i) {
        const double lo = seed ? seed->s_at(kt[i]) : 1.0 + kt[i];
        const double hi = seed ? seed->s_at(kt[i + 1]) : 1.0 + kt[i + 1];
        x0[i] = std::log(std::max(hi - lo, 1e-8));
      }
      const SearchResult r = coordinate_descent(
          [&](const std::vector<double>& x) {
            auto rep = make(x);
            return rep ? value_of(*rep) : std::numeric_limits<double>::infinity();
          },
          x0, 2.0, budget);
      out.evaluations = r.evaluations;
      consider(make(r.x));
      break;
    }
  }
  return out;
}

/// Best bound over the closed forms and the requested families.
inline OptimizedBound optimize_s(const PathTable& tab, const BoundaryData& b, const std::vector<ReparamFamily>& families,
                                 int budget) {
  if (budget < 4) throw ConfigurationError("optimizer budget must be at least 4");
  const TheoremBound th = bound_theorem(tab, b);
  OptimizedBound out;
  out.theorem = th.value;
  out.half_r = bound_half_r(b);
  out.value = out.half_r;
  out.family = "half_r";
  if (th.value < out.value) {
    out.value = th.value;
    out.family = "ode_sqrt";
    out.rep = th.rep;
  }
  for (ReparamFamily f : families) {
    FamilyResult fr = search_family(tab, b, f, budget, th.rep);
    if (fr.rep && fr.value < out.value) {
      out.value = fr.value;
      out.family = family_name(f);
      out.rep = fr.rep;
    }
    out.families.push_back(std::move(fr));
  }
  return out;
}

inline OptimizedBound optimize_s(const PathTable& tab, const BoundaryData& b, ReparamFamily family, int budget) {
  return optimize_s(tab, b, std::vector<ReparamFamily>{family}, budget);
}

}  // namespace qsmass

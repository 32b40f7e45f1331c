#pragma once

// Gauss-Legendre x equispaced-longitude discretization of the unit round
// sphere with spherical-harmonic transforms.
//
// Resolution rule: a grid built for band limit L carries
//   N = 2L + 1 colatitude rings (Gauss-Legendre in cos(theta), poles excluded)
//   M = 4L + 2 longitudes
// and its spectral operators keep degrees l <= T = 2L. Quadrature is exact
// for polynomials of degree <= 4L + 1, so the analysis of any field of
// degree <= 2L + 1 is alias-free; in particular products of two band-L
// fields are resolved exactly. Nonlinear fields with content above 2L are
// truncated at T (aliasing enters only through content above 2L + 1).
//
// Harmonic convention: Y_lm = Pbar_l^m(cos theta) e^{i m lambda} with
// Pbar orthonormal on the sphere and no Condon-Shortley phase. A real field
// is stored by its m >= 0 coefficients as f = sum_{l, m>=0} Re(c_lm Y_lm).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qsmass/errors.hpp"

namespace qsmass {

namespace detail {

/// Pairwise (cascade) summation in index order; reproducible for a fixed
/// input ordering.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

/// Gauss-Legendre nodes on [-1, 1] in decreasing order, with weights.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // n == 1 leaves p1 = z, p0 = 1
      const double pn = (n == 1) ? z : p1;
      const double pnm1 = (n == 1) ? 1.0 : p0;
      dp = n * (z * pn - pnm1) / (z * z - 1.0);
      const double dz = pn / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace detail

/// Harmonic coefficients c_lm for 0 <= m <= l <= lmax, packed by l then m.
struct Spectrum {
  int lmax = 0;
  std::vector<std::complex<double>> c;

  Spectrum() = default;
  explicit Spectrum(int lmax_)
      : lmax(lmax_), c(static_cast<std::size_t>((lmax_ + 1) * (lmax_ + 2) / 2)) {}

  static constexpr std::size_t index(int l, int m) {
    return static_cast<std::size_t>(l * (l + 1) / 2 + m);
  }
  std::complex<double>& operator()(int l, int m) { return c[index(l, m)]; }
  const std::complex<double>& operator()(int l, int m) const { return c[index(l, m)]; }
};

class SphereGrid;
using GridPtr = std::shared_ptr<const SphereGrid>;

/// Immutable after construction; share it through GridPtr.
class SphereGrid {
 public:
  static constexpr int kMinBandLimit = 4;

  static GridPtr build(int band_limit) {
    return std::make_shared<const SphereGrid>(band_limit);
  }

  explicit SphereGrid(int band_limit) : L_(band_limit) {
    if (band_limit < kMinBandLimit) {
      throw ConfigurationError("band limit must be >= " + std::to_string(kMinBandLimit) +
                               ", got " + std::to_string(band_limit));
    }
    T_ = 2 * L_;
    nlat_ = 2 * L_ + 1;
    nlon_ = 4 * L_ + 2;

    std::vector<double> gw;
    detail::gauss_legendre(nlat_, cos_theta_, gw);
    theta_.resize(nlat_);
    sin_theta_.resize(nlat_);
    for (int j = 0; j < nlat_; ++j) {
      theta_[j] = std::acos(cos_theta_[j]);
      sin_theta_[j] = std::sin(theta_[j]);
    }
    lat_weight_ = gw;

    lambda_.resize(nlon_);
    for (int k = 0; k < nlon_; ++k) lambda_[k] = 2.0 * std::numbers::pi * k / nlon_;

    weights_.resize(size());
    const double dl = 2.0 * std::numbers::pi / nlon_;
    for (int j = 0; j < nlat_; ++j)
      for (int k = 0; k < nlon_; ++k) weights_[j * nlon_ + k] = gw[j] * dl;

    cosm_.resize(static_cast<std::size_t>(nlon_) * (T_ + 1));
    sinm_.resize(cosm_.size());
    for (int k = 0; k < nlon_; ++k)
      for (int m = 0; m <= T_; ++m) {
        // integer phase reduction keeps the tables exact for large m*k
        const long ph = (static_cast<long>(m) * k) % nlon_;
        const double a = 2.0 * std::numbers::pi * ph / nlon_;
        cosm_[k * (T_ + 1) + m] = std::cos(a);
        sinm_[k * (T_ + 1) + m] = std::sin(a);
      }

    const std::size_t ncoef = Spectrum::index(T_, T_) + 1;
    plm_.assign(static_cast<std::size_t>(nlat_) * ncoef, 0.0);
    dplm_.assign(plm_.size(), 0.0);
    for (int j = 0; j < nlat_; ++j) fill_legendre(j, ncoef);
  }

  int band_limit() const { return L_; }
  /// Highest harmonic degree kept by the spectral operators.
  int truncation() const { return T_; }
  int n_lat() const { return nlat_; }
  int n_lon() const { return nlon_; }
  std::size_t size() const { return static_cast<std::size_t>(nlat_) * nlon_; }

  std::span<const double> ring_theta() const { return theta_; }
  std::span<const double> ring_cos() const { return cos_theta_; }
  std::span<const double> ring_sin() const { return sin_theta_; }
  std::span<const double> longitudes() const { return lambda_; }
  /// Area element dmu_o per node (sums to 4 pi).
  std::span<const double> weights() const { return weights_; }

  double theta(std::size_t i) const { return theta_[i / nlon_]; }
  double lambda(std::size_t i) const { return lambda_[i % nlon_]; }
  double sin_theta(std::size_t i) const { return sin_theta_[i / nlon_]; }
  double cos_theta(std::size_t i) const { return cos_theta_[i / nlon_]; }

  /// Quadrature sum sum_i w_i f_i in a fixed pairwise order.
  double integrate(std::span<const double> f) const {
    std::vector<double> prod(size());
    for (std::size_t i = 0; i < size(); ++i) prod[i] = weights_[i] * f[i];
    return detail::pairwise_sum(prod);
  }

  /// Forward transform truncated at degree `lmax` (default: truncation()).
  Spectrum analyze(std::span<const double> f, int lmax = -1) const {
    if (lmax < 0 || lmax > T_) lmax = T_;
    Spectrum s(lmax);
    const double dl = 2.0 * std::numbers::pi / nlon_;
    std::vector<double> fr(lmax + 1), fi(lmax + 1);
    for (int j = 0; j < nlat_; ++j) {
      std::fill(fr.begin(), fr.end(), 0.0);
      std::fill(fi.begin(), fi.end(), 0.0);
      const double* row = f.data() + static_cast<std::size_t>(j) * nlon_;
      for (int k = 0; k < nlon_; ++k) {
        const double v = row[k];
        const double* cs = &cosm_[k * (T_ + 1)];
        const double* sn = &sinm_[k * (T_ + 1)];
        for (int m = 0; m <= lmax; ++m) {
          fr[m] += v * cs[m];
          fi[m] -= v * sn[m];
        }
      }
      const double* p = &plm_[static_cast<std::size_t>(j) * ncoef()];
      const double wj = lat_weight_[j] * dl;
      for (int m = 0; m <= lmax; ++m) {
        const double eps = (m == 0) ? 1.0 : 2.0;
        const std::complex<double> F(fr[m] * wj * eps, fi[m] * wj * eps);
        for (int l = m; l <= lmax; ++l) s(l, m) += F * p[Spectrum::index(l, m)];
      }
    }
    for (int l = 0; l <= lmax; ++l) s(l, 0).imag(0.0);
    return s;
  }

  /// Which derivative a synthesis produces.
  enum class Deriv { None, Theta };

  /// Backward transform of `s` after multiplying c_lm by
  /// (i m)^lambda_order, optionally by -l(l+1), and optionally using
  /// d/dtheta of the Legendre functions.
  void synthesize(const Spectrum& s, std::span<double> out, Deriv d = Deriv::None,
                  int lambda_order = 0, bool laplace = false) const {
    const int lmax = std::min(s.lmax, T_);
    const std::vector<double>& table = (d == Deriv::Theta) ? dplm_ : plm_;
    std::vector<std::complex<double>> G(lmax + 1);
    for (int j = 0; j < nlat_; ++j) {
      const double* p = &table[static_cast<std::size_t>(j) * ncoef()];
      for (int m = 0; m <= lmax; ++m) {
        std::complex<double> acc(0.0, 0.0);
        for (int l = m; l <= lmax; ++l) {
          const double f = laplace ? -static_cast<double>(l) * (l + 1) : 1.0;
          acc += s(l, m) * (p[Spectrum::index(l, m)] * f);
        }
        // (i m)^order
        switch (lambda_order) {
          case 0: break;
          case 1: acc = std::complex<double>(-acc.imag() * m, acc.real() * m); break;
          case 2: acc *= -static_cast<double>(m) * m; break;
          default: throw ContractViolation("lambda derivative order > 2");
        }
        G[m] = acc;
      }
      double* row = out.data() + static_cast<std::size_t>(j) * nlon_;
      for (int k = 0; k < nlon_; ++k) {
        const double* cs = &cosm_[k * (T_ + 1)];
        const double* sn = &sinm_[k * (T_ + 1)];
        double v = G[0].real();
        for (int m = 1; m <= lmax; ++m) v += G[m].real() * cs[m] - G[m].imag() * sn[m];
        row[k] = v;
      }
    }
  }

  std::vector<double> synthesize(const Spectrum& s) const {
    std::vector<double> out(size());
    synthesize(s, out);
    return out;
  }

 private:
  std::size_t ncoef() const { return Spectrum::index(T_, T_) + 1; }

  void fill_legendre(int j, std::size_t ncoef) {
    const double x = cos_theta_[j];
    const double st = sin_theta_[j];
    double* p = &plm_[static_cast<std::size_t>(j) * ncoef];
    double* dp = &dplm_[static_cast<std::size_t>(j) * ncoef];
    double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    for (int m = 0; m <= T_; ++m) {
      if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st;
      p[Spectrum::index(m, m)] = pmm;
      if (m + 1 <= T_) p[Spectrum::index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * pmm;
      for (int l = m + 2; l <= T_; ++l) {
        const double ll = static_cast<double>(l) * l, mm = static_cast<double>(m) * m;
        const double a = std::sqrt((4.0 * ll - 1.0) / (ll - mm));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - mm) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        p[Spectrum::index(l, m)] =
            a * (x * p[Spectrum::index(l - 1, m)] - b * p[Spectrum::index(l - 2, m)]);
      }
      for (int l = m; l <= T_; ++l) {
        const double prev = (l - 1 >= m) ? p[Spectrum::index(l - 1, m)] : 0.0;
        const double c = std::sqrt((2.0 * l + 1.0) * (static_cast<double>(l) * l - static_cast<double>(m) * m) /
                                   (2.0 * l - 1.0 > 0 ? 2.0 * l - 1.0 : 1.0));
        dp[Spectrum::index(l, m)] = (l * x * p[Spectrum::index(l, m)] - c * prev) / st;
      }
    }
  }

  int L_ = 0, T_ = 0, nlat_ = 0, nlon_ = 0;
  std::vector<double> theta_, cos_theta_, sin_theta_, lat_weight_, lambda_, weights_;
  std::vector<double> cosm_, sinm_;
  std::vector<double> plm_, dplm_;
};

// ---------------------------------------------------------------------------
// Fields

/// Grid-sampled scalar function on the round sphere.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr g, double value = 0.0) : grid_(std::move(g)), v_(grid_->size(), value) {}
  ScalarField(GridPtr g, std::vector<double> values) : grid_(std::move(g)), v_(std::move(values)) {
    if (v_.size() != grid_->size()) throw ContractViolation("field size does not match grid");
  }

  /// Samples f(theta, lambda) at every node.
  static ScalarField from_function(GridPtr g, const std::function<double(double, double)>& f) {
    ScalarField out(g);
    for (std::size_t i = 0; i < g->size(); ++i) out.v_[i] = f(g->theta(i), g->lambda(i));
    return out;
  }

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<const double> values() const { return v_; }
  std::span<double> values() { return v_; }

  double max() const { return *std::max_element(v_.begin(), v_.end()); }
  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double sup_norm() const {
    double s = 0.0;
    for (double x : v_) s = std::max(s, std::abs(x));
    return s;
  }
  bool all_finite() const {
    return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
  }

  template <class F>
  ScalarField map(F&& f) const {
    ScalarField out(grid_);
    for (std::size_t i = 0; i < v_.size(); ++i) out.v_[i] = f(v_[i]);
    return out;
  }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  ScalarField& operator*=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] *= o.v_[i];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (double& x : v_) x *= a;
    return *this;
  }
  ScalarField& operator+=(double a) {
    for (double& x : v_) x += a;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator+(ScalarField a, double s) { return a += s; }

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

/// Covector in the orthonormal frame (e_theta, e_lambda) of the round metric.
struct CovectorField {
  GridPtr grid;
  std::vector<double> theta, lambda;
};

/// Symmetric 2-tensor in the orthonormal frame of the round metric.
struct SymTensorField {
  GridPtr grid;
  std::vector<double> tt, tl, ll;

  explicit SymTensorField(GridPtr g = nullptr)
      : grid(std::move(g)),
        tt(grid ? grid->size() : 0),
        tl(tt.size()),
        ll(tt.size()) {}

  /// Pointwise squared norm with respect to the round metric.
  ScalarField norm2_round() const {
    ScalarField out(grid);
    for (std::size_t i = 0; i < tt.size(); ++i)
      out[i] = tt[i] * tt[i] + 2.0 * tl[i] * tl[i] + ll[i] * ll[i];
    return out;
  }
  ScalarField trace_round() const {
    ScalarField out(grid);
    for (std::size_t i = 0; i < tt.size(); ++i) out[i] = tt[i] + ll[i];
    return out;
  }
};

// ---------------------------------------------------------------------------
// Operators on (Sigma, sigma_o)

inline double integrate(const ScalarField& f) { return f.grid()->integrate(f.values()); }

inline Spectrum analyze(const ScalarField& f) { return f.grid()->analyze(f.values()); }

inline ScalarField synthesize(const GridPtr& g, const Spectrum& s) {
  return ScalarField(g, g->synthesize(s));
}

/// Degree-l coefficients multiplied by -l(l+1).
inline ScalarField laplacian_round(const ScalarField& f) {
  ScalarField out(f.grid());
  f.grid()->synthesize(analyze(f), out.values(), SphereGrid::Deriv::None, 0, true);
  return out;
}

/// Mean-zero solution u of Delta u = f - mean(f).
inline ScalarField inverse_laplacian_round(const ScalarField& f) {
  Spectrum s = analyze(f);
  s(0, 0) = 0.0;
  for (int l = 1; l <= s.lmax; ++l)
    for (int m = 0; m <= l; ++m) s(l, m) /= -static_cast<double>(l) * (l + 1);
  return synthesize(f.grid(), s);
}

inline CovectorField gradient_round(const ScalarField& f) {
  const auto& g = f.grid();
  const Spectrum s = analyze(f);
  CovectorField out{g, std::vector<double>(g->size()), std::vector<double>(g->size())};
  g->synthesize(s, out.theta, SphereGrid::Deriv::Theta);
  g->synthesize(s, out.lambda, SphereGrid::Deriv::None, 1);
  for (std::size_t i = 0; i < g->size(); ++i) out.lambda[i] /= g->sin_theta(i);
  return out;
}

/// Covariant Hessian with respect to the round metric, frame components.
inline SymTensorField hessian_round(const ScalarField& f) {
  const auto& g = f.grid();
  const Spectrum s = analyze(f);
  const std::size_t n = g->size();
  std::vector<double> ft(n), fl(n), fll(n), ftl(n), lap(n);
  g->synthesize(s, ft, SphereGrid::Deriv::Theta);
  g->synthesize(s, fl, SphereGrid::Deriv::None, 1);
  g->synthesize(s, fll, SphereGrid::Deriv::None, 2);
  g->synthesize(s, ftl, SphereGrid::Deriv::Theta, 1);
  g->synthesize(s, lap, SphereGrid::Deriv::None, 0, true);
  SymTensorField h(g);
  for (std::size_t i = 0; i < n; ++i) {
    const double st = g->sin_theta(i), ct = g->cos_theta(i);
    const double cot = ct / st;
    h.ll[i] = fll[i] / (st * st) + cot * ft[i];
    h.tt[i] = lap[i] - h.ll[i];
    h.tl[i] = (ftl[i] - cot * fl[i]) / st;
  }
  return h;
}

/// <a, b> with respect to the round metric.
inline ScalarField dot_round(const CovectorField& a, const CovectorField& b) {
  ScalarField out(a.grid);
  for (std::size_t i = 0; i < a.theta.size(); ++i)
    out[i] = a.theta[i] * b.theta[i] + a.lambda[i] * b.lambda[i];
  return out;
}

/// Evaluates sum Re(c Y_lm) over an explicit (l, m, re, im) list.
struct HarmonicTerm {
  int l = 0;
  int m = 0;
  double re = 0.0;
  double im = 0.0;
};

inline ScalarField field_from_harmonics(const GridPtr& g, std::span<const HarmonicTerm> terms) {
  int lmax = 0;
  for (const auto& t : terms) {
    if (t.l < 0 || t.m < 0 || t.m > t.l)
      throw ConfigurationError("harmonic (l=" + std::to_string(t.l) + ", m=" + std::to_string(t.m) +
                               ") needs 0 <= m <= l");
    lmax = std::max(lmax, t.l);
  }
  if (lmax > g->truncation())
    throw ConfigurationError("harmonic degree " + std::to_string(lmax) +
                             " exceeds grid truncation " + std::to_string(g->truncation()));
  Spectrum s(g->truncation());
  for (const auto& t : terms) s(t.l, t.m) += std::complex<double>(t.re, t.im);
  return synthesize(g, s);
}

}  // namespace qsmass

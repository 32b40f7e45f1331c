#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace qsmass;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(SphereGrid, Shape) {
  auto g = SphereGrid::build(8);
  EXPECT_EQ(g->n_lat(), 17);
  EXPECT_EQ(g->n_lon(), 34);
  EXPECT_EQ(g->truncation(), 16);
  EXPECT_EQ(g->size(), 17u * 34u);
  EXPECT_THROW(SphereGrid::build(3), ConfigurationError);
}

TEST(SphereGrid, QuadratureIsExactForPolynomials) {
  auto g = SphereGrid::build(8);
  auto f = ScalarField::from_function(g, [](double th, double) { return std::cos(th) * std::cos(th); });
  EXPECT_NEAR(integrate(f), 4.0 * kPi / 3.0, 1e-13);
  EXPECT_NEAR(integrate(ScalarField(g, 1.0)), 4.0 * kPi, 1e-13);
  // int x^4 y^2 = 4 pi / 35
  auto h = ScalarField::from_function(g, [](double th, double la) {
    const double x = std::sin(th) * std::cos(la), y = std::sin(th) * std::sin(la);
    return std::pow(x, 4) * y * y;
  });
  EXPECT_NEAR(integrate(h), 4.0 * kPi / 35.0, 1e-13);
}

TEST(SphereGrid, HarmonicsAreOrthonormal) {
  auto g = SphereGrid::build(6);
  for (int l = 0; l <= 5; ++l)
    for (int m = 0; m <= l; ++m) {
      // Re Y_lm has norm 1 for m = 0 and 1/2 otherwise
      const std::vector<HarmonicTerm> t{{l, m, 1.0, 0.0}};
      const ScalarField f = field_from_harmonics(g, t);
      EXPECT_NEAR(integrate(f * f), m == 0 ? 1.0 : 0.5, 1e-12) << l << "," << m;
      const Spectrum s = analyze(f);
      for (int l2 = 0; l2 <= s.lmax; ++l2)
        for (int m2 = 0; m2 <= l2; ++m2) {
          const double want = (l2 == l && m2 == m) ? 1.0 : 0.0;
          EXPECT_NEAR(s(l2, m2).real(), want, 1e-12);
          EXPECT_NEAR(s(l2, m2).imag(), 0.0, 1e-12);
        }
    }
}

TEST(SphereGrid, KnownLowDegreeHarmonics) {
  auto g = SphereGrid::build(5);
  // Y10 = sqrt(3/4pi) cos, Re Y11 = sqrt(3/8pi) sin cos(lambda) without phase
  const std::vector<HarmonicTerm> a{{1, 0, 1.0, 0.0}}, b{{1, 1, 1.0, 0.0}};
  const ScalarField fa = field_from_harmonics(g, a), fb = field_from_harmonics(g, b);
  for (std::size_t i = 0; i < g->size(); ++i) {
    EXPECT_NEAR(fa[i], std::sqrt(3.0 / (4.0 * kPi)) * g->cos_theta(i), 1e-14);
    EXPECT_NEAR(fb[i], std::sqrt(3.0 / (8.0 * kPi)) * g->sin_theta(i) * std::cos(g->lambda(i)), 1e-14);
  }
}

TEST(SphereGrid, TransformRoundTrip) {
  auto g = SphereGrid::build(10);
  const ScalarField f = fixtures::random_phi(g, g->truncation(), 1.0, 1e9, 7);
  const ScalarField back = synthesize(g, analyze(f));
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(back[i], f[i], 1e-12);
}

TEST(SphereGrid, LaplacianEigenvalues) {
  auto g = SphereGrid::build(8);
  for (int l = 0; l <= 6; ++l) {
    const std::vector<HarmonicTerm> t{{l, l / 2, 0.7, -0.2}};
    const ScalarField f = field_from_harmonics(g, t);
    const ScalarField lap = laplacian_round(f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(lap[i], -l * (l + 1.0) * f[i], 1e-11);
  }
}

TEST(SphereGrid, InverseLaplacianRemovesMean) {
  auto g = SphereGrid::build(8);
  ScalarField f = fixtures::random_phi(g, 8, 1.0, 1e9, 3) + 0.5;
  const ScalarField u = inverse_laplacian_round(f);
  EXPECT_NEAR(integrate(u), 0.0, 1e-13);
  const ScalarField lap = laplacian_round(u);
  const double mean = integrate(f) / (4.0 * kPi);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(lap[i], f[i] - mean, 1e-12);
}

// Derivatives of a smooth (not band-limited) function against calculus.
TEST(SphereGrid, GradientMatchesAnalyticDerivative) {
  auto g = SphereGrid::build(16);
  auto F = [](double th, double la) { return std::exp(std::sin(th) * std::cos(la)); };
  const ScalarField f = ScalarField::from_function(g, F);
  const CovectorField d = gradient_round(f);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double th = g->theta(i), la = g->lambda(i), v = F(th, la);
    EXPECT_NEAR(d.theta[i], std::cos(th) * std::cos(la) * v, 1e-10);
    EXPECT_NEAR(d.lambda[i], -std::sin(la) * v, 1e-10);
  }
}

// d/dtheta of the Legendre tables against central differences of an
// independent evaluation through std::assoc_legendre (no Condon-Shortley phase).
TEST(SphereGrid, ThetaDerivativeMatchesFiniteDifference) {
  auto g = SphereGrid::build(6);
  const std::vector<HarmonicTerm> t{{5, 2, 1.0, 0.3}, {3, 0, -0.4, 0.0}, {6, 6, 0.2, 0.1}};
  const ScalarField f = field_from_harmonics(g, t);
  const CovectorField d = gradient_round(f);
  const Spectrum s = analyze(f);
  auto eval = [&](double th, double la) {
    double acc = 0.0;
    for (int l = 0; l <= s.lmax; ++l)
      for (int m = 0; m <= l; ++m) {
        const double nrm =
            std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * std::tgamma(l - m + 1.0) / std::tgamma(l + m + 1.0));
        const double p = nrm * std::assoc_legendre(l, m, std::cos(th));
        const std::complex<double> e(std::cos(m * la), std::sin(m * la));
        acc += (s(l, m) * e).real() * p;
      }
    return acc;
  };
  const double h = 1e-5;
  for (std::size_t i = 0; i < g->size(); i += 7) {
    const double th = g->theta(i), la = g->lambda(i);
    EXPECT_NEAR(eval(th, la), f[i], 1e-12);
    const double fd = (eval(th + h, la) - eval(th - h, la)) / (2.0 * h);
    EXPECT_NEAR(d.theta[i], fd, 1e-8);
  }
}

TEST(SphereGrid, HessianTraceIsLaplacian) {
  auto g = SphereGrid::build(8);
  const ScalarField f = fixtures::random_phi(g, 6, 1.0, 1e9, 11);
  const SymTensorField h = hessian_round(f);
  const ScalarField lap = laplacian_round(f);
  const ScalarField tr = h.trace_round();
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(tr[i], lap[i], 1e-12);
}

// Hess of the height function z = cos(theta) is -z * round metric.
TEST(SphereGrid, HessianOfLinearFunction) {
  auto g = SphereGrid::build(6);
  const ScalarField z = ScalarField::from_function(g, [](double th, double la) {
    return 0.3 * std::cos(th) + std::sin(th) * (0.5 * std::cos(la) - 0.2 * std::sin(la));
  });
  const SymTensorField h = hessian_round(z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(h.tt[i], -z[i], 1e-12);
    EXPECT_NEAR(h.ll[i], -z[i], 1e-12);
    EXPECT_NEAR(h.tl[i], 0.0, 1e-12);
  }
}

TEST(SphereGrid, HarmonicInputValidation) {
  auto g = SphereGrid::build(4);
  const std::vector<HarmonicTerm> bad_m{{2, 3, 1.0, 0.0}}, too_high{{9, 0, 1.0, 0.0}};
  EXPECT_THROW(field_from_harmonics(g, bad_m), ConfigurationError);
  EXPECT_THROW(field_from_harmonics(g, too_high), ConfigurationError);
}

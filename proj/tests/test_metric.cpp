#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "test_support.hpp"

using namespace qsmass;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Metric, NormalizationFixesArea) {
  auto g = SphereGrid::build(8);
  const ScalarField phi = fixtures::random_phi(g, 4, 0.3, 0.8, 1) + 0.4;
  const ConformalMetric m = make_metric(phi, 1.3);
  EXPECT_NEAR(integrate(m.phi().map([](double p) { return std::exp(2.0 * p); })), 4.0 * kPi, 1e-12);
  // the metric itself is unchanged: r^2 e^{2 phi} per node
  for (std::size_t i = 0; i < phi.size(); ++i)
    EXPECT_NEAR(m.r() * m.r() * std::exp(2.0 * m.phi()[i]), 1.3 * 1.3 * std::exp(2.0 * phi[i]), 1e-12);
  EXPECT_NEAR(m.area(), integrate(area_density(m)), 1e-12);
}

TEST(Metric, NormalizationIsIdempotentBitwise) {
  auto g = SphereGrid::build(8);
  const ConformalMetric m = make_metric(fixtures::random_phi(g, 3, 0.3, 0.8, 2) + (-0.1), 2.0);
  const ConformalMetric again = make_metric(m.phi(), m.r());
  const double r1 = m.r(), r2 = again.r();
  EXPECT_EQ(std::memcmp(&r1, &r2, sizeof(double)), 0);
  for (std::size_t i = 0; i < m.phi().size(); ++i) EXPECT_EQ(m.phi()[i], again.phi()[i]);
}

TEST(Metric, RoundCurvature) {
  auto g = SphereGrid::build(6);
  const ConformalMetric m = ConformalMetric::round(g, 2.0);
  const ScalarField K = gauss_curvature(m);
  for (std::size_t i = 0; i < K.size(); ++i) EXPECT_NEAR(K[i], 0.25, 1e-14);
  EXPECT_NEAR(kappa_ratio(m), 1.0, 1e-14);
}

TEST(Metric, GaussBonnet) {
  auto g = SphereGrid::build(12);
  for (unsigned seed : {1u, 2u, 3u}) {
    const ConformalMetric m = make_metric(fixtures::random_phi(g, 4, 0.3, 0.8, seed), 1.7);
    const ScalarField K = gauss_curvature(m);
    EXPECT_NEAR(integrate(K * area_density(m)), 4.0 * kPi, 1e-10);
  }
}

TEST(Metric, KappaUndefinedForNonPositiveCurvature) {
  auto g = SphereGrid::build(8);
  // a large l = 4 bump forces K < 0 somewhere
  const std::vector<HarmonicTerm> t{{4, 0, 1.5, 0.0}};
  const ConformalMetric m = make_metric(field_from_harmonics(g, t), 1.0);
  ASSERT_LT(gauss_curvature(m).min(), 0.0);
  EXPECT_THROW(kappa_ratio(m), NonPositiveCurvature);
}

TEST(Metric, CalHOfRoundConstantData) {
  auto g = SphereGrid::build(6);
  const BoundaryData b(ConformalMetric::round(g, 3.0), ScalarField(g, 0.5));
  // (1 / 8 pi r) * H * 4 pi r^2 = r H / 2
  EXPECT_NEAR(calH(b), 0.75, 1e-14);
}

TEST(Metric, CalHIsScaleInvariant) {
  auto g = SphereGrid::build(8);
  const BoundaryData b = fixtures::perturbed(g, 0.1, true);
  for (double c : {0.5, 3.0}) EXPECT_NEAR(calH(b.scaled(c)), calH(b), 1e-13);
}

TEST(Metric, BoundaryDataRejectsNonPositiveH) {
  auto g = SphereGrid::build(4);
  EXPECT_THROW(BoundaryData(ConformalMetric::round(g), ScalarField(g, 0.0)), ContractViolation);
  EXPECT_THROW(make_metric(ScalarField(g, 0.0), -1.0), ContractViolation);
}

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace qsmass;

TEST(Fillin, UnitRoundSpheres) {
  EXPECT_EQ(lambda_lower_general(3, 1.0, 2.0).lambda_lower, 1.0);
  EXPECT_EQ(lambda_lower_general(4, 1.0, 6.0).lambda_lower, 1.0);
  EXPECT_EQ(lambda_lower_general(5, 2.0, 0.0).lambda_lower, 0.0);
}

TEST(Fillin, ScalingLaw) {
  for (int n : {3, 4, 6})
    for (double c : {0.5, 3.0}) {
      const double base = lambda_lower_general(n, 1.3, 4.2).lambda_lower;
      const double scaled = lambda_lower_general(n, c * 1.3, 4.2 / (c * c)).lambda_lower;
      EXPECT_NEAR(scaled, std::pow(c, n - 2) * base, 1e-12 * scaled);
    }
}

TEST(Fillin, FromMetric) {
  auto g = SphereGrid::build(6);
  EXPECT_NEAR(lambda_lower_from_metric(ConformalMetric::round(g)).lambda_lower, 1.0, 1e-14);
  EXPECT_NEAR(lambda_lower_from_metric(ConformalMetric::round(g, 2.5)).lambda_lower, 2.5, 1e-14);
  const ConformalMetric m = make_metric(fixtures::random_phi(g, 3, 0.3, 0.8, 31), 1.4);
  const FillinBound a = lambda_lower_from_metric(m);
  const FillinBound b = lambda_lower_general(3, m.r(), 2.0 * gauss_curvature(m).min());
  EXPECT_NEAR(a.lambda_lower, b.lambda_lower, 1e-10);
  EXPECT_EQ(a.n, 3);
}

TEST(Fillin, Errors) {
  EXPECT_THROW(lambda_lower_general(2, 1.0, 1.0), ContractViolation);
  EXPECT_THROW(lambda_lower_general(3, 0.0, 1.0), ContractViolation);
  EXPECT_THROW(lambda_lower_general(3, 1.0, -1.0), ContractViolation);
  auto g = SphereGrid::build(8);
  const std::vector<HarmonicTerm> t{{4, 0, 1.5, 0.0}};
  EXPECT_THROW(lambda_lower_from_metric(make_metric(field_from_harmonics(g, t), 1.0)), NegativeCurvature);
}

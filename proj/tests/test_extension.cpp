#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"

using namespace qsmass;

namespace {

// Independent 1D oracle: for round data the lapse is constant on spheres and
// y = v^{-2} solves y' = (1 - y) / s, y(1) = (r H / 2)^2. Classical RK4.
double oracle_v(double H_norm, double s_end) {
  auto f = [](double s, double y) { return (1.0 - y) / s; };
  double s = 1.0, y = 0.25 * H_norm * H_norm;
  const int n = 20000;
  // uniform steps in ln s keep the step relative
  const double dr = std::log(s_end) / n;
  for (int i = 0; i < n; ++i) {
    const double h = s * (std::exp(dr) - 1.0);
    const double k1 = f(s, y), k2 = f(s + h / 2, y + h / 2 * k1), k3 = f(s + h / 2, y + h / 2 * k2),
                 k4 = f(s + h, y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    s += h;
  }
  return 1.0 / std::sqrt(y);
}

ExtensionResult run(const BoundaryData& b, const Reparameterization& rep, double s_max = 1000.0,
                    double tol = 1e-8, double hmax = std::numbers::ln2 / 40.0) {
  ExtensionConfig cfg{b, rep};
  cfg.s_max = s_max;
  cfg.step_tol = tol;
  cfg.h_max = hmax;
  return evolve(cfg);
}

Reparameterization linear_rep() { return Reparameterization::affine_density(1.0, {0.0, 1.0}, {1.0, 1.0}); }

}  // namespace

TEST(Oracle, ClosedFormAgreesWithRk4) {
  for (double H : {1.2, 2.0, 2.6})
    for (double s : {1.5, 10.0, 500.0}) {
      const double closed = 1.0 / std::sqrt(1.0 + (H * H / 4.0 - 1.0) / s);
      EXPECT_NEAR(oracle_v(H, s), closed, 1e-12);
    }
}

TEST(Extension, SchwarzschildFollowsOracle) {
  auto g = SphereGrid::build(8);
  const double m = 0.25;
  const BoundaryData b = fixtures::schwarzschild(g, m);
  const double Hn = b.metric.r() * b.H[0];
  const ExtensionResult res = run(b, linear_rep());
  ASSERT_GT(res.samples.size(), 50u);
  for (std::size_t i = 0; i < res.samples.size(); i += 25) {
    const auto& x = res.samples[i];
    const double v = oracle_v(Hn, x.s);
    EXPECT_NEAR(x.min_v, v, 1e-9);
    EXPECT_NEAR(x.max_v, v, 1e-9);
  }
  EXPECT_NEAR(res.mass, m, 1e-4 * m);
  EXPECT_NEAR(res.mass_q, m, 1e-9);
  EXPECT_NEAR(res.samples.front().calH, calH(b), 1e-10);
  EXPECT_LE(res.monotonicity.q_max_increase, 1e-8);
  EXPECT_NEAR(res.monotonicity.q_max, 2.0 * m, 1e-9);
  EXPECT_NEAR(res.monotonicity.q_min, 2.0 * m, 1e-9);
}

TEST(Extension, EuclideanZero) {
  auto g = SphereGrid::build(8);
  const BoundaryData b(ConformalMetric::round(g), ScalarField(g, 2.0));
  const ExtensionResult res = run(b, linear_rep());
  EXPECT_NEAR(res.mass, 0.0, 1e-6);
  for (std::size_t i = 0; i < res.v_final.size(); ++i) EXPECT_NEAR(res.v_final[i], 1.0, 1e-10);
  for (const auto& x : res.samples) {
    EXPECT_NEAR(x.min_v, 1.0, 1e-10);
    EXPECT_NEAR(x.max_v, 1.0, 1e-10);
  }
}

TEST(Extension, InitialCalHAndScaling) {
  auto g = SphereGrid::build(8);
  const BoundaryData b = fixtures::perturbed(g, 0.1, true);
  const ExtensionResult r1 = run(b, linear_rep());
  EXPECT_NEAR(r1.samples.front().calH, calH(b), 1e-10);
  const ExtensionResult r3 = run(b.scaled(3.0), linear_rep());
  // normalized data agree only to rounding, which moves the adaptive step
  // sequence; the mass then agrees to the integration tolerance
  EXPECT_NEAR(r3.mass, 3.0 * r1.mass, 3e-6);
}

class ExtensionSuite : public ::testing::TestWithParam<std::tuple<double, bool>> {};

TEST_P(ExtensionSuite, MonotoneAndDominated) {
  auto g = SphereGrid::build(8);
  const auto [eps, tilted] = GetParam();
  const BoundaryData b = fixtures::perturbed(g, eps, tilted);
  const PathTable tab = build_path_table(b.metric, 17, 1e-8);
  const TheoremBound th = bound_theorem(tab, b);
  ASSERT_TRUE(th.rep.has_value());
  const ExtensionResult res = run(b, *th.rep);
  EXPECT_GE(res.monotonicity.worst_residual, -1e-5);
  EXPECT_GE(res.monotonicity.fd_worst_residual, -1e-5);
  EXPECT_LE(res.mass, bound_general(tab, *th.rep, b) + 1e-4);
  EXPECT_GT(res.min_v, 0.0);
  EXPECT_LT(res.fit_residual, 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Suite, ExtensionSuite,
                         ::testing::Combine(::testing::Values(0.05, 0.1, 0.2), ::testing::Bool()));

TEST(Extension, RefitWindowAgrees) {
  auto g = SphereGrid::build(8);
  const BoundaryData b = fixtures::perturbed(g, 0.1, true);
  const ExtensionResult res = run(b, linear_rep());
  std::vector<double> s, H;
  for (const auto& x : res.samples) {
    s.push_back(x.s);
    H.push_back(x.calH);
  }
  const double smax = s.back();
  const MassFit late = fit_mass(s, H, 0.5 * smax, smax), early = fit_mass(s, H, 0.25 * smax, 0.5 * smax);
  EXPECT_NEAR(late.mass, early.mass, 1e-4);
}

TEST(Extension, ResolutionAndStepInvariance) {
  const double eps = 0.1;
  auto g8 = SphereGrid::build(8), g16 = SphereGrid::build(16);
  const ExtensionResult base = run(fixtures::perturbed(g8, eps, true), linear_rep());
  const ExtensionResult fine = run(fixtures::perturbed(g16, eps, true), linear_rep());
  const ExtensionResult small = run(fixtures::perturbed(g8, eps, true), linear_rep(), 1000.0, 1e-10,
                                    std::numbers::ln2 / 80.0);
  EXPECT_NEAR(fine.mass, base.mass, 1e-5);
  EXPECT_NEAR(small.mass, base.mass, 1e-5);
}

TEST(Extension, Contracts) {
  auto g = SphereGrid::build(6);
  const BoundaryData b = fixtures::schwarzschild(g, 0.1);
  EXPECT_THROW(run(b, linear_rep(), 50.0), ConfigurationError);
  const Reparameterization far = Reparameterization::affine_density(500.0, {0.0, 1.0}, {500.0, 500.0});
  EXPECT_THROW(run(b, far, 200.0), ConfigurationError);
}

TEST(MassFit, SyntheticModel) {
  std::vector<ExtensionSample> series;
  for (int i = 0; i <= 400; ++i) {
    ExtensionSample x;
    x.s = std::exp(std::log(1000.0) * i / 400.0);
    x.calH = x.s - 0.3 + 0.7 / x.s;
    series.push_back(x);
  }
  const MassFit f = extract_mass(series);
  EXPECT_NEAR(f.mass, 0.3, 1e-10);
  EXPECT_NEAR(f.c1, 0.7, 1e-8);
  EXPECT_LT(f.fit_residual, 1e-10);
}

TEST(MassFit, NeedsTwentyTailSamples) {
  std::vector<double> s, H;
  for (int i = 0; i < 30; ++i) {
    s.push_back(1.0 + i);
    H.push_back(s.back());
  }
  EXPECT_THROW(fit_mass(s, H, 15.0, 30.0), InsufficientTail);
  EXPECT_NO_THROW(fit_mass(s, H, 1.0, 30.0));
  EXPECT_THROW(extract_mass({}), InsufficientTail);
}

TEST(Monotonicity, ResidualFormula) {
  // exact equality case: dH2 = (1/s - a t'^2 s) H^2 + s beta
  const double s = 2.0, H = 1.5, a = 0.1, tp = 0.4, beta = 0.8;
  const double dH2 = (1.0 / s - a * tp * tp * s) * H * H + s * beta;
  EXPECT_NEAR(monotonicity_residual(s, H, dH2, a, tp, beta), 0.0, 1e-15);
  EXPECT_NEAR(monotonicity_residual(s, H, dH2 + 1.0, a, tp, beta), 0.5, 1e-15);
}

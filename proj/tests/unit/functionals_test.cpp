#include <gtest/gtest.h>

#include "kflow/flow_engine.hpp"
#include "kflow/functionals.hpp"
#include "support.hpp"

namespace kflow {
namespace {

using testing::kPi;

Pencil constant_pencil(int n, double a0) {
  const Grid g(n, 8);
  return make_pencil(Background(g, HermitianMatrix::identity(n) * a0),
                     Background(g, HermitianMatrix::identity(n)), ScalarField(g, 1.0));
}

TEST(ExpRateFit, RecoversExactExponential) {
  std::vector<std::pair<double, double>> s;
  for (int k = 0; k <= 40; ++k) s.emplace_back(0.5 * k, 3.0 * std::exp(-0.7 * 0.5 * k));
  const RateFit f = exp_rate_fit(s, 2.0, 12.0);
  EXPECT_NEAR(f.alpha, 0.7, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_NEAR(f.log_prefactor, std::log(3.0), 1e-11);
  EXPECT_EQ(f.points, 21u);
}

TEST(ExpRateFit, RejectsNonPositiveSamples) {
  std::vector<std::pair<double, double>> s{{2.0, 1.0}, {3.0, 0.0}, {4.0, 0.5}};
  EXPECT_THROW(exp_rate_fit(s, 2.0, 12.0), NonPositiveSeries);
}

TEST(NormalizeU, RemovesOmegaWeightedMean) {
  const Grid g(1, 16);
  const ScalarField Omega = testing::sample(g, [](auto x) { return 1.0 + 0.5 * std::cos(2 * kPi * x[0]); });
  const ScalarField phi = testing::sample(g, [](auto x) { return 2.0 + std::cos(2 * kPi * x[0]); });
  const ScalarField u = normalize_u(phi, Omega);
  EXPECT_NEAR(integrate(u * Omega), 0.0, 1e-14);
  // integral(phi Omega) = 2 + 1/4.
  EXPECT_NEAR(phi[0] - u[0], 2.25, 1e-14);
}

TEST(GradientNorm, FlatMetricOneDimension) {
  // |grad f|^2_g = 2 g^{1 1bar} |df/dz|^2 = (f_x^2 + f_y^2) / (2 a) for g = a.
  const Grid g(1, 16);
  const ScalarField f = testing::sample(g, [](auto x) { return std::sin(2 * kPi * x[0]); });
  const HermitianField gm = metric_field(Background(g, HermitianMatrix::scalar(2.0)));
  const ScalarField got = gradient_norm_field(gm, f);
  const ScalarField want = testing::sample(g, [](auto x) {
    const double fx = 2 * kPi * std::cos(2 * kPi * x[0]);
    return fx * fx / 4.0;
  });
  EXPECT_LT(testing::max_diff(got, want), 1e-11);
}

TEST(Energy, SpatiallyConstantStateMatchesScalarValues) {
  // phi = 0 at time t: det = 1 + e^{-t}, phidot = log(1 + e^{-t}).
  const Pencil p = constant_pencil(1, 2.0);
  const double t = 0.7;
  const FlowState s = evaluate_state(FlowKind::kMaf1, p, t, ScalarField(p.grid()), 1e-8);
  const double V = 1.0 + std::exp(-t);
  const EnergyRecord r = make_record(s, p, 0.1);
  EXPECT_NEAR(r.nu, V * std::log(V), 1e-15);
  EXPECT_NEAR(r.nu_logform, r.nu, 1e-15);
  EXPECT_NEAR(r.c_t, V * std::log(V), 1e-15);
  EXPECT_NEAR(r.V_t, V, 1e-15);
  EXPECT_NEAR(r.jensen_floor, V * std::log(V), 1e-15);
  EXPECT_EQ(r.dissipation, 0.0);
  EXPECT_EQ(r.dt_used, 0.1);
}

TEST(Energy, NuLogformDiffersForSecondFlow) {
  const Pencil p = constant_pencil(1, 2.0);
  const FlowState s = evaluate_state(FlowKind::kMaf2, p, 0.0, ScalarField(p.grid(), 0.25), 1e-8);
  EXPECT_NEAR(energy_nu_logform(s, p) - energy_nu(s, p), 0.25 * 2.0, 1e-14);
}

TEST(Energy, DissipationRejectsSingularMetric) {
  const Grid g(1, 16);
  const Pencil p = make_pencil(Background(g, HermitianMatrix::scalar(1.0)),
                               Background(g, HermitianMatrix::scalar(1.0)), ScalarField(g, 1.0));
  FlowState s = evaluate_state(FlowKind::kMaf1, p, 0.0, ScalarField(g), 1e-8);
  s.density[3] = 0.0;
  EXPECT_THROW(dissipation(s), SingularMetric);
}

TEST(EnergySlope, DetectsIncreasingEnergy) {
  const Pencil p = constant_pencil(1, 2.0);
  std::vector<EnergyRecord> good, bad;
  for (int k = 0; k < 10; ++k) {
    EnergyRecord r;
    r.t = 0.1 * k;
    r.nu = std::exp(-r.t);
    good.push_back(r);
    r.nu = 1.0 + r.t;
    bad.push_back(r);
  }
  EXPECT_EQ(energy_slope_check(good, p, 1e-12).violations, 0u);
  const SlopeReport rep = energy_slope_check(bad, p, 1e-12);
  EXPECT_GT(rep.max_violation, 0.0);
  EXPECT_GT(rep.violations, 0u);
}

TEST(SobolevGradient, MaskExcludesSamples) {
  const Grid g(1, 16);
  const Pencil p = make_pencil(Background(g, HermitianMatrix::scalar(1.0)),
                               Background(g, HermitianMatrix::scalar(1.0)),
                               testing::sample(g, [](auto x) { return 1.0 + 0.5 * std::cos(2 * kPi * x[0]); }));
  const FlowState s = evaluate_state(FlowKind::kMaf1, p, 0.0, ScalarField(g), 1e-8);
  SampleMask all(g);
  std::fill(all.excluded.begin(), all.excluded.end(), 1);
  all.excluded[0] = 0;
  EXPECT_GT(sobolev_gradient_sup(s), 0.0);
  // At x = 0 the gradient of log(1 + cos/2) vanishes.
  EXPECT_LT(sobolev_gradient_sup(s, &all), 1e-20);
}

}  // namespace
}  // namespace kflow

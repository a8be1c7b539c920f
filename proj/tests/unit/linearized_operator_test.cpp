#include <gtest/gtest.h>

#include "kflow/kahler_forms.hpp"
#include "kflow/linearized_operator.hpp"
#include "support.hpp"

namespace kflow {
namespace {

using testing::kPi;

TEST(LinearizedMA, FlatMetricActsAsQuarterLaplacianN1) {
  const Grid g(1, 16);
  const LinearizedMA op(metric_field(Background(g, HermitianMatrix::scalar(2.0))));
  const ScalarField x = testing::sample(g, [](auto p) { return std::cos(2 * kPi * (p[0] + p[1])); });
  ScalarField expect = x;
  expect *= -2.0 * kPi * kPi;
  EXPECT_LT(testing::max_diff(op.apply(x), expect), 1e-11);
}

TEST(LinearizedMA, FlatMetricN2UsesAdjugate) {
  // tr(adj(A) H x) with A = diag(2, 3), x = cos(2 pi x1): adj11 = 3, H11 = -pi^2 x.
  const Grid g(2, 8);
  const LinearizedMA op(metric_field(Background(g, HermitianMatrix::two(2.0, 3.0))));
  const ScalarField x = testing::sample(g, [](auto p) { return std::cos(2 * kPi * p[0]); });
  ScalarField expect = x;
  expect *= -3.0 * kPi * kPi;
  EXPECT_LT(testing::max_diff(op.apply(x), expect), 1e-11);
}

TEST(LinearizedMA, SymmetricInOneComplexDimension) {
  std::mt19937_64 rng(5);
  const Grid g(1, 32);
  const LinearizedMA op(metric_field(Background(g, HermitianMatrix::scalar(1.0)),
                                     testing::random_potential(g, rng)));
  const ScalarField a = testing::random_potential(g, rng);
  const ScalarField b = testing::random_potential(g, rng);
  EXPECT_NEAR(integrate(op.apply(a) * b), integrate(a * op.apply(b)), 1e-15);
}

void expect_shifted_solve(int n, int N) {
  std::mt19937_64 rng(17 + n);
  const Grid g(n, N);
  const HermitianMatrix A = HermitianMatrix::identity(n);
  const LinearizedMA op(metric_field(Background(g, A), testing::random_potential(g, rng)));
  ScalarField weight(g, 3.0);
  weight += testing::random_potential(g, rng);
  const ScalarField truth = testing::random_potential(g, rng);
  const ScalarField rhs = weight * truth - op.apply(truth);
  const CgResult r = solve_shifted(op, weight, rhs, {1e-13, 500});
  ASSERT_TRUE(r.converged);
  EXPECT_LT(testing::max_diff(r.x, truth), 1e-11);
}

TEST(Krylov, ShiftedSolveN1) { expect_shifted_solve(1, 32); }
TEST(Krylov, ShiftedSolveN2) { expect_shifted_solve(2, 8); }

TEST(Krylov, MeanZeroSolveRecoversPotential) {
  std::mt19937_64 rng(23);
  for (int n : {1, 2}) {
    const Grid g(n, n == 1 ? 32 : 8);
    const LinearizedMA op(metric_field(Background(g, HermitianMatrix::identity(n)),
                                       testing::random_potential(g, rng)));
    const ScalarField truth = testing::random_potential(g, rng);
    ScalarField rhs = op.apply(truth);
    rhs *= -1.0;
    const CgResult r = solve_mean_zero(op, rhs, {1e-13, 1000});
    ASSERT_TRUE(r.converged) << "n = " << n;
    EXPECT_LT(testing::max_diff(r.x, truth), 1e-10) << "n = " << n;
    EXPECT_NEAR(r.x.mean(), 0.0, 1e-14);
  }
}

}  // namespace
}  // namespace kflow

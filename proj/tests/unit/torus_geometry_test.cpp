#include <gtest/gtest.h>

#include "kflow/spectral.hpp"
#include "kflow/torus_geometry.hpp"
#include "support.hpp"

namespace kflow {
namespace {

using testing::kPi;
using testing::max_diff;
using testing::sample;

TEST(Grid, RejectsUnsupportedShapes) {
  EXPECT_THROW(Grid(3, 16), GeometryError);
  EXPECT_THROW(Grid(1, 12), GeometryError);
  EXPECT_THROW(Grid(1, 4), GeometryError);
  EXPECT_NO_THROW(Grid(2, 8));
}

TEST(Grid, FlatIndexRoundTrip) {
  const Grid g(2, 8);
  for (std::size_t i = 0; i < g.size(); i += 37) {
    EXPECT_EQ(g.flat_index(g.lattice_index(i)), i);
  }
  EXPECT_EQ(g.size(), 8u * 8u * 8u * 8u);
  EXPECT_DOUBLE_EQ(g.coord(g.flat_index({3, 0, 0, 0}), 0), 3.0 / 8.0);
}

TEST(Synth, MatchesPointwiseCosine) {
  const Grid g(1, 32);
  const std::vector<Wave> w{{{2, -1, 0, 0}, 0.7, 0.4}};
  const ScalarField f = synth(g, w);
  const ScalarField ref = sample(g, [](auto x) { return 0.7 * std::cos(2 * kPi * (2 * x[0] - x[1]) + 0.4); });
  EXPECT_LT(max_diff(f, ref), 1e-14);
  EXPECT_NEAR(integrate(f), 0.0, 1e-15);
}

TEST(Synth, RejectsNyquistModes) {
  const Grid g(1, 16);
  const std::vector<Wave> w{{{8, 0, 0, 0}, 1.0, 0.0}};
  EXPECT_THROW(synth(g, w), GeometryError);
}

TEST(Spectral, FirstDerivativeOfTrigPolynomial) {
  const Grid g(1, 32);
  const ScalarField f = sample(g, [](auto x) { return std::sin(2 * kPi * 3 * x[0]) * std::cos(2 * kPi * x[1]); });
  const ScalarField dx = sample(g, [](auto x) {
    return 6 * kPi * std::cos(2 * kPi * 3 * x[0]) * std::cos(2 * kPi * x[1]);
  });
  EXPECT_LT(max_diff(partial(f, 0), dx), 1e-11);
}

TEST(Spectral, HessianOfPlaneWaveN1) {
  // d^2/dz dzbar = Laplacian / 4 in one complex dimension.
  const Grid g(1, 16);
  const ScalarField f = sample(g, [](auto x) { return std::cos(2 * kPi * (x[0] + 2 * x[1])); });
  const HermitianField h = complex_hessian(f);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double expect = -kPi * kPi * 5.0 * f[i];
    worst = std::max(worst, std::abs(h.at(i).a11 - expect));
  }
  EXPECT_LT(worst, 1e-11);
  EXPECT_LT(max_diff(trace_hessian(f), 0.25 * (partial(partial(f, 0), 0) + partial(partial(f, 1), 1))), 1e-10);
}

TEST(Spectral, HessianOffDiagonalN2) {
  const Grid g(2, 8);
  // f = cos(2 pi (x1 + y2)): d2/dz1 dzbar2 = i/4 f_{x1 y2} = -i pi^2 f.
  const ScalarField f = sample(g, [](auto x) { return std::cos(2 * kPi * (x[0] + x[3])); });
  const HermitianField h = complex_hessian(f);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const HermitianMatrix m = h.at(i);
    worst = std::max({worst, std::abs(m.a12.real()), std::abs(m.a12.imag() + kPi * kPi * f[i]),
                      std::abs(m.a11 + kPi * kPi * f[i]), std::abs(m.a22 + kPi * kPi * f[i])});
  }
  EXPECT_LT(worst, 1e-11);
}

TEST(Spectral, HessianHasZeroMeanForPeriodicFields) {
  std::mt19937_64 rng(7);
  const Grid g(2, 8);
  const HermitianField h = complex_hessian(testing::random_potential(g, rng));
  const HermitianMatrix m = h.mean();
  EXPECT_LT(std::abs(m.a11) + std::abs(m.a22) + std::abs(m.a12), 1e-14);
}

TEST(Spectral, NyquistFirstDerivativeVanishes) {
  const Grid g(1, 8);
  const ScalarField f = sample(g, [](auto x) { return std::cos(2 * kPi * 4 * x[0]); });
  EXPECT_LT(partial(f, 0).abs_max(), 1e-14);
}

TEST(ScalarField, ArithmeticAndReductions) {
  const Grid g(1, 8);
  ScalarField a(g, 2.0);
  ScalarField b(g, 0.5);
  a.axpy(2.0, b);
  EXPECT_DOUBLE_EQ(a.mean(), 3.0);
  EXPECT_DOUBLE_EQ((a * b).max(), 1.5);
  EXPECT_THROW(ScalarField(g, std::nan("")), GeometryError);
  EXPECT_THROW(a += ScalarField(Grid(1, 16)), GeometryError);
}

}  // namespace
}  // namespace kflow

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "kflow/torus_geometry.hpp"

namespace kflow::testing {

inline constexpr double kPi = std::numbers::pi;

// Random band-limited potential whose complex Hessian has entries below
// `bound` in absolute value: each of the m modes contributes at most
// pi^2 |k|^2 amplitude.
inline ScalarField random_potential(const Grid& grid, std::mt19937_64& rng, int m = 6,
                                    int kmax = 3, double bound = 0.4) {
  const int d = grid.real_dim();
  std::uniform_int_distribution<int> kd(-kmax, kmax);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<Wave> waves;
  while (static_cast<int>(waves.size()) < m) {
    Wave w;
    int k2 = 0;
    for (int a = 0; a < d; ++a) {
      w.k[static_cast<std::size_t>(a)] = kd(rng);
      k2 += w.k[static_cast<std::size_t>(a)] * w.k[static_cast<std::size_t>(a)];
    }
    if (k2 == 0) continue;
    w.amplitude = (2.0 * ud(rng) - 1.0) * bound / (m * kPi * kPi * k2);
    w.phase = 2.0 * kPi * ud(rng);
    waves.push_back(w);
  }
  return synth(grid, waves);
}

inline ScalarField sample(const Grid& grid, auto&& f) {
  ScalarField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::array<double, 4> x{};
    for (int a = 0; a < grid.real_dim(); ++a) x[static_cast<std::size_t>(a)] = grid.coord(i, a);
    out[i] = f(x);
  }
  return out;
}

inline double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace kflow::testing

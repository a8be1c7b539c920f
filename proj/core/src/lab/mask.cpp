#include "kflow/lab/mask.hpp"

#include <cmath>
#include <sstream>

namespace kflow::lab {

namespace {

constexpr double kMinUnmaskedFraction = 0.1;

// One-dimensional periodic dilation along `axis`; applying it to every axis
// in turn gives the Chebyshev (max-norm) ball.
std::vector<std::uint8_t> dilate_axis(const Grid& grid, const std::vector<std::uint8_t>& in,
                                      int axis, int cells) {
  const int N = grid.resolution();
  std::vector<std::uint8_t> out(in.size(), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!in[i]) continue;
    std::array<int, 4> idx = grid.lattice_index(i);
    const int base = idx[static_cast<std::size_t>(axis)];
    for (int d = -cells; d <= cells; ++d) {
      idx[static_cast<std::size_t>(axis)] = ((base + d) % N + N) % N;
      out[grid.flat_index(idx)] = 1;
    }
  }
  return out;
}

}  // namespace

SampleMask degeneracy_mask(const Background& omega_inf, double tau, double radius) {
  if (!(tau > 0.0)) throw std::invalid_argument("degeneracy_mask: tau must be positive");
  if (!(radius >= 0.0)) throw std::invalid_argument("degeneracy_mask: radius must be >= 0");
  const Grid& grid = omega_inf.grid();
  const ScalarField eig = min_eigenvalue_field(metric_field(omega_inf));

  SampleMask mask(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) mask.excluded[i] = eig[i] < tau ? 1 : 0;

  const int cells = static_cast<int>(std::lround(radius * grid.resolution()));
  if (cells > 0) {
    for (int axis = 0; axis < grid.real_dim(); ++axis) {
      mask.excluded = dilate_axis(grid, mask.excluded, axis, cells);
    }
  }
  if (mask.unmasked_fraction() < kMinUnmaskedFraction) {
    std::ostringstream msg;
    msg << "degeneracy mask keeps only " << mask.unmasked_fraction() * 100.0
        << "% of the samples (tau = " << tau << ", radius = " << radius << ")";
    throw MaskCoversEverything(msg.str());
  }
  return mask;
}

}  // namespace kflow::lab

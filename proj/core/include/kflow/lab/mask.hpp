#pragma once

#include <stdexcept>

#include "kflow/kahler_forms.hpp"

namespace kflow::lab {

class MaskCoversEverything : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Samples where the smallest eigenvalue of omega_inf falls below `tau`,
/// dilated by round(radius * N) cells in the Chebyshev metric. Throws
/// MaskCoversEverything when fewer than 10% of the samples remain.
SampleMask degeneracy_mask(const Background& omega_inf, double tau, double radius);

}  // namespace kflow::lab

#pragma once

// Distances between the normalized flow potential u(t) and the elliptic
// solution psi at the stored checkpoints.

#include <optional>
#include <vector>

#include "kflow/flow_engine.hpp"
#include "kflow/functionals.hpp"

namespace kflow::lab {

struct CheckpointDistance {
  double t = 0.0;
  double sup = 0.0;
  double l2 = 0.0;
  /// Over unmasked samples only (L2 uses the same normalized weight).
  double sup_masked = 0.0;
  double l2_masked = 0.0;
};

struct CompareReport {
  std::vector<CheckpointDistance> distances;
  /// Fit of the masked L2 series on [2, 12]; empty when too few checkpoints fall there.
  std::optional<RateFit> rate_fit;
  /// Whole-torus L1 distance at the last checkpoint.
  double l1_final = 0.0;
  /// sup over unmasked samples of the entries of H(log det g) at the final state.
  std::optional<double> ricci_flat_sup;
  /// Largest increase of the masked L2 series between consecutive checkpoints with t >= 2.
  double monotone_excess = 0.0;
  bool monotone = true;
};

inline constexpr double kRateWindowLo = 2.0;
inline constexpr double kRateWindowHi = 12.0;
inline constexpr double kMonotoneTol = 1e-9;

/// Both u and psi are renormalized to integral(. Omega) = 0 first.
/// `final_metric`, when given, is used for the Ricci-flatness diagnostic.
CompareReport compare_limit(const std::vector<Checkpoint>& checkpoints, const ScalarField& psi,
                            const ScalarField& Omega, const SampleMask& mask,
                            const HermitianField* final_metric = nullptr);

/// sup over kept samples of |entries of H(log det g)|.
double ricci_flat_sup(const HermitianField& g, const SampleMask& mask);

}  // namespace kflow::lab

#pragma once

// Invariant and convergence checks evaluated on a finished run. The first
// group applies to every scenario; the rest run only when listed in the
// scenario's `checks` block, with the listed value as the limit.

#include <optional>
#include <string>
#include <vector>

#include "kflow/flow_engine.hpp"
#include "kflow/lab/compare.hpp"
#include "kflow/lab/scenario.hpp"

namespace kflow::lab {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct EllipticSummary {
  double residual_sup = 0.0;
  double residual_limit = 0.0;
  /// Residual of the last-delta equation over unmasked samples.
  double residual_masked = 0.0;
  double reg_final = 0.0;
  double c_final = 0.0;
  int iterations = 0;
  /// integral(psi Omega).
  double normalization = 0.0;
  /// n = 1: sup |newton - poisson oracle|.
  std::optional<double> oracle_diff;
};

struct CheckInputs {
  const Scenario* scenario = nullptr;
  const Pencil* pencil = nullptr;
  const std::vector<EnergyRecord>* records = nullptr;
  const std::vector<Checkpoint>* checkpoints = nullptr;
  const FlowState* final_state = nullptr;
  const SampleMask* mask = nullptr;
  const CompareReport* compare = nullptr;
  const EllipticSummary* elliptic = nullptr;
  /// Smallest metric eigenvalue over accepted states, when known.
  std::optional<double> min_eigenvalue;
  double eig_floor = 1e-8;
};

/// Real dilogarithm for x in [-1, 1/2].
double dilog(double x);

/// integral_0^T log(1 + a e^{-s}) ds = Li2(-a e^{-T}) - Li2(-a) for a in (-1, 1]:
/// the potential of a spatially constant n = 1 flow with A_inf = 1, A_0 = 1 + a.
double constant_scenario_potential(double a, double T);

std::vector<CheckResult> run_checks(const CheckInputs& in);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace kflow::lab

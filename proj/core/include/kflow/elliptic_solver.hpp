#pragma once

// Direct solution of the limit equation (omega_inf + i ddbar psi)^n = Omega,
// normalized by integral(psi Omega) = 0.
//
// Degenerate targets are approached along the path omega_inf + delta omega_0,
// solving log det(g_delta + H psi) - log Omega = c_delta by damped Newton for
// each delta with the scalar c_delta fixed by mean compatibility.

#include <stdexcept>
#include <vector>

#include "kflow/kahler_forms.hpp"
#include "kflow/linearized_operator.hpp"

namespace kflow {

class SolvabilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PositivityLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {1, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001}.
std::vector<double> degenerate_schedule();
/// {0}.
std::vector<double> kahler_schedule();

struct EllipticOptions {
  std::vector<double> schedule = kahler_schedule();
  /// Residual tolerance for the last delta of the schedule.
  double tol = 1e-11;
  /// Residual tolerance for the intermediate deltas.
  double path_tol = 1e-8;
  int max_iter = 200;
  CgOptions cg{1e-13, 2000};
};

struct EllipticSolution {
  ScalarField psi;
  /// sup |log(det(g_delta + H psi) / Omega) - c_delta| at the last delta.
  double residual_sup = 0.0;
  /// sup |log(det(omega_inf + H psi) / Omega)|, i.e. the delta = 0 equation.
  double residual_limit = 0.0;
  double reg_final = 0.0;
  double c_final = 0.0;
  int iterations = 0;
  /// residual_sup after each Newton iterate of the last delta (entry 0 is the start).
  std::vector<double> history;
};

/// n = 1 only: the equation is linear, 1/4 Laplacian(psi) = Omega - f_inf.
/// Throws SolvabilityError when mean(Omega) and the class volume differ by
/// more than 1e-10.
ScalarField poisson_oracle_n1(const Background& omega_inf, const ScalarField& Omega);

/// `regularizer` is the form added along the path (omega_0 for a pencil).
EllipticSolution newton_ma_solve(const Background& omega_inf, const Background& regularizer,
                                 const ScalarField& Omega, const EllipticOptions& options = {});

/// sup over kept samples of |log(det(omega_inf + H psi) / Omega)|; +infinity
/// if a kept density is <= 0. A null mask keeps every sample.
double residual(const Background& omega_inf, const ScalarField& psi, const ScalarField& Omega,
                const SampleMask* mask = nullptr);

}  // namespace kflow

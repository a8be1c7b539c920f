#pragma once

// Time integration of the parabolic Monge-Ampere flows
//
//   MAF1: d phi/dt = log(det(omega_t + H phi) / Omega),          phi(0) = 0
//   MAF2: d phi/dt = log(det(omega_t + H phi) / Omega) - phi,    phi(0) = 0
//
// with positivity guarding, step-size control and checkpointing. Two steppers
// are provided: classical explicit RK4 and a four-stage linearly implicit
// Rosenbrock scheme (Shampine's ROS4 parameters with an embedded third-order
// error estimate) whose stage systems are solved matrix-free by PCG.

#include <optional>
#include <string>
#include <vector>

#include "kflow/flow_state.hpp"
#include "kflow/functionals.hpp"
#include "kflow/kahler_forms.hpp"
#include "kflow/linearized_operator.hpp"

namespace kflow {

enum class Integrator { kRk4, kRosenbrock };

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& s);

enum class Termination { kReachedEnd, kPositivityBreakdown, kStepUnderflow };

std::string to_string(Termination termination);

/// min(0.25 / N^2, 1e-2).
double default_dt0(int N);
/// {0, 1, 2, 4, 8, 12, 16, 20} up to t_end, plus t_end.
std::vector<double> default_checkpoint_times(double t_end);

struct FlowConfig {
  explicit FlowConfig(Pencil p);

  Pencil pencil;
  FlowKind kind = FlowKind::kMaf1;
  Integrator integrator = Integrator::kRk4;
  double t_end = 20.0;
  double dt0;
  double dt_min;
  double dt_max;
  double eig_floor = 1e-8;
  /// Step reduction factor applied on a failed trial or step.
  double safety = 0.5;
  /// Record diagnostics every this many accepted steps (and at every checkpoint).
  int record_every = 1;
  std::vector<double> checkpoint_times;
  /// Sup-norm local error tolerance of the Rosenbrock stepper.
  double error_tol = 1e-9;
  CgOptions cg;
  /// Starting potential; the flows start from 0 unless this is set.
  std::optional<ScalarField> initial_phi;

  /// Throws std::invalid_argument unless 0 < dt_min <= dt0 <= dt_max,
  /// t_end > 0, eig_floor > 0 and 0 < safety < 1.
  void validate() const;
};

struct Checkpoint {
  double t = 0.0;
  ScalarField phi;
};

struct FlowStats {
  long accepted_steps = 0;
  long rejected_steps = 0;
  long cg_iterations = 0;
  /// max over records of |integral det(g) - det(A_t)|.
  double max_class_volume_error = 0.0;
  /// min over accepted states of the smallest metric eigenvalue.
  double min_eigenvalue = 0.0;
};

struct FlowTrace {
  std::vector<EnergyRecord> records;
  std::vector<Checkpoint> checkpoints;
  Termination termination = Termination::kReachedEnd;
  std::optional<FlowState> final_state;
  FlowStats stats;
  std::string message;
};

/// Right-hand side of the flow at (t, phi). Throws PositivityError when any
/// density is <= 0.
ScalarField rhs(FlowKind kind, const Pencil& pencil, double t, const ScalarField& phi);

/// Full state at (t, phi): metric, density and right-hand side. Throws
/// PositivityError if the density is <= 0 or the smallest eigenvalue is
/// <= eig_floor anywhere.
FlowState evaluate_state(FlowKind kind, const Pencil& pencil, double t, const ScalarField& phi,
                         double eig_floor);

FlowState initial_state(const FlowConfig& config);

/// Classical four-stage explicit Runge-Kutta step.
FlowState step_rk4(const FlowState& state, double dt, const FlowConfig& config);

struct RosenbrockResult {
  FlowState state;
  /// Sup norm of the embedded error estimate.
  double error = 0.0;
  int cg_iterations = 0;
};

/// One linearly implicit step with the Jacobian frozen at `state`.
/// Throws PositivityError on a stage breach and std::runtime_error when a
/// stage solve does not converge.
RosenbrockResult step_rosenbrock(const FlowState& state, double dt, const FlowConfig& config);

/// Step size accepted by the trial test: the explicit stage phi + dt phidot
/// must keep the smallest eigenvalue above eig_floor and move phi by at most
/// 0.5 in sup norm. dt_max is tried first; otherwise the search starts at the
/// proposal (clamped to [dt_min, dt_max]) and shrinks by `safety`. Proposals
/// below dt_min return dt_min.
double adapt_dt(const FlowState& state, double proposed_dt, const FlowConfig& config);

FlowTrace run_flow(const FlowConfig& config);

}  // namespace kflow

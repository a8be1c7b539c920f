#include "kflow/flow_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kflow {

namespace {

// Shampine's ROS4 parameter set (gamma = 1/2) with its embedded
// third-order solution.
struct Ros4 {
  static constexpr double gamma = 0.5;
  static constexpr double a21 = 2.0, a31 = 48.0 / 25.0, a32 = 6.0 / 25.0;
  static constexpr double c21 = -8.0, c31 = 372.0 / 25.0, c32 = 12.0 / 5.0;
  static constexpr double c41 = -112.0 / 125.0, c42 = -54.0 / 125.0, c43 = -2.0 / 5.0;
  static constexpr double b1 = 19.0 / 9.0, b2 = 0.5, b3 = 25.0 / 108.0, b4 = 125.0 / 108.0;
  static constexpr double e1 = 17.0 / 54.0, e2 = 7.0 / 36.0, e3 = 0.0, e4 = 125.0 / 108.0;
  static constexpr double d1 = 0.5, d2 = -1.5, d3 = 121.0 / 50.0, d4 = 29.0 / 250.0;
  static constexpr double c2 = 1.0, c3 = 3.0 / 5.0;
};

constexpr double kMaxIncrement = 0.5;

ScalarField log_ratio(const ScalarField& density, const ScalarField& Omega, FlowKind kind,
                      const ScalarField& phi) {
  ScalarField out(density.grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::log(density[i] / Omega[i]);
  }
  if (kind == FlowKind::kMaf2) out -= phi;
  return out;
}

void require_positive_density(const ScalarField& density, double t) {
  const double m = density.min();
  if (!(m > 0.0)) {
    std::ostringstream msg;
    msg << "density " << m << " is not positive at t = " << t;
    throw PositivityError(msg.str(), m);
  }
}

double min_eigenvalue(const HermitianField& g) { return min_eigenvalue_field(g).min(); }

// Trial metric of the explicit stage phi + dt phidot at time t + dt.
bool trial_passes(const FlowState& state, double dt, const FlowConfig& config) {
  if (dt * state.phidot.abs_max() > kMaxIncrement) return false;
  ScalarField trial = state.phi;
  trial.axpy(dt, state.phidot);
  const HermitianField g = metric_field(reference_form_at(config.pencil, state.t + dt), trial);
  return min_eigenvalue(g) > config.eig_floor;
}

bool reached(double t, double target) { return t >= target - 1e-12 * std::max(1.0, target); }

}  // namespace

std::string to_string(Integrator integrator) {
  return integrator == Integrator::kRk4 ? "rk4" : "rosenbrock";
}

Integrator integrator_from_string(const std::string& s) {
  if (s == "rk4") return Integrator::kRk4;
  if (s == "rosenbrock") return Integrator::kRosenbrock;
  throw std::invalid_argument("unknown integrator '" + s + "' (expected rk4 or rosenbrock)");
}

std::string to_string(Termination termination) {
  switch (termination) {
    case Termination::kReachedEnd:
      return "reached_T_end";
    case Termination::kPositivityBreakdown:
      return "positivity_breakdown";
    case Termination::kStepUnderflow:
      return "step_underflow";
  }
  return "unknown";
}

double default_dt0(int N) { return std::min(0.25 / (static_cast<double>(N) * N), 1e-2); }

std::vector<double> default_checkpoint_times(double t_end) {
  std::vector<double> out;
  for (double t : {0.0, 1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0}) {
    if (t < t_end) out.push_back(t);
  }
  out.push_back(t_end);
  return out;
}

FlowConfig::FlowConfig(Pencil p)
    : pencil(std::move(p)),
      dt0(default_dt0(pencil.grid().resolution())),
      dt_min(1e-10),
      dt_max(0.25),
      checkpoint_times(default_checkpoint_times(t_end)) {
  integrator = Integrator::kRosenbrock;
}

void FlowConfig::validate() const {
  if (!(dt_min > 0.0 && dt_min <= dt0 && dt0 <= dt_max)) {
    throw std::invalid_argument("flow config: need 0 < dt_min <= dt0 <= dt_max");
  }
  if (!(t_end > 0.0)) throw std::invalid_argument("flow config: t_end must be positive");
  if (!(eig_floor > 0.0)) throw std::invalid_argument("flow config: eig_floor must be positive");
  if (!(safety > 0.0 && safety < 1.0)) {
    throw std::invalid_argument("flow config: safety must lie in (0, 1)");
  }
  if (record_every < 1) throw std::invalid_argument("flow config: record_every must be >= 1");
  if (!(error_tol > 0.0)) throw std::invalid_argument("flow config: error_tol must be positive");
  if (initial_phi && !(initial_phi->grid() == pencil.grid())) {
    throw std::invalid_argument("flow config: initial potential lives on a different grid");
  }
}

ScalarField rhs(FlowKind kind, const Pencil& pencil, double t, const ScalarField& phi) {
  const HermitianField g = metric_field(reference_form_at(pencil, t), phi);
  const ScalarField density = ma_density(g);
  require_positive_density(density, t);
  return log_ratio(density, pencil.Omega, kind, phi);
}

FlowState evaluate_state(FlowKind kind, const Pencil& pencil, double t, const ScalarField& phi,
                         double eig_floor) {
  HermitianField g = metric_field(reference_form_at(pencil, t), phi);
  ScalarField density = ma_density(g);
  require_positive_density(density, t);
  const double m = min_eigenvalue(g);
  if (!(m > eig_floor)) {
    std::ostringstream msg;
    msg << "smallest metric eigenvalue " << m << " at or below floor " << eig_floor
        << " at t = " << t;
    throw PositivityError(msg.str(), m);
  }
  ScalarField phidot = log_ratio(density, pencil.Omega, kind, phi);
  return FlowState{t, phi, std::move(phidot), std::move(g), std::move(density), 0};
}

FlowState initial_state(const FlowConfig& config) {
  const ScalarField phi = config.initial_phi ? *config.initial_phi : ScalarField(config.pencil.grid());
  return evaluate_state(config.kind, config.pencil, 0.0, phi, config.eig_floor);
}

FlowState step_rk4(const FlowState& state, double dt, const FlowConfig& config) {
  const auto stage = [&](double t, const ScalarField& phi) {
    return evaluate_state(config.kind, config.pencil, t, phi, config.eig_floor).phidot;
  };
  const ScalarField& k1 = state.phidot;
  ScalarField y = state.phi;
  y.axpy(0.5 * dt, k1);
  const ScalarField k2 = stage(state.t + 0.5 * dt, y);
  y = state.phi;
  y.axpy(0.5 * dt, k2);
  const ScalarField k3 = stage(state.t + 0.5 * dt, y);
  y = state.phi;
  y.axpy(dt, k3);
  const ScalarField k4 = stage(state.t + dt, y);

  ScalarField next = state.phi;
  next.axpy(dt / 6.0, k1);
  next.axpy(dt / 3.0, k2);
  next.axpy(dt / 3.0, k3);
  next.axpy(dt / 6.0, k4);
  FlowState out = evaluate_state(config.kind, config.pencil, state.t + dt, next, config.eig_floor);
  out.step_count = state.step_count + 1;
  return out;
}

RosenbrockResult step_rosenbrock(const FlowState& state, double dt, const FlowConfig& config) {
  using R = Ros4;
  const Pencil& pencil = config.pencil;
  const FlowKind kind = config.kind;
  const double t = state.t;

  // Jacobian at the current state: J x = L_g x / det(g) (- x for MAF2).
  // Each stage solves (1/(gamma dt) - J) k = b, multiplied through by det(g).
  const LinearizedMA op(state.metric);
  const double shift = 1.0 / (R::gamma * dt) + (kind == FlowKind::kMaf2 ? 1.0 : 0.0);
  const ScalarField weight = shift * state.density;

  // d f / dt at fixed phi: -e^{-t} tr(adj(g) chi) / det(g).
  ScalarField ft = mixed_density(state.metric, metric_field(pencil.chi));
  for (std::size_t i = 0; i < ft.size(); ++i) ft[i] *= -std::exp(-t) / state.density[i];

  int cg_iterations = 0;
  const auto solve = [&](ScalarField b) {
    for (std::size_t i = 0; i < b.size(); ++i) b[i] *= state.density[i];
    CgResult r = solve_shifted(op, weight, b, config.cg);
    cg_iterations += r.iterations;
    if (!r.converged) {
      std::ostringstream msg;
      msg << "stage solve did not converge (relative residual " << r.relative_residual << ")";
      throw std::runtime_error(msg.str());
    }
    return std::move(r.x);
  };
  const auto f_at = [&](double time, const ScalarField& phi) {
    return rhs(kind, pencil, time, phi);
  };

  ScalarField b = state.phidot;
  b.axpy(dt * R::d1, ft);
  const ScalarField g1 = solve(b);

  ScalarField y = state.phi;
  y.axpy(R::a21, g1);
  b = f_at(t + R::c2 * dt, y);
  b.axpy(dt * R::d2, ft);
  b.axpy(R::c21 / dt, g1);
  const ScalarField g2 = solve(b);

  y = state.phi;
  y.axpy(R::a31, g1);
  y.axpy(R::a32, g2);
  const ScalarField f3 = f_at(t + R::c3 * dt, y);
  b = f3;
  b.axpy(dt * R::d3, ft);
  b.axpy(R::c31 / dt, g1);
  b.axpy(R::c32 / dt, g2);
  const ScalarField g3 = solve(b);

  b = f3;
  b.axpy(dt * R::d4, ft);
  b.axpy(R::c41 / dt, g1);
  b.axpy(R::c42 / dt, g2);
  b.axpy(R::c43 / dt, g3);
  const ScalarField g4 = solve(b);

  ScalarField next = state.phi;
  next.axpy(R::b1, g1);
  next.axpy(R::b2, g2);
  next.axpy(R::b3, g3);
  next.axpy(R::b4, g4);
  ScalarField err(state.phi.grid());
  err.axpy(R::e1, g1);
  err.axpy(R::e2, g2);
  err.axpy(R::e3, g3);
  err.axpy(R::e4, g4);

  RosenbrockResult out{evaluate_state(kind, pencil, t + dt, next, config.eig_floor), err.abs_max(),
                       cg_iterations};
  out.state.step_count = state.step_count + 1;
  return out;
}

double adapt_dt(const FlowState& state, double proposed_dt, const FlowConfig& config) {
  if (trial_passes(state, config.dt_max, config)) return config.dt_max;
  double dt = std::clamp(proposed_dt, config.dt_min, config.dt_max);
  while (dt > config.dt_min) {
    if (trial_passes(state, dt, config)) return dt;
    dt = std::max(dt * config.safety, config.dt_min);
  }
  return config.dt_min;
}

FlowTrace run_flow(const FlowConfig& config) {
  config.validate();
  FlowTrace trace;

  std::vector<double> stops;
  for (double t : config.checkpoint_times) {
    if (t >= 0.0 && t <= config.t_end) stops.push_back(t);
  }
  stops.push_back(config.t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  std::vector<bool> is_checkpoint(stops.size(), false);
  for (std::size_t k = 0; k < stops.size(); ++k) {
    is_checkpoint[k] = std::find(config.checkpoint_times.begin(), config.checkpoint_times.end(),
                                 stops[k]) != config.checkpoint_times.end();
  }

  std::optional<FlowState> start;
  try {
    start = initial_state(config);
  } catch (const PositivityError& e) {
    trace.termination = Termination::kPositivityBreakdown;
    trace.message = e.what();
    return trace;
  }
  FlowState state = std::move(*start);

  const auto record = [&](const FlowState& s, double dt_used) {
    const EnergyRecord r = make_record(s, config.pencil, dt_used, config.eig_floor);
    trace.stats.max_class_volume_error =
        std::max(trace.stats.max_class_volume_error, std::abs(integrate(s.density) - r.V_t));
    trace.records.push_back(r);
  };

  trace.stats.min_eigenvalue = min_eigenvalue(state.metric);
  record(state, 0.0);
  std::size_t next_stop = 0;
  if (reached(state.t, stops[0])) {
    if (is_checkpoint[0]) trace.checkpoints.push_back({state.t, state.phi});
    next_stop = 1;
  }

  double dt = config.dt0;
  while (next_stop < stops.size()) {
    const double target = stops[next_stop];
    double trial = config.integrator == Integrator::kRk4 ? adapt_dt(state, dt, config)
                                                         : std::min(dt, adapt_dt(state, dt, config));
    bool landing = false;
    if (state.t + trial >= target - 1e-12 * std::max(1.0, target)) {
      trial = target - state.t;
      landing = true;
    }

    double error = 0.0;
    std::optional<FlowState> next;
    try {
      if (config.integrator == Integrator::kRk4) {
        next = step_rk4(state, trial, config);
      } else {
        RosenbrockResult r = step_rosenbrock(state, trial, config);
        trace.stats.cg_iterations += r.cg_iterations;
        error = r.error;
        if (error <= config.error_tol) next = std::move(r.state);
      }
    } catch (const PositivityError& e) {
      trace.message = e.what();
    } catch (const std::runtime_error& e) {
      trace.message = e.what();
    }

    if (!next) {
      ++trace.stats.rejected_steps;
      double shrink = config.safety;
      if (error > 0.0) shrink = std::clamp(0.9 * std::pow(config.error_tol / error, 1.0 / 3.0), 0.2, 0.9);
      if (trial <= config.dt_min) {
        trace.termination = Termination::kStepUnderflow;
        break;
      }
      dt = std::max(trial * shrink, config.dt_min);
      continue;
    }

    state = std::move(*next);
    state.t = landing ? target : state.t;
    ++trace.stats.accepted_steps;
    trace.stats.min_eigenvalue = std::min(trace.stats.min_eigenvalue, min_eigenvalue(state.metric));

    if (config.integrator == Integrator::kRosenbrock) {
      const double grow =
          error > 0.0 ? std::clamp(0.9 * std::pow(config.error_tol / error, 0.25), 0.2, 4.0) : 4.0;
      const double proposal = trial * grow;
      dt = landing ? std::max(dt, proposal) : proposal;
    } else if (!landing) {
      dt = trial;
    }
    dt = std::clamp(dt, config.dt_min, config.dt_max);

    if (landing || state.step_count % config.record_every == 0) record(state, trial);
    if (landing) {
      if (is_checkpoint[next_stop]) trace.checkpoints.push_back({state.t, state.phi});
      ++next_stop;
    }
  }
  if (next_stop >= stops.size()) {
    trace.termination = Termination::kReachedEnd;
    trace.message.clear();
  }
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace kflow

#pragma once

// Scalar diagnostics evaluated along a flow: the normalized potential, the
// energy functional nu, its dissipation, c(t), the energy-slope inequality and
// exponential-rate fits.

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kflow/flow_state.hpp"
#include "kflow/kahler_forms.hpp"

namespace kflow {

struct EnergyRecord {
  double t = 0.0;
  /// Integral of phidot * det(g).
  double nu = 0.0;
  /// Integral of log(det(g) / Omega) * det(g); equals nu for MAF1.
  double nu_logform = 0.0;
  double dissipation = 0.0;
  double min_phidot = 0.0;
  double max_phidot = 0.0;
  double c_t = 0.0;
  double V_t = 0.0;
  double jensen_floor = 0.0;
  double dt_used = 0.0;
};

struct RateFit {
  double alpha = 0.0;
  double r2 = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double log_prefactor = 0.0;
  std::size_t points = 0;
};

class SingularMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveSeries : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical floor callers clip rate-fit series to.
inline constexpr double kSeriesFloor = 1e-15;

/// u = phi - integral(phi Omega).
ScalarField normalize_u(const ScalarField& phi, const ScalarField& Omega);

double energy_nu(const FlowState& state, const Pencil& pencil);
double energy_nu_logform(const FlowState& state, const Pencil& pencil);

/// Pointwise |grad f|^2_g = 2 sum g^{j kbar} d_j f dbar_k f.
ScalarField gradient_norm_field(const HermitianField& g, const ScalarField& f);

/// Integral of |grad phidot|^2_g det(g). Throws SingularMetric when any
/// determinant is <= eig_floor.
double dissipation(const FlowState& state, double eig_floor = 1e-8);

/// Integral of phidot * det(g).
double c_of_t(const FlowState& state);

EnergyRecord make_record(const FlowState& state, const Pencil& pencil, double dt_used,
                         double eig_floor = 1e-8);

/// Which gradient norm the slope check subtracts. The metric (Kahler)
/// convention g^{j kbar} d_j f dbar_k f is half of the recorded dissipation.
enum class GradientConvention { kKahler, kRiemannian };

struct SlopeReport {
  /// Proof-assembled constant C*.
  double c_star = 0.0;
  /// max_k of slope_k + D_k - C* e^{-t_k}, clipped at 0.
  double max_violation = 0.0;
  std::size_t worst_interval = 0;
  /// Intervals whose excess is above `tol`.
  std::size_t violations = 0;
  std::vector<double> excess;
};

/// Checks (nu_{k+1} - nu_k)/(t_{k+1} - t_k) <= -D_k + C* e^{-t_k} + tol on
/// consecutive records, with
/// C* = max_t |n[chi][omega_t]^{n-1}| + sup|phidot| max_t n[omega_0 + omega_inf][omega_t]^{n-1}.
SlopeReport energy_slope_check(std::span<const EnergyRecord> records, const Pencil& pencil,
                               double tol = 0.0,
                               GradientConvention convention = GradientConvention::kKahler);

/// Least-squares line through (t, log y) for t in [t_lo, t_hi]; alpha = -slope.
RateFit exp_rate_fit(std::span<const std::pair<double, double>> series, double t_lo, double t_hi);

/// Sup over kept samples of |grad phidot|^2_g; a null mask keeps every sample.
double sobolev_gradient_sup(const FlowState& state, const SampleMask* mask = nullptr);

}  // namespace kflow

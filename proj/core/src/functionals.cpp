#include "kflow/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kflow {

std::string to_string(FlowKind kind) { return kind == FlowKind::kMaf1 ? "MAF1" : "MAF2"; }

FlowKind flow_kind_from_string(const std::string& s) {
  if (s == "MAF1" || s == "maf1") return FlowKind::kMaf1;
  if (s == "MAF2" || s == "maf2") return FlowKind::kMaf2;
  throw std::invalid_argument("unknown flow kind '" + s + "' (expected MAF1 or MAF2)");
}

ScalarField normalize_u(const ScalarField& phi, const ScalarField& Omega) {
  ScalarField u = phi;
  u += -integrate(phi * Omega);
  return u;
}

double energy_nu(const FlowState& state, const Pencil& /*pencil*/) { return c_of_t(state); }

double energy_nu_logform(const FlowState& state, const Pencil& pencil) {
  const ScalarField& det = state.density;
  double s = 0.0;
  for (std::size_t i = 0; i < det.size(); ++i) {
    s += std::log(det[i] / pencil.Omega[i]) * det[i];
  }
  return s * det.grid().weight();
}

ScalarField gradient_norm_field(const HermitianField& g, const ScalarField& f) {
  const ComplexVectorField dz = spectral_gradient_z(f);
  ScalarField out(f.grid());
  if (g.n() == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = 2.0 * std::norm(dz.at(i, 0)) / g.d11[i];
    }
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::complex<double> v1 = dz.at(i, 0);
    const std::complex<double> v2 = dz.at(i, 1);
    const std::complex<double> g12(g.re12[i], g.im12[i]);
    const double det = g.d11[i] * g.d22[i] - std::norm(g12);
    const double quad =
        g.d22[i] * std::norm(v1) + g.d11[i] * std::norm(v2) - 2.0 * (g12 * std::conj(v1) * v2).real();
    out[i] = 2.0 * quad / det;
  }
  return out;
}

double dissipation(const FlowState& state, double eig_floor) {
  const ScalarField& det = state.density;
  if (det.min() <= eig_floor) {
    std::ostringstream msg;
    msg << "dissipation: metric determinant " << det.min() << " at or below floor " << eig_floor;
    throw SingularMetric(msg.str());
  }
  const ScalarField norm = gradient_norm_field(state.metric, state.phidot);
  return integrate(norm * det);
}

double c_of_t(const FlowState& state) { return integrate(state.phidot * state.density); }

EnergyRecord make_record(const FlowState& state, const Pencil& pencil, double dt_used,
                         double eig_floor) {
  EnergyRecord r;
  r.t = state.t;
  r.c_t = c_of_t(state);
  r.nu = r.c_t;
  r.nu_logform = energy_nu_logform(state, pencil);
  r.dissipation = dissipation(state, eig_floor);
  r.min_phidot = state.phidot.min();
  r.max_phidot = state.phidot.max();
  r.V_t = (pencil.omega_inf.A + pencil.chi.A * std::exp(-state.t)).det();
  r.jensen_floor = r.V_t * std::log(r.V_t);
  r.dt_used = dt_used;
  return r;
}

SlopeReport energy_slope_check(std::span<const EnergyRecord> records, const Pencil& pencil,
                               double tol, GradientConvention convention) {
  if (records.size() < 2) {
    throw std::invalid_argument("energy_slope_check: need at least two records");
  }
  const HermitianMatrix& a_chi = pencil.chi.A;
  const HermitianMatrix positive = pencil.omega0.A + pencil.omega_inf.A;
  double chi_term = 0.0;
  double positive_term = 0.0;
  double sup_phidot = 0.0;
  for (const EnergyRecord& r : records) {
    const HermitianMatrix a_t = pencil.omega_inf.A + a_chi * std::exp(-r.t);
    chi_term = std::max(chi_term, std::abs(mixed_class_pairing(a_chi, a_t)));
    positive_term = std::max(positive_term, mixed_class_pairing(positive, a_t));
    sup_phidot = std::max({sup_phidot, std::abs(r.min_phidot), std::abs(r.max_phidot)});
  }

  SlopeReport report;
  report.c_star = chi_term + sup_phidot * positive_term;
  const double factor = convention == GradientConvention::kKahler ? 0.5 : 1.0;
  report.excess.reserve(records.size() - 1);
  for (std::size_t k = 0; k + 1 < records.size(); ++k) {
    const EnergyRecord& a = records[k];
    const EnergyRecord& b = records[k + 1];
    const double slope = (b.nu - a.nu) / (b.t - a.t);
    const double bound = -factor * a.dissipation + report.c_star * std::exp(-a.t);
    const double excess = slope - bound;
    report.excess.push_back(excess);
    if (excess > report.max_violation) {
      report.max_violation = excess;
      report.worst_interval = k;
    }
    if (excess > tol) ++report.violations;
  }
  return report;
}

RateFit exp_rate_fit(std::span<const std::pair<double, double>> series, double t_lo, double t_hi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, y] : series) {
    if (t < t_lo || t > t_hi) continue;
    if (!(y > 0.0)) {
      std::ostringstream msg;
      msg << "exp_rate_fit: non-positive value " << y << " at t = " << t;
      throw NonPositiveSeries(msg.str());
    }
    pts.emplace_back(t, std::log(y));
  }
  if (pts.size() < 4) {
    throw std::invalid_argument("exp_rate_fit: need at least 4 points in the window");
  }
  const double m = static_cast<double>(pts.size());
  double st = 0.0, sy = 0.0;
  for (const auto& [t, ly] : pts) {
    st += t;
    sy += ly;
  }
  const double tbar = st / m;
  const double ybar = sy / m;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (const auto& [t, ly] : pts) {
    stt += (t - tbar) * (t - tbar);
    sty += (t - tbar) * (ly - ybar);
    syy += (ly - ybar) * (ly - ybar);
  }
  RateFit fit;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.points = pts.size();
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  fit.alpha = -slope;
  fit.log_prefactor = ybar - slope * tbar;
  if (syy <= 1e-300) {
    fit.r2 = 1.0;
  } else {
    double sse = 0.0;
    for (const auto& [t, ly] : pts) {
      const double e = ly - (fit.log_prefactor + slope * t);
      sse += e * e;
    }
    fit.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
  }
  return fit;
}

double sobolev_gradient_sup(const FlowState& state, const SampleMask* mask) {
  const ScalarField norm = gradient_norm_field(state.metric, state.phidot);
  double sup = 0.0;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    if (mask != nullptr && !mask->keeps(i)) continue;
    sup = std::max(sup, norm[i]);
  }
  return sup;
}

}  // namespace kflow

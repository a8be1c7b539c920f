#include "kflow/lab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kflow::lab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Always-on thresholds.
constexpr double kBracketTol = 1e-10;
constexpr double kJensenTol = 1e-8;
constexpr double kBoundTol = 1e-12;
constexpr double kSlopeLimit = 1e-6;

CheckResult below(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

double sup_phidot(const EnergyRecord& r) {
  return std::max(std::abs(r.min_phidot), std::abs(r.max_phidot));
}

std::string at_time(double t) {
  std::ostringstream s;
  s << "worst at t = " << t;
  return s.str();
}

// Largest inf of phidot over records with t <= T (as a running minimum).
double inf_phidot_until(const std::vector<EnergyRecord>& recs, double T) {
  double m = std::numeric_limits<double>::infinity();
  for (const EnergyRecord& r : recs) {
    if (r.t <= T + 1e-12) m = std::min(m, r.min_phidot);
  }
  return m;
}

double trapezoid(const std::vector<EnergyRecord>& recs, double t_lo) {
  double s = 0.0;
  for (std::size_t k = 1; k < recs.size(); ++k) {
    if (recs[k - 1].t < t_lo - 1e-12) continue;
    s += 0.5 * (recs[k].t - recs[k - 1].t) * (recs[k].dissipation + recs[k - 1].dissipation);
  }
  return s;
}

void always_on(const CheckInputs& in, std::vector<CheckResult>& out) {
  const auto& recs = *in.records;

  double worst_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < recs.size(); ++k) worst_gap = std::min(worst_gap, recs[k].t - recs[k - 1].t);
  out.push_back({"records_increasing", recs.size() < 2 || worst_gap > 0.0,
                 recs.size() < 2 ? 0.0 : worst_gap, 0.0, "smallest time gap between records"});

  double min_dis = std::numeric_limits<double>::infinity();
  double bracket = 0.0, jensen = 0.0, bound = 0.0;
  double t_bracket = 0.0, t_jensen = 0.0, t_bound = 0.0;
  double max_v = 0.0;
  for (const EnergyRecord& r : recs) max_v = std::max(max_v, r.V_t);
  for (const EnergyRecord& r : recs) {
    min_dis = std::min(min_dis, r.dissipation);
    const double lo = r.min_phidot * r.V_t - r.c_t;
    const double hi = r.c_t - r.max_phidot * r.V_t;
    if (std::max(lo, hi) > bracket) {
      bracket = std::max(lo, hi);
      t_bracket = r.t;
    }
    // Both forms of nu are held to the floor; they coincide for MAF1.
    const double j = r.jensen_floor - std::min(r.nu, r.nu_logform);
    if (j > jensen) {
      jensen = j;
      t_jensen = r.t;
    }
    const double b = std::abs(r.nu) - sup_phidot(r) * max_v;
    if (b > bound) {
      bound = b;
      t_bound = r.t;
    }
  }
  out.push_back({"dissipation_nonnegative", min_dis >= 0.0, min_dis, 0.0, "smallest dissipation"});
  out.push_back(below("mean_value_bracket", bracket, kBracketTol,
                      "min_phidot V_t <= c_t <= max_phidot V_t; " + at_time(t_bracket)));
  out.push_back(below("jensen_floor", jensen, kJensenTol,
                      "V_t log V_t - nu; " + at_time(t_jensen)));
  out.push_back(below("nu_bounded", bound, kBoundTol,
                      "|nu| - sup|phidot| max V_t; " + at_time(t_bound)));

  if (recs.size() >= 2) {
    const SlopeReport rep = energy_slope_check(recs, *in.pencil, 0.0);
    std::ostringstream d;
    d << "C* = " << rep.c_star << "; worst interval starts at t = " << recs[rep.worst_interval].t;
    out.push_back(below("energy_slope", rep.max_violation, kSlopeLimit, d.str()));
  }

  if (in.min_eigenvalue) {
    out.push_back({"positivity", *in.min_eigenvalue > in.eig_floor, *in.min_eigenvalue,
                   in.eig_floor, "smallest metric eigenvalue over accepted states"});
  }
}

}  // namespace

double dilog(double x) {
  if (x < -1.0 || x > 0.5) throw std::domain_error("dilog: argument outside [-1, 1/2]");
  if (x < -0.5) {
    // Landen: Li2(x) = -Li2(x / (x - 1)) - log(1 - x)^2 / 2, with x / (x - 1) in (1/3, 1/2].
    const double l = std::log1p(-x);
    return -dilog(x / (x - 1.0)) - 0.5 * l * l;
  }
  double sum = 0.0;
  double p = x;
  for (int k = 1; k < 200; ++k) {
    const double term = p / (static_cast<double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-18) break;
    p *= x;
  }
  return sum;
}

double constant_scenario_potential(double a, double T) {
  if (!(a > -1.0 && a <= 1.0)) throw std::domain_error("constant_scenario_potential: a outside (-1, 1]");
  return dilog(-a * std::exp(-T)) - dilog(-a);
}

std::vector<CheckResult> run_checks(const CheckInputs& in) {
  std::vector<CheckResult> out;
  const Scenario& s = *in.scenario;
  const auto& recs = *in.records;
  always_on(in, out);

  const auto limit = [&](const char* name, double fallback) { return check_limit(s, name, fallback); };

  if (has_check(s, "stationary_zero")) {
    double worst = 0.0;
    for (const EnergyRecord& r : recs) {
      worst = std::max({worst, std::abs(r.nu), std::abs(r.nu_logform), std::abs(r.dissipation),
                        std::abs(r.c_t), sup_phidot(r)});
    }
    out.push_back(below("stationary_zero", worst, limit("stationary_zero", 1e-13),
                        "largest |nu|, |D|, |c_t|, |phidot| over all records"));
  }

  if (has_check(s, "constant_oracle") && in.checkpoints && !in.checkpoints->empty()) {
    const Checkpoint& last = in.checkpoints->back();
    const double exact = constant_scenario_potential(in.pencil->chi.A.a11, last.t);
    const double err = std::max(std::abs(last.phi.max() - exact), std::abs(last.phi.min() - exact));
    std::ostringstream d;
    d << "phi(" << last.t << ") against the closed form " << exact;
    out.push_back(below("constant_oracle", err, limit("constant_oracle", 1e-8), d.str()));
  }

  if (has_check(s, "max_principle")) {
    const double start = recs.front().max_phidot;
    double worst = -std::numeric_limits<double>::infinity();
    double t_worst = 0.0;
    for (const EnergyRecord& r : recs) {
      if (r.max_phidot - start > worst) {
        worst = r.max_phidot - start;
        t_worst = r.t;
      }
    }
    out.push_back(below("max_principle", worst, limit("max_principle", 0.01),
                        "sup phidot(t) - sup phidot(0); " + at_time(t_worst)));
  }

  if (has_check(s, "lower_bound_stable")) {
    const double T = recs.back().t;
    const double a = inf_phidot_until(recs, 0.5 * T);
    const double b = inf_phidot_until(recs, T);
    std::ostringstream d;
    d << "inf phidot over [0, " << 0.5 * T << "] = " << a << ", over [0, " << T << "] = " << b;
    out.push_back(below("lower_bound_stable", std::abs(a - b), limit("lower_bound_stable", 0.05), d.str()));
  }

  if (has_check(s, "dissipation_tail")) {
    const double total = trapezoid(recs, recs.front().t);
    const double tail = trapezoid(recs, 0.5 * recs.back().t);
    const double frac = total > 0.0 ? tail / total : 0.0;
    std::ostringstream d;
    d << "integral of dissipation = " << total << ", tail share over [T/2, T]";
    out.push_back(below("dissipation_tail", frac, limit("dissipation_tail", 0.05), d.str()));
  }

  if (has_check(s, "dissipation_final")) {
    out.push_back(below("dissipation_final", recs.back().dissipation,
                        limit("dissipation_final", 1e-6), "dissipation at the last record"));
  }

  if (has_check(s, "c_decay")) {
    std::vector<std::pair<double, double>> series;
    for (const EnergyRecord& r : recs) series.emplace_back(r.t, std::max(std::abs(r.c_t), kSeriesFloor));
    CheckResult c{"c_decay", false, kNan, 0.0, ""};
    try {
      const RateFit fit = exp_rate_fit(series, kRateWindowLo, kRateWindowHi);
      c.value = fit.alpha;
      c.passed = fit.alpha > 0.0;
      std::ostringstream d;
      d << "fitted rate of |c(t)| on [2, 12], r2 = " << fit.r2;
      c.detail = d.str();
    } catch (const std::invalid_argument& e) {
      c.detail = e.what();
    }
    out.push_back(c);
  }

  if (has_check(s, "maf2_decay")) {
    // C and C2 from t in [0, 1], then sup phidot(t) <= C e^{-t/2} and
    // phidot - C2 e^{-t} <= tol on [1, T].
    double C = -std::numeric_limits<double>::infinity();
    double C2 = C;
    for (const EnergyRecord& r : recs) {
      if (r.t > 1.0 + 1e-12) continue;
      C = std::max(C, r.max_phidot * std::exp(0.5 * r.t));
      C2 = std::max(C2, r.max_phidot * std::exp(r.t));
    }
    double worst_half = -std::numeric_limits<double>::infinity();
    double worst_full = worst_half;
    for (const EnergyRecord& r : recs) {
      if (r.t < 1.0 - 1e-12) continue;
      worst_half = std::max(worst_half, r.max_phidot - C * std::exp(-0.5 * r.t));
      worst_full = std::max(worst_full, r.max_phidot - C2 * std::exp(-r.t));
    }
    const double lim = limit("maf2_decay", 1e-6);
    std::ostringstream d;
    d << "C = " << C << ", C2 = " << C2 << "; excess over C e^{-t/2} = " << worst_half
      << ", over C2 e^{-t} = " << worst_full;
    const double worst = std::max(worst_half, worst_full);
    out.push_back(below("maf2_decay", worst, lim, d.str()));
  }

  if (in.compare != nullptr) {
    const CompareReport& c = *in.compare;
    if (has_check(s, "rate_fit")) {
      CheckResult r{"rate_fit", false, kNan, limit("rate_fit", 0.99), ""};
      if (c.rate_fit) {
        r.value = c.rate_fit->r2;
        r.passed = c.rate_fit->alpha > 0.0 && c.rate_fit->r2 >= r.limit;
        std::ostringstream d;
        d << "alpha = " << c.rate_fit->alpha << " on masked L2 distance over [2, 12]; value is r2";
        r.detail = d.str();
      } else {
        r.detail = "too few checkpoints in [2, 12]";
      }
      out.push_back(r);
    }
    if (!c.distances.empty()) {
      const CheckpointDistance& last = c.distances.back();
      if (has_check(s, "final_sup_distance")) {
        out.push_back(below("final_sup_distance", last.sup, limit("final_sup_distance", 1e-5),
                            "sup |u - psi| at the last checkpoint"));
      }
      if (has_check(s, "final_masked_sup_distance")) {
        out.push_back(below("final_masked_sup_distance", last.sup_masked,
                            limit("final_masked_sup_distance", 1e-4),
                            "sup over unmasked samples at the last checkpoint"));
      }
    }
    if (has_check(s, "final_l1_distance")) {
      out.push_back(below("final_l1_distance", c.l1_final, limit("final_l1_distance", 1e-3),
                          "whole-torus L1 distance at the last checkpoint"));
    }
    if (has_check(s, "masked_l2_monotone")) {
      out.push_back(below("masked_l2_monotone", c.monotone_excess, kMonotoneTol,
                          "largest increase of the masked L2 series for t >= 2"));
    }
    if (has_check(s, "ricci_flat")) {
      out.push_back(below("ricci_flat", c.ricci_flat_sup.value_or(kNan), limit("ricci_flat", 1e-6),
                          "sup of H(log det g) entries away from the mask"));
    }
  }

  if (has_check(s, "gradient_decay") && in.final_state != nullptr) {
    const double v = sobolev_gradient_sup(*in.final_state, in.mask);
    out.push_back(below("gradient_decay", v, limit("gradient_decay", 1e-8),
                        "sup |grad phidot|^2 away from the mask at the last state"));
  }

  if (in.elliptic != nullptr) {
    const EllipticSummary& e = *in.elliptic;
    if (has_check(s, "elliptic_residual")) {
      out.push_back(below("elliptic_residual", e.residual_masked,
                          limit("elliptic_residual", 10.0 * s.elliptic_tol),
                          "last-delta residual over unmasked samples"));
    }
    if (has_check(s, "elliptic_normalization")) {
      out.push_back(below("elliptic_normalization", std::abs(e.normalization),
                          limit("elliptic_normalization", 1e-12), "|integral psi Omega|"));
    }
    if (has_check(s, "oracle_equivalence")) {
      out.push_back(below("oracle_equivalence", e.oracle_diff.value_or(kNan),
                          limit("oracle_equivalence", 1e-10), "sup |newton - poisson oracle|"));
    }
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace kflow::lab

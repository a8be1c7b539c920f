#include "kflow/lab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kflow/lab/artifacts.hpp"
#include "kflow/lab/compare.hpp"
#include "kflow/lab/mask.hpp"

namespace kflow::lab {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json to_json(const std::vector<CheckResult>& checks) {
  ordered_json arr = ordered_json::array();
  for (const CheckResult& c : checks) {
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"value", number(c.value)},
                   {"limit", number(c.limit)},
                   {"detail", c.detail}});
  }
  return arr;
}

ordered_json to_json(const CompareReport& r) {
  ordered_json d = ordered_json::array();
  for (const CheckpointDistance& c : r.distances) {
    d.push_back({{"t", c.t},
                 {"sup", c.sup},
                 {"l2", c.l2},
                 {"sup_masked", c.sup_masked},
                 {"l2_masked", c.l2_masked}});
  }
  ordered_json j{{"distances", d}};
  if (r.rate_fit) {
    j["rate_fit"] = {{"alpha", r.rate_fit->alpha},
                     {"r2", r.rate_fit->r2},
                     {"t_lo", r.rate_fit->t_lo},
                     {"t_hi", r.rate_fit->t_hi},
                     {"points", r.rate_fit->points}};
  } else {
    j["rate_fit"] = nullptr;
  }
  j["l1_final"] = r.l1_final;
  j["ricci_flat_sup"] = r.ricci_flat_sup ? number(*r.ricci_flat_sup) : ordered_json(nullptr);
  j["masked_l2_monotone"] = r.monotone;
  j["masked_l2_monotone_excess"] = r.monotone_excess;
  return j;
}

ordered_json to_json(const EllipticSummary& e) {
  return {{"residual_sup", number(e.residual_sup)},
          {"residual_limit", number(e.residual_limit)},
          {"residual_masked", number(e.residual_masked)},
          {"reg_final", e.reg_final},
          {"c_final", e.c_final},
          {"iterations", e.iterations},
          {"normalization", e.normalization},
          {"oracle_diff", e.oracle_diff ? number(*e.oracle_diff) : ordered_json(nullptr)}};
}

ordered_json overrides_json(const RunOptions& o) {
  return {{"grid", o.grid ? ordered_json(*o.grid) : ordered_json(nullptr)},
          {"t_end", o.t_end ? ordered_json(*o.t_end) : ordered_json(nullptr)}};
}

RunOptions overrides_from(const ordered_json& j) {
  RunOptions o;
  if (j.contains("overrides")) {
    const auto& ov = j["overrides"];
    if (ov.contains("grid") && !ov["grid"].is_null()) o.grid = ov["grid"].get<int>();
    if (ov.contains("t_end") && !ov["t_end"].is_null()) o.t_end = ov["t_end"].get<double>();
  }
  return o;
}

void print_checks(const std::vector<CheckResult>& checks, std::ostream& log) {
  for (const CheckResult& c : checks) {
    log << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << std::left << std::setw(26) << c.name
        << " value=" << std::setprecision(6) << c.value << " limit=" << c.limit;
    if (!c.detail.empty()) log << "  (" << c.detail << ")";
    log << "\n";
  }
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

struct Failure {
  int code;
  std::string message;
};

// Maps an in-flight exception to an exit code.
Failure classify(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    return {kExitConfig, x.what()};
  } catch (const MaskCoversEverything& x) {
    return {kExitConfig, x.what()};
  } catch (const PositivityError& x) {
    return {kExitNumerical, x.what()};
  } catch (const NonConvergence& x) {
    return {kExitNumerical, x.what()};
  } catch (const PositivityLoss& x) {
    return {kExitNumerical, x.what()};
  } catch (const SingularMetric& x) {
    return {kExitNumerical, x.what()};
  } catch (const ArtifactError& x) {
    return {kExitNumerical, x.what()};
  } catch (const std::invalid_argument& x) {
    return {kExitConfig, x.what()};
  } catch (const std::exception& x) {
    return {kExitNumerical, x.what()};
  }
}

std::string status_name(int code) {
  switch (code) {
    case kExitOk:
      return "ok";
    case kExitInvariant:
      return "invariant_violation";
    case kExitNumerical:
      return "numerical_failure";
    case kExitConfig:
      return "config_error";
  }
  return "unknown";
}

struct Prepared {
  Scenario scenario;
  Pencil pencil;
  SampleMask mask;
  EllipticOptions elliptic;
};

Prepared prepare(const Scenario& s) {
  Pencil pencil = build_pencil(s);
  SampleMask mask = degeneracy_mask(pencil.omega_inf, s.mask.tau, s.mask.radius);
  EllipticOptions eo = build_elliptic_options(s, pencil);
  return {s, std::move(pencil), std::move(mask), std::move(eo)};
}

EllipticSummary solve_elliptic(const Prepared& p, ScalarField& psi_out) {
  const EllipticSolution sol =
      newton_ma_solve(p.pencil.omega_inf, p.pencil.omega0, p.pencil.Omega, p.elliptic);
  psi_out = sol.psi;
  EllipticSummary e = summarize_elliptic(p.pencil, sol.psi, sol.reg_final, p.mask);
  e.iterations = sol.iterations;
  return e;
}

double min_eigenvalue_over(const std::vector<Checkpoint>& cks, const Prepared& p) {
  double m = std::numeric_limits<double>::infinity();
  for (const Checkpoint& ck : cks) {
    const HermitianField g = metric_field(reference_form_at(p.pencil, ck.t), ck.phi);
    m = std::min(m, min_eigenvalue_field(g).min());
  }
  return m;
}

}  // namespace

Scenario with_overrides(Scenario s, const RunOptions& options) {
  if (options.grid) s.N = *options.grid;
  if (options.t_end) s.t_end = *options.t_end;
  return s;
}

EllipticSummary summarize_elliptic(const Pencil& pencil, const ScalarField& psi, double delta,
                                   const SampleMask& mask) {
  EllipticSummary e;
  const Background bg = pencil.omega_inf + delta * pencil.omega0;
  const ScalarField det = ma_density(metric_field(bg, psi));
  double num = 0.0, den = 0.0;
  bool positive = true;
  for (std::size_t i = 0; i < det.size(); ++i) {
    if (!(det[i] > 0.0)) {
      positive = false;
      break;
    }
    num += det[i] * std::log(det[i] / pencil.Omega[i]);
    den += det[i];
  }
  e.reg_final = delta;
  if (positive) {
    e.c_final = num / den;
    for (std::size_t i = 0; i < det.size(); ++i) {
      const double r = std::abs(std::log(det[i] / pencil.Omega[i]) - e.c_final);
      e.residual_sup = std::max(e.residual_sup, r);
      if (mask.keeps(i)) e.residual_masked = std::max(e.residual_masked, r);
    }
  } else {
    e.residual_sup = e.residual_masked = std::numeric_limits<double>::infinity();
  }
  e.residual_limit = residual(pencil.omega_inf, psi, pencil.Omega, &mask);
  e.normalization = integrate(psi * pencil.Omega);
  if (pencil.n() == 1) {
    try {
      ScalarField diff = poisson_oracle_n1(pencil.omega_inf, pencil.Omega);
      diff -= psi;
      e.oracle_diff = diff.abs_max();
    } catch (const SolvabilityError&) {
      e.oracle_diff.reset();
    }
  }
  return e;
}

RunResult run_scenario(const Scenario& scenario_in, const fs::path& out, const RunOptions& options,
                       std::ostream& log) {
  RunResult result;
  ordered_json summary;
  const Scenario scenario = with_overrides(scenario_in, options);
  summary["name"] = scenario.name;
  summary["status"] = "ok";
  summary["error"] = nullptr;
  summary["overrides"] = overrides_json(options);

  const auto finish = [&](int code, const std::string& error) {
    result.exit_code = code;
    result.error = error;
    summary["status"] = status_name(code);
    summary["error"] = error.empty() ? ordered_json(nullptr) : ordered_json(error);
    summary["generated_at"] = utc_now();
    try {
      fs::create_directories(out);
      write_json(out / "summary.json", summary);
    } catch (const std::exception& e) {
      log << "  cannot write summary: " << e.what() << "\n";
    }
    log << scenario.name << ": " << status_name(code);
    if (!error.empty()) log << " (" << error << ")";
    log << "\n";
    return result;
  };

  std::optional<Prepared> prep;
  try {
    fs::create_directories(out);
    write_text(out / "scenario.cfg", scenario_in.source_text);
    prep = prepare(scenario);
  } catch (...) {
    const Failure f = classify(std::current_exception());
    return finish(f.code == kExitNumerical ? kExitNumerical : kExitConfig, f.message);
  }

  const Prepared& p = *prep;
  summary["grid"] = {{"n", scenario.n}, {"N", scenario.N}};
  summary["kind"] = to_string(scenario.kind);
  summary["integrator"] = to_string(scenario.integrator);
  summary["t_end"] = scenario.t_end;
  summary["mask"] = {{"tau", scenario.mask.tau},
                     {"radius", scenario.mask.radius},
                     {"unmasked_fraction", p.mask.unmasked_fraction()}};
  if (!scenario.metadata.empty()) summary["metadata"] = scenario.metadata;

  try {
    const FlowConfig config = build_flow_config(scenario, p.pencil);
    const FlowTrace trace = run_flow(config);
    write_trace_csv(out / "trace.csv", trace.records);
    write_checkpoints(out / "checkpoints", trace.checkpoints);

    summary["flow"] = {{"termination", to_string(trace.termination)},
                       {"accepted_steps", trace.stats.accepted_steps},
                       {"rejected_steps", trace.stats.rejected_steps},
                       {"krylov_iterations", trace.stats.cg_iterations},
                       {"records", trace.records.size()},
                       {"min_eigenvalue", trace.stats.min_eigenvalue},
                       {"max_class_volume_error", trace.stats.max_class_volume_error}};
    if (trace.final_state) {
      const ScalarField& phi = trace.final_state->phi;
      summary["phi_final"] = {{"t", trace.final_state->t},
                              {"mean", phi.mean()},
                              {"min", phi.min()},
                              {"max", phi.max()}};
    }
    if (trace.termination != Termination::kReachedEnd) {
      return finish(kExitNumerical, "flow stopped: " + to_string(trace.termination) +
                                        (trace.message.empty() ? "" : " (" + trace.message + ")"));
    }

    ScalarField psi(p.pencil.grid());
    const EllipticSummary ell = solve_elliptic(p, psi);
    write_snapshot(out / "psi.bin", 0.0, psi);
    summary["elliptic"] = to_json(ell);

    const CompareReport report = compare_limit(trace.checkpoints, psi, p.pencil.Omega, p.mask,
                                               &trace.final_state->metric);
    summary["compare"] = to_json(report);
    if (options.plots) write_plots(out / "plots", trace.records, &report);

    CheckInputs in;
    in.scenario = &scenario;
    in.pencil = &p.pencil;
    in.records = &trace.records;
    in.checkpoints = &trace.checkpoints;
    in.final_state = &*trace.final_state;
    in.mask = &p.mask;
    in.compare = &report;
    in.elliptic = &ell;
    in.min_eigenvalue = trace.stats.min_eigenvalue;
    in.eig_floor = config.eig_floor;
    result.checks = run_checks(in);
    summary["checks"] = to_json(result.checks);
  } catch (...) {
    const Failure f = classify(std::current_exception());
    return finish(f.code, f.message);
  }

  print_checks(result.checks, log);
  return finish(all_passed(result.checks) ? kExitOk : kExitInvariant, "");
}

RunResult run_scenario_file(const fs::path& cfg, const fs::path& out, const RunOptions& options,
                            std::ostream& log) {
  Scenario s;
  try {
    s = load_scenario(cfg);
  } catch (const ConfigError& e) {
    RunResult r{kExitConfig, e.what(), {}};
    try {
      fs::create_directories(out);
      ordered_json summary{{"name", cfg.stem().string()},
                           {"status", status_name(kExitConfig)},
                           {"error", e.what()},
                           {"generated_at", utc_now()}};
      write_json(out / "summary.json", summary);
    } catch (const std::exception&) {
    }
    log << cfg.string() << ": config_error (" << e.what() << ")\n";
    return r;
  }
  return run_scenario(s, out, options, log);
}

RunResult solve_scenario_file(const fs::path& cfg, const fs::path& out, std::ostream& log) {
  RunResult r;
  try {
    const Scenario s = load_scenario(cfg);
    const Prepared p = prepare(s);
    fs::create_directories(out);
    write_text(out / "scenario.cfg", s.source_text);
    ScalarField psi(p.pencil.grid());
    const EllipticSummary ell = solve_elliptic(p, psi);
    write_snapshot(out / "psi.bin", 0.0, psi);
    ordered_json j{{"name", s.name}, {"elliptic", to_json(ell)}};
    write_json(out / "elliptic.json", j);
    log << s.name << ": solved, residual " << ell.residual_sup << " at delta = " << ell.reg_final
        << " after " << ell.iterations << " Newton iterations\n";
  } catch (...) {
    const Failure f = classify(std::current_exception());
    r.exit_code = f.code;
    r.error = f.message;
    log << cfg.string() << ": " << status_name(f.code) << " (" << f.message << ")\n";
  }
  return r;
}

RunResult compare_dirs(const fs::path& trace_dir, const fs::path& elliptic_dir, std::ostream& log) {
  RunResult r;
  try {
    RunOptions ov;
    if (fs::exists(trace_dir / "summary.json")) {
      ov = overrides_from(ordered_json::parse(read_text(trace_dir / "summary.json")));
    }
    const Scenario s = with_overrides(parse_scenario(read_text(trace_dir / "scenario.cfg")), ov);
    const Prepared p = prepare(s);
    const std::vector<Checkpoint> cks = read_checkpoints(trace_dir / "checkpoints");
    const ScalarField psi = read_snapshot(elliptic_dir / "psi.bin").phi;
    if (!(psi.grid() == p.pencil.grid())) throw ArtifactError("elliptic solution grid does not match the run");
    std::optional<FlowState> last;
    if (!cks.empty()) {
      last = evaluate_state(s.kind, p.pencil, cks.back().t, cks.back().phi, 0.0);
    }
    const CompareReport report =
        compare_limit(cks, psi, p.pencil.Omega, p.mask, last ? &last->metric : nullptr);
    log << to_json(report).dump(2) << "\n";
  } catch (...) {
    const Failure f = classify(std::current_exception());
    r.exit_code = f.code;
    r.error = f.message;
    log << "compare: " << status_name(f.code) << " (" << f.message << ")\n";
  }
  return r;
}

RunResult sweep(const fs::path& dir, const fs::path& out, int jobs, const RunOptions& options,
                std::ostream& log) {
  RunResult r;
  std::vector<fs::path> cfgs;
  try {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".cfg") cfgs.push_back(e.path());
    }
  } catch (const fs::filesystem_error& e) {
    r.exit_code = kExitConfig;
    r.error = e.what();
    log << "sweep: " << e.what() << "\n";
    return r;
  }
  std::sort(cfgs.begin(), cfgs.end());

  std::vector<std::string> logs(cfgs.size());
  std::vector<int> codes(cfgs.size(), kExitOk);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < cfgs.size(); k = next++) {
      std::ostringstream one;
      codes[k] = run_scenario_file(cfgs[k], out / cfgs[k].stem(), options, one).exit_code;
      logs[k] = one.str();
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cfgs.size())));
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  for (std::size_t k = 0; k < cfgs.size(); ++k) {
    log << logs[k];
    r.exit_code = std::max(r.exit_code, codes[k]);
  }
  return r;
}

RunResult verify(const fs::path& out, std::ostream& log) {
  RunResult total;
  std::vector<fs::path> runs;
  if (fs::exists(out / "summary.json")) {
    runs.push_back(out);
  } else if (fs::is_directory(out)) {
    for (const auto& e : fs::directory_iterator(out)) {
      if (e.is_directory() && fs::exists(e.path() / "summary.json")) runs.push_back(e.path());
    }
    std::sort(runs.begin(), runs.end());
  }
  if (runs.empty()) {
    total.exit_code = kExitConfig;
    total.error = "no run directories under " + out.string();
    log << "verify: " << total.error << "\n";
    return total;
  }

  for (const fs::path& run : runs) {
    int code = kExitOk;
    std::string error;
    try {
      const ordered_json summary = ordered_json::parse(read_text(run / "summary.json"));
      if (summary.value("status", "") == status_name(kExitConfig) ||
          summary.value("status", "") == status_name(kExitNumerical)) {
        throw ArtifactError("run did not complete: " + summary.value("status", std::string("?")));
      }
      const Scenario s =
          with_overrides(parse_scenario(read_text(run / "scenario.cfg")), overrides_from(summary));
      const Prepared p = prepare(s);
      const std::vector<EnergyRecord> records = read_trace_csv(run / "trace.csv");
      const std::vector<Checkpoint> cks = read_checkpoints(run / "checkpoints");
      if (cks.empty() || records.empty()) throw ArtifactError("empty trace or checkpoint set");
      const ScalarField psi = read_snapshot(run / "psi.bin").phi;
      const FlowState last = evaluate_state(s.kind, p.pencil, cks.back().t, cks.back().phi, 0.0);
      const double delta = p.elliptic.schedule.back();
      const EllipticSummary ell = summarize_elliptic(p.pencil, psi, delta, p.mask);
      const CompareReport report = compare_limit(cks, psi, p.pencil.Omega, p.mask, &last.metric);

      CheckInputs in;
      in.scenario = &s;
      in.pencil = &p.pencil;
      in.records = &records;
      in.checkpoints = &cks;
      in.final_state = &last;
      in.mask = &p.mask;
      in.compare = &report;
      in.elliptic = &ell;
      in.min_eigenvalue = min_eigenvalue_over(cks, p);
      const std::vector<CheckResult> checks = run_checks(in);
      print_checks(checks, log);
      total.checks.insert(total.checks.end(), checks.begin(), checks.end());
      if (!all_passed(checks)) code = kExitInvariant;
    } catch (...) {
      const Failure f = classify(std::current_exception());
      code = f.code;
      error = f.message;
    }
    log << run.filename().string() << ": " << status_name(code);
    if (!error.empty()) log << " (" << error << ")";
    log << "\n";
    total.exit_code = std::max(total.exit_code, code);
  }
  return total;
}

}  // namespace kflow::lab

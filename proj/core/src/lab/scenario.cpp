#include "kflow/lab/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace kflow::lab {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void allow_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> keys) {
  if (!node.IsMap()) fail(where, "expected a mapping");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <class T>
T read(const YAML::Node& node, const std::string& where) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(where, "cannot read value '" + YAML::Dump(node) + "'");
  }
}

Wave read_wave(const YAML::Node& node, int n, const std::string& where) {
  // [[k...], amplitude, phase]
  if (!node.IsSequence() || node.size() != 3 || !node[0].IsSequence()) {
    fail(where, "wave must be [[k...], amplitude, phase]");
  }
  const YAML::Node k = node[0];
  if (static_cast<int>(k.size()) != 2 * n) {
    fail(where, "wave vector needs " + std::to_string(2 * n) + " entries");
  }
  Wave w;
  for (int i = 0; i < 2 * n; ++i) w.k[static_cast<std::size_t>(i)] = read<int>(k[i], where);
  w.amplitude = read<double>(node[1], where);
  w.phase = read<double>(node[2], where);
  return w;
}

std::vector<Wave> read_waves(const YAML::Node& node, int n, const std::string& where) {
  std::vector<Wave> out;
  if (!node) return out;
  if (!node.IsSequence()) fail(where, "expected a list of waves");
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(read_wave(node[i], n, where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

HermitianMatrix read_class(const YAML::Node& node, int n, const std::string& where) {
  if (!node) fail(where, "missing 'class'");
  if (n == 1) {
    if (node.IsScalar()) return HermitianMatrix::scalar(read<double>(node, where));
    allow_keys(node, where, {"a11"});
    return HermitianMatrix::scalar(read<double>(node["a11"], where));
  }
  allow_keys(node, where, {"a11", "a22", "a12"});
  std::complex<double> a12{};
  if (node["a12"]) {
    const YAML::Node z = node["a12"];
    if (!z.IsSequence() || z.size() != 2) fail(where, "a12 must be [re, im]");
    a12 = {read<double>(z[0], where), read<double>(z[1], where)};
  }
  return HermitianMatrix::two(read<double>(node["a11"], where), read<double>(node["a22"], where),
                              a12);
}

FormSpec read_form(const YAML::Node& node, int n, const std::string& where) {
  if (!node) fail(where, "missing section");
  allow_keys(node, where, {"class", "potential", "density"});
  FormSpec f;
  f.A = read_class(node["class"], n, where + ".class");
  f.potential = read_waves(node["potential"], n, where + ".potential");
  f.density = read_waves(node["density"], n, where + ".density");
  if (n != 1 && !f.density.empty()) fail(where, "density waves are only supported for n = 1");
  return f;
}

std::vector<double> read_doubles(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) fail(where, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(read<double>(v, where));
  return out;
}

ScalarField potential_of(const Grid& grid, const FormSpec& f) {
  std::vector<Wave> waves = f.potential;
  for (const Wave& d : f.density) {
    const double k2 = static_cast<double>(d.k[0]) * d.k[0] + static_cast<double>(d.k[1]) * d.k[1];
    if (k2 == 0.0) throw ConfigError("density wave with zero wave vector");
    // (1/4) Laplacian of b cos(2 pi k.x + theta) is -pi^2 |k|^2 b cos(...).
    Wave p = d;
    p.amplitude = -d.amplitude / (kPi * kPi * k2);
    waves.push_back(p);
  }
  return synth(grid, waves);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario: YAML parse error: ") + e.what());
  }
  allow_keys(root, "scenario",
             {"name", "grid", "omega0", "omega_inf", "Omega", "flow", "mask", "elliptic", "checks",
              "metadata"});

  Scenario s;
  s.source_text = text;
  if (!root["name"]) fail("scenario", "missing 'name'");
  s.name = read<std::string>(root["name"], "name");

  const YAML::Node grid = root["grid"];
  if (!grid) fail("scenario", "missing 'grid'");
  allow_keys(grid, "grid", {"n", "N"});
  s.n = read<int>(grid["n"], "grid.n");
  s.N = read<int>(grid["N"], "grid.N");
  if (s.n != 1 && s.n != 2) fail("grid", "n must be 1 or 2");

  s.omega0 = read_form(root["omega0"], s.n, "omega0");
  s.omega_inf = read_form(root["omega_inf"], s.n, "omega_inf");

  if (const YAML::Node om = root["Omega"]) {
    allow_keys(om, "Omega", {"constant", "waves", "normalize"});
    if (om["constant"]) s.Omega.constant = read<double>(om["constant"], "Omega.constant");
    s.Omega.waves = read_waves(om["waves"], s.n, "Omega.waves");
    if (om["normalize"]) s.Omega.normalize = read<bool>(om["normalize"], "Omega.normalize");
  }

  if (const YAML::Node flow = root["flow"]) {
    allow_keys(flow, "flow",
               {"kind", "t_end", "integrator", "dt0", "dt_min", "dt_max", "error_tol",
                "checkpoints", "record_every"});
    try {
      if (flow["kind"]) s.kind = flow_kind_from_string(read<std::string>(flow["kind"], "flow.kind"));
      if (flow["integrator"]) {
        s.integrator = integrator_from_string(read<std::string>(flow["integrator"], "flow.integrator"));
      }
    } catch (const std::invalid_argument& e) {
      fail("flow", e.what());
    }
    if (flow["t_end"]) s.t_end = read<double>(flow["t_end"], "flow.t_end");
    if (flow["dt0"]) s.dt0 = read<double>(flow["dt0"], "flow.dt0");
    if (flow["dt_min"]) s.dt_min = read<double>(flow["dt_min"], "flow.dt_min");
    if (flow["dt_max"]) s.dt_max = read<double>(flow["dt_max"], "flow.dt_max");
    if (flow["error_tol"]) s.error_tol = read<double>(flow["error_tol"], "flow.error_tol");
    if (flow["checkpoints"]) s.checkpoints = read_doubles(flow["checkpoints"], "flow.checkpoints");
    if (flow["record_every"]) s.record_every = read<int>(flow["record_every"], "flow.record_every");
  }

  if (const YAML::Node mask = root["mask"]) {
    allow_keys(mask, "mask", {"tau", "radius"});
    if (mask["tau"]) s.mask.tau = read<double>(mask["tau"], "mask.tau");
    if (mask["radius"]) s.mask.radius = read<double>(mask["radius"], "mask.radius");
  }

  if (const YAML::Node ell = root["elliptic"]) {
    allow_keys(ell, "elliptic", {"schedule", "tol"});
    if (ell["schedule"]) s.schedule = read_doubles(ell["schedule"], "elliptic.schedule");
    if (ell["tol"]) s.elliptic_tol = read<double>(ell["tol"], "elliptic.tol");
  }

  if (const YAML::Node checks = root["checks"]) {
    if (!checks.IsMap()) fail("checks", "expected a mapping of check name to limit");
    for (const auto& kv : checks) {
      const std::string key = kv.first.as<std::string>();
      double limit = std::numeric_limits<double>::quiet_NaN();
      if (kv.second.IsScalar()) {
        const std::string raw = kv.second.Scalar();
        if (raw != "true" && raw != "~" && !raw.empty()) limit = read<double>(kv.second, "checks." + key);
      } else if (!kv.second.IsNull()) {
        fail("checks." + key, "expected a number or true");
      }
      s.checks[key] = limit;
    }
  }

  if (const YAML::Node meta = root["metadata"]) {
    if (!meta.IsMap()) fail("metadata", "expected a mapping");
    for (const auto& kv : meta) {
      s.metadata[kv.first.as<std::string>()] = read<std::string>(kv.second, "metadata");
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

Pencil build_pencil(const Scenario& s) {
  try {
    const Grid grid(s.n, s.N);
    ScalarField Omega = synth(grid, s.Omega.waves);
    Omega += s.Omega.constant;
    if (s.Omega.normalize) {
      const double mean = Omega.mean();
      if (!(mean > 0.0)) throw ConfigError("Omega: non-positive mean");
      Omega *= 1.0 / mean;
    }
    Background omega0(s.omega0.A, potential_of(grid, s.omega0));
    Background omega_inf(s.omega_inf.A, potential_of(grid, s.omega_inf));
    return make_pencil(std::move(omega0), std::move(omega_inf), std::move(Omega));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario '") + s.name + "': " + e.what());
  }
}

FlowConfig build_flow_config(const Scenario& s, const Pencil& pencil) {
  FlowConfig c(pencil);
  c.kind = s.kind;
  c.integrator = s.integrator;
  c.t_end = s.t_end;
  if (s.dt0) c.dt0 = *s.dt0;
  if (s.dt_min) c.dt_min = *s.dt_min;
  if (s.dt_max) {
    c.dt_max = *s.dt_max;
  } else if (s.integrator == Integrator::kRk4) {
    // Explicit steps stay at the initial size unless positivity forces them down.
    c.dt_max = c.dt0;
  }
  if (s.error_tol) c.error_tol = *s.error_tol;
  c.checkpoint_times = s.checkpoints ? *s.checkpoints : default_checkpoint_times(s.t_end);
  c.record_every = s.record_every;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario '") + s.name + "': " + e.what());
  }
  return c;
}

EllipticOptions build_elliptic_options(const Scenario& s, const Pencil& pencil) {
  EllipticOptions o;
  o.tol = s.elliptic_tol;
  if (!s.schedule.empty()) {
    o.schedule = s.schedule;
  } else {
    const double m = min_eigenvalue_field(metric_field(pencil.omega_inf)).min();
    o.schedule = m < s.mask.tau ? degenerate_schedule() : kahler_schedule();
  }
  for (std::size_t i = 0; i < o.schedule.size(); ++i) {
    if (o.schedule[i] < 0.0 || (i > 0 && o.schedule[i] >= o.schedule[i - 1])) {
      throw ConfigError("elliptic.schedule must be non-negative and strictly decreasing");
    }
  }
  return o;
}

bool has_check(const Scenario& s, const std::string& name) { return s.checks.count(name) > 0; }

double check_limit(const Scenario& s, const std::string& name, double fallback) {
  const auto it = s.checks.find(name);
  if (it == s.checks.end() || std::isnan(it->second)) return fallback;
  return it->second;
}

}  // namespace kflow::lab

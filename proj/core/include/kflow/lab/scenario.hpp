#pragma once

// Scenario files: one YAML document per experiment describing the grid, the
// forms of the pencil, the volume form, flow and solver settings, the mask
// and the invariant checks that apply.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kflow/elliptic_solver.hpp"
#include "kflow/flow_engine.hpp"

namespace kflow::lab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FormSpec {
  HermitianMatrix A;
  /// Cosine modes of the potential.
  std::vector<Wave> potential;
  /// n = 1 only: cosine modes of the density A + (1/4) Laplacian(potential),
  /// converted to potential modes on load.
  std::vector<Wave> density;
};

struct VolumeSpec {
  double constant = 1.0;
  std::vector<Wave> waves;
  /// Rescale to unit mean after sampling.
  bool normalize = true;
};

struct MaskSpec {
  double tau = 0.05;
  double radius = 0.05;
};

struct Scenario {
  std::string name;
  int n = 1;
  int N = 64;
  FormSpec omega0;
  FormSpec omega_inf;
  VolumeSpec Omega;

  FlowKind kind = FlowKind::kMaf1;
  Integrator integrator = Integrator::kRosenbrock;
  double t_end = 20.0;
  std::optional<double> dt0;
  std::optional<double> dt_min;
  std::optional<double> dt_max;
  std::optional<double> error_tol;
  std::optional<std::vector<double>> checkpoints;
  int record_every = 1;

  MaskSpec mask;
  /// Empty means: {0} when the limit form is positive everywhere, the
  /// degenerate schedule otherwise.
  std::vector<double> schedule;
  double elliptic_tol = 1e-11;

  /// Check name -> limit; checks without a numeric limit store NaN.
  std::map<std::string, double> checks;
  /// Free-form metadata (e.g. whether the limit class is integral); never evaluated.
  std::map<std::string, std::string> metadata;

  std::string source_text;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

Pencil build_pencil(const Scenario& s);
FlowConfig build_flow_config(const Scenario& s, const Pencil& pencil);
EllipticOptions build_elliptic_options(const Scenario& s, const Pencil& pencil);

bool has_check(const Scenario& s, const std::string& name);
/// Limit of a check, or `fallback` when none was configured.
double check_limit(const Scenario& s, const std::string& name, double fallback);

}  // namespace kflow::lab

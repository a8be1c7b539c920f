#pragma once

// Orchestration behind the kflab subcommands. Every entry point returns an
// exit code: 0 success, 2 invariant violation, 3 numerical failure, 4 config
// error.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kflow/lab/checks.hpp"
#include "kflow/lab/scenario.hpp"

namespace kflow::lab {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvariant = 2,
  kExitNumerical = 3,
  kExitConfig = 4,
};

struct RunOptions {
  std::optional<int> grid;
  std::optional<double> t_end;
  bool plots = true;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string error;
  std::vector<CheckResult> checks;
};

/// Applies --grid / --t-end style overrides.
Scenario with_overrides(Scenario s, const RunOptions& options);

/// Flow, elliptic solve, comparison and checks; writes trace.csv,
/// summary.json, psi.bin, checkpoints/ and plots/ under `out`.
RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& out,
                       const RunOptions& options, std::ostream& log);
RunResult run_scenario_file(const std::filesystem::path& cfg, const std::filesystem::path& out,
                            const RunOptions& options, std::ostream& log);

/// Elliptic solve only: psi.bin and elliptic.json.
RunResult solve_scenario_file(const std::filesystem::path& cfg, const std::filesystem::path& out,
                              std::ostream& log);

/// Distances between a run's checkpoints and a stored elliptic solution.
RunResult compare_dirs(const std::filesystem::path& trace_dir,
                       const std::filesystem::path& elliptic_dir, std::ostream& log);

/// Runs every *.cfg in `dir` into out/<stem>, `jobs` at a time.
RunResult sweep(const std::filesystem::path& dir, const std::filesystem::path& out, int jobs,
                const RunOptions& options, std::ostream& log);

/// Re-evaluates every check from the artifacts of one run directory, or of
/// each run directory directly below `out`.
RunResult verify(const std::filesystem::path& out, std::ostream& log);

/// Elliptic diagnostics of `psi` against the scenario's last regularization.
EllipticSummary summarize_elliptic(const Pencil& pencil, const ScalarField& psi, double delta,
                                   const SampleMask& mask);

}  // namespace kflow::lab

// kflab: run, solve, compare, sweep and verify flow scenarios.

#include <iostream>
#include <optional>
#include <string>
#include <thread>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>

#include "kflow/lab/runner.hpp"

namespace {

// Field-sized buffers are reallocated every step; keep them on the heap
// instead of round-tripping through mmap.
void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  using kflow::lab::RunOptions;

  CLI::App app{"Monge-Ampere flow lab on flat tori"};
  app.require_subcommand(1);

  std::string cfg, out, trace_dir, elliptic_dir, dir;
  std::optional<int> grid;
  std::optional<double> t_end;
  bool no_plots = false;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto* run = app.add_subcommand("run", "flow, elliptic solve, comparison and checks");
  run->add_option("scenario", cfg, "scenario file")->required();
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--grid", grid, "override grid resolution N")->check(CLI::PositiveNumber);
  run->add_option("--t-end", t_end, "override final time")->check(CLI::PositiveNumber);
  run->add_flag("--no-plots", no_plots, "skip SVG plots");

  auto* solve = app.add_subcommand("solve", "elliptic solve only");
  solve->add_option("scenario", cfg, "scenario file")->required();
  solve->add_option("--out", out, "output directory")->required();

  auto* compare = app.add_subcommand("compare", "distances between a run and an elliptic solution");
  compare->add_option("--trace", trace_dir, "run directory")->required();
  compare->add_option("--elliptic", elliptic_dir, "directory holding psi.bin")->required();

  auto* sweep = app.add_subcommand("sweep", "run every scenario in a directory");
  sweep->add_option("dir", dir, "directory of scenario files")->required();
  sweep->add_option("--out", out, "output root")->required();
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--grid", grid, "override grid resolution N")->check(CLI::PositiveNumber);
  sweep->add_option("--t-end", t_end, "override final time")->check(CLI::PositiveNumber);
  sweep->add_flag("--no-plots", no_plots, "skip SVG plots");

  auto* verify = app.add_subcommand("verify", "re-evaluate checks from stored artifacts");
  verify->add_option("--out", out, "run directory or output root")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kflow::lab::kExitConfig;
  }

  RunOptions options{grid, t_end, !no_plots};
  kflow::lab::RunResult r;
  if (*run) {
    r = kflow::lab::run_scenario_file(cfg, out, options, std::cout);
  } else if (*solve) {
    r = kflow::lab::solve_scenario_file(cfg, out, std::cout);
  } else if (*compare) {
    r = kflow::lab::compare_dirs(trace_dir, elliptic_dir, std::cout);
  } else if (*sweep) {
    r = kflow::lab::sweep(dir, out, jobs, options, std::cout);
  } else if (*verify) {
    r = kflow::lab::verify(out, std::cout);
  }
  return r.exit_code;
}

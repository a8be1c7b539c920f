#pragma once

// On-disk formats of a run directory.
//
//   trace.csv            one EnergyRecord per row, %.17g
//   checkpoints/*.bin    potential snapshots
//   psi.bin              elliptic solution
//   plots/*.svg          derived figures, never read back
//
// Snapshot layout (little-endian): 8-byte magic "KFLOWPHI", int64 n,
// int64 N, float64 t, then N^{2n} float64 samples in row-major order.

#include <filesystem>
#include <string>
#include <vector>

#include "kflow/flow_engine.hpp"
#include "kflow/lab/compare.hpp"

namespace kflow::lab {

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kTraceHeader =
    "t,nu,nu_logform,dissipation,min_phidot,max_phidot,c_t,V_t,jensen_floor,dt_used";

std::string format_trace_csv(const std::vector<EnergyRecord>& records);
void write_trace_csv(const std::filesystem::path& path, const std::vector<EnergyRecord>& records);
std::vector<EnergyRecord> read_trace_csv(const std::filesystem::path& path);

void write_snapshot(const std::filesystem::path& path, double t, const ScalarField& phi);
Checkpoint read_snapshot(const std::filesystem::path& path);

/// Writes checkpoints/phi_<index>.bin for every checkpoint.
void write_checkpoints(const std::filesystem::path& dir, const std::vector<Checkpoint>& checkpoints);
/// Reads every checkpoints/*.bin, ordered by t.
std::vector<Checkpoint> read_checkpoints(const std::filesystem::path& dir);

/// distance.svg (log scale) and energy.svg.
void write_plots(const std::filesystem::path& dir, const std::vector<EnergyRecord>& records,
                 const CompareReport* report);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace kflow::lab

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fermicool/dynamics.hpp"
#include "fermicool/occupation.hpp"
#include "fermicool/rates.hpp"
#include "fermicool/statmech.hpp"
#include "fermicool/trap.hpp"

namespace fermicool {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

inline constexpr const char* kTraceHeader =
    "time_inv_omega,time_seconds,T_over_TF,atom_count,mean_energy_hbar_omega,losses_cum";
inline constexpr const char* kSnapshotHeader = "level_index,energy,degeneracy,occupation";
inline constexpr const char* kThermoHeader = "temperature,T_over_TF,mu,mean_energy,atom_count,fermi_energy,method";

std::string trace_row(const TraceSample& s, double omega);
std::string thermo_row(const ThermoReading& r);

/// All writers throw IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_trace(const std::filesystem::path& path, std::span<const TraceSample> samples, double omega);
void write_snapshot(const std::filesystem::path& path, const OccupationState& occ, const LevelLadder& ladder);
void write_rates(const std::filesystem::path& path, const RateMatrix& rates);
void write_rate_diagnostics(const std::filesystem::path& path, const RateMatrix& rates);

/// Strict CSV: the header must match exactly and every row must have the same
/// number of numeric fields. IoError otherwise.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, const std::string& header);

struct Snapshot {
  std::vector<double> energies;
  std::vector<double> degeneracies;
  std::vector<double> occupations;
};

Snapshot read_snapshot(const std::filesystem::path& path);

/// Occupations of a snapshot on `ladder`; ConfigError when the level count,
/// energies or degeneracies disagree.
OccupationState snapshot_state(const Snapshot& snap, const LevelLadder& ladder);

/// Reconstructs the trap of a snapshot from its energy and degeneracy columns
/// (dimension and alpha); ConfigError when they fit no ladder.
TrapSpec infer_trap(const Snapshot& snap);

}  // namespace fermicool

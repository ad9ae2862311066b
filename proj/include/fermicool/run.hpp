#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fermicool/config.hpp"
#include "fermicool/dynamics.hpp"
#include "fermicool/rates.hpp"

namespace fermicool {

/// Ladder, tables and rate model for a trap; 1D uses level tables, 3D shells.
struct Engine {
  explicit Engine(const RunConfig& config);

  LevelLadder ladder;
  std::unique_ptr<FcTable> fc;
  std::unique_ptr<RateModel> model;
};

/// Thermal state from (atoms, T/T_F) or the configured snapshot.
OccupationState initial_state(const RunConfig& config, const LevelLadder& ladder);

struct ScenarioResult {
  SimulationTrace trace;
  OccupationState final_state;
  std::vector<Stage> stages;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
};

using ProgressCallback = std::function<void(const PulseLogEntry&, const TraceSample&)>;

/// Runs the configured sequence in memory.
ScenarioResult simulate(const RunConfig& config, const ProgressCallback& progress = {});

/// Runs the scenario and writes config.yaml, trace.csv, pulses.csv,
/// stages.csv, per-stage snapshots and plot.py into `out`. An INCOMPLETE
/// sentinel exists until the run finishes; on a numerical abort the last
/// valid state goes to abort_snapshot.csv before the error propagates.
ScenarioResult run_to_directory(const RunConfig& config, const std::filesystem::path& out,
                                const ProgressCallback& progress = {});

/// Python/matplotlib script rendering T/T_F and losses against time with the
/// final distribution as an inset.
std::string plot_script();

}  // namespace fermicool

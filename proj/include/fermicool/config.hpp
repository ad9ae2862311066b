#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fermicool/dynamics.hpp"
#include "fermicool/fc.hpp"
#include "fermicool/rates.hpp"
#include "fermicool/trap.hpp"

namespace fermicool {

/// Resonance target: delta = eps^e_{source + sideband} - eps^g_source.
struct PulseTarget {
  int source = 0;
  int sideband = 0;

  bool operator==(const PulseTarget&) const = default;
};

/// A pulse as written in a config file. Exactly one of delta/target and one of
/// rabi/rabi_over_gamma is set; rabi_over_gamma needs a fixed gamma.
struct PulseConfig {
  std::optional<double> delta;
  std::optional<PulseTarget> target;
  std::optional<double> rabi;
  std::optional<double> rabi_over_gamma;
  double duration = 0.0;
  GammaPolicy gamma;
  int repeats = 1;
  std::string label;

  bool operator==(const PulseConfig&) const = default;
};

struct StageConfig {
  std::string label;
  std::vector<PulseConfig> pulses;
  StopRule stop;

  bool operator==(const StageConfig&) const = default;
};

struct InitialConfig {
  double atoms = 0.0;
  double t_over_tf = 0.0;
  std::string snapshot;  // occupation CSV; replaces the thermal state when set
  /// Largest allowed thermal weight beyond the ladder, as a fraction of N.
  double tail_tolerance = 1e-6;

  bool operator==(const InitialConfig&) const = default;
};

struct NumericsConfig {
  PatternKind pattern = PatternKind::DipoleLinear;
  int quadrature = 128;
  double window = 128.0;
  int nearest = 4;
  double rate_floor = 1e-12;
  double refresh = 0.0;
  int segments = 10;  // rebuilds per pulse when refresh is 0
  double drift = 0.02;
  double safety = 0.1;
  double tolerance = 1e-7;
  LossPolicy loss = LossPolicy::PulseEnd;
  double loss_tail = 600.0;
  double sommerfeld_limit = 0.3;
  double table_budget_mb = 4096.0;

  bool operator==(const NumericsConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  int sample_every = 1;  // trace row every k pulses; stage ends are always written

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  std::string name;
  TrapSpec trap;
  InitialConfig initial;
  std::vector<StageConfig> sequence;
  NumericsConfig numerics;
  OutputConfig outputs;

  bool operator==(const RunConfig&) const = default;
};

/// Parses YAML text. Unknown keys, missing required keys and malformed values
/// raise ConfigError naming the key.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

/// Reads a config file; IoError when unreadable.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Built-in scenarios: fig1, fig2, fig3, fig3-reduced.
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);
RunConfig preset_config(const std::string& name, const std::vector<std::string>& overrides = {});

/// Fully resolved YAML; parse_config(echo_config(c)) == c.
std::string echo_config(const RunConfig& config);

/// Cross-field checks before any computation. Throws ConfigError on the first
/// violation; returns warnings.
std::vector<std::string> validate_config(const RunConfig& config);

TrapSpec trap_of(const RunConfig& config);
RateOptions rate_options(const NumericsConfig& numerics);
DynamicsOptions dynamics_options(const NumericsConfig& numerics);

/// Resolves targets and Omega/gamma ratios into concrete pulses.
std::vector<Stage> compile_stages(const RunConfig& config, const LevelLadder& ladder);

}  // namespace fermicool

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fermicool/errors.hpp"
#include "fermicool/occupation.hpp"
#include "fermicool/rates.hpp"
#include "fermicool/statmech.hpp"
#include "fermicool/trap.hpp"

namespace fermicool {

/// Largest dt allowed for a rate snapshot: safety / max_m sum_n Gamma_{n<-m}.
double stability_bound(const RateMatrix& rates, double safety = 0.1);

/// Result of one explicit step on a frozen rate matrix.
struct StepOutcome {
  OccupationState state;
  bool accepted = true;
  double dt = 0.0;  // step taken, or the halved step to retry with
};

/// One RK4 step of dN_n/dt = (1/g_n) sum_m Gamma_{n<-m} g_m N_m - N_n sum_m Gamma_{m<-n}
/// with Gamma frozen (linear flow). A dt above the stability bound is rejected
/// and the halved step returned.
StepOutcome step(const OccupationState& occ, const RateMatrix& rates, const LevelLadder& ladder, double dt,
                 double safety = 0.1);

/// Flow with the Pauli factor kept live between rebuilds:
///   dN_n/dt = (1 - N_n)(1/g_n) sum_m K_nm g_m N_m - N_n sum_m K_mn (1 - N_m),
/// K the core rates of the snapshot. Conserves atoms and keeps N in [0, 1].
/// Core rates into nearly full levels can be large, so the flow is stiff and
/// is integrated implicitly.
class PauliFlow {
 public:
  PauliFlow(const RateMatrix& rates, const LevelLadder& ladder);
  void derivative(const Eigen::VectorXd& n, Eigen::VectorXd& out) const;
  void jacobian(const Eigen::VectorXd& n, Eigen::MatrixXd& out) const;
  /// Outflow bound of the snapshot rates (vacancies at build time).
  double max_outflow() const { return max_outflow_; }

 private:
  Eigen::MatrixXd core_;
  Eigen::MatrixXd scaled_;
  Eigen::VectorXd g_;
  Eigen::VectorXd inv_g_;
  double max_outflow_ = 0.0;
};

/// End-of-pulse removal. SteadyState removes the adiabatic excited population;
/// Survival weights it by exp(-2 gamma (R + Delta) t_tail); PulseEnd uses the
/// excited population reached after a square pulse of length t_p,
///   N_m (Omega^2 Delta / 4) |1 - exp(-(gamma w + i x) t_p)|^2 / (x^2 + gamma^2 w^2),
/// with w = R + Delta, weighted by the same survival factor.
enum class LossPolicy { SteadyState, Survival, PulseEnd, None };

std::string to_string(LossPolicy policy);
LossPolicy loss_policy_from_string(const std::string& name);

struct DynamicsOptions {
  double safety = 0.1;         // dt <= safety / max outflow
  double tolerance = 1e-7;     // local error per level
  double refresh = 0.0;        // rebuild interval in 1/omega; 0 means t_p / segments
  int segments = 10;
  double drift = 0.02;         // rebuild when any R_l moved more than this
  LossPolicy loss = LossPolicy::SteadyState;
  double loss_tail = 0.0;      // t_tail for the survival factor, 1/omega
  double box_tolerance = 1e-9; // N outside [-tol, 1 + tol] rejects the step
  double sommerfeld_limit = 0.3;
};

struct LossReport {
  double removed = 0.0;
  double overshoot = 0.0;  // requested removal that hit N = 0
};

/// N_m <- N_m - p_exc(m) / g_m, clamped at 0 with the overshoot recorded.
LossReport apply_loss(OccupationState& occ, std::span<const double> p_exc, const LevelLadder& ladder);

/// Per-source removal for a loss policy.
std::vector<double> loss_profile(const ExcitationEstimate& estimate, const ResolvedPulse& pulse,
                                 const LevelLadder& ladder, LossPolicy policy, double tail);

struct PulseReport {
  double gamma = 0.0;
  bool gamma_clamped = false;
  double excited = 0.0;           // steady-state excited atoms at pulse end
  double excited_fraction = 0.0;  // excited / atoms
  double removed = 0.0;
  double overshoot = 0.0;
  double energy_change = 0.0;
  double mean_lifetime = 0.0;
  int builds = 0;
  int steps = 0;
  int rejected = 0;
  std::vector<std::string> warnings;
};

/// Raised on an invariant violation; carries the last valid state.
class SimulationAbort : public NumericalError {
 public:
  SimulationAbort(const std::string& what, OccupationState state)
      : NumericalError(what), state_(std::move(state)) {}
  const OccupationState& state() const { return state_; }

 private:
  OccupationState state_;
};

/// Integrates one pulse and applies the loss step. occ.time advances by t_p.
PulseReport run_pulse(OccupationState& occ, const Pulse& pulse, const RateModel& model,
                      const DynamicsOptions& options = {});

struct StopRule {
  double target_t_over_tf = 0.0;  // stop once T/T_F <= target (0: off)
  double plateau = 0.0;           // stop when |dE/E| per cycle < plateau (0: off)
  double max_time = 0.0;          // stage time limit, 1/omega (0: off)
  int max_cycles = 1;             // cycle limit (always active)

  bool operator==(const StopRule&) const = default;
};

struct Stage {
  std::string label;
  std::vector<Pulse> pulses;
  StopRule stop;
};

struct TraceSample {
  double time = 0.0;
  double t_over_tf = 0.0;
  double atom_count = 0.0;
  double mean_energy = 0.0;
  double losses = 0.0;
};

struct PulseLogEntry {
  int stage = 0;
  int cycle = 0;
  std::string label;
  double time = 0.0;  // pulse end
  PulseReport report;
};

struct StageSummary {
  std::string label;
  int cycles = 0;
  int pulses = 0;
  std::string stop_reason;
  TraceSample end;
  OccupationState snapshot;
};

struct SimulationTrace {
  std::vector<TraceSample> samples;
  std::vector<PulseLogEntry> pulses;
  std::vector<StageSummary> stages;
  double max_overshoot = 0.0;
};

TraceSample sample_state(const OccupationState& occ, const LevelLadder& ladder, double sommerfeld_limit = 0.3);

/// Called after every pulse; returning false stops the run.
using PulseCallback = std::function<bool(const PulseLogEntry&, const TraceSample&)>;

/// Runs the stages in order; samples at every pulse boundary.
SimulationTrace run_sequence(OccupationState& occ, const std::vector<Stage>& stages, const RateModel& model,
                             const DynamicsOptions& options = {}, const PulseCallback& callback = {});

}  // namespace fermicool

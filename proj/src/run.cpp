#include "fermicool/run.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "fermicool/errors.hpp"
#include "fermicool/io.hpp"
#include "fermicool/statmech.hpp"

namespace fermicool {

Engine::Engine(const RunConfig& config) : ladder(build_ladder(config.trap)) {
  const auto& n = config.numerics;
  const RateOptions options = rate_options(n);
  const AngularPattern pattern{n.pattern, n.quadrature};
  if (ladder.dimension() == Dimension::OneD) {
    const auto budget = static_cast<std::size_t>(n.table_budget_mb * 1024.0 * 1024.0);
    fc = std::make_unique<FcTable>(build_fc_table(ladder, pattern, config.trap.eta, budget));
    model = std::make_unique<LevelRateModel>(ladder, *fc, options);
  } else {
    model = std::make_unique<ShellRateModel>(ladder, build_shell_tables(ladder, pattern, config.trap.eta), options);
  }
}

OccupationState initial_state(const RunConfig& config, const LevelLadder& ladder) {
  if (!config.initial.snapshot.empty()) return snapshot_state(read_snapshot(config.initial.snapshot), ladder);
  const FermiSurface fs = fermi_surface(ladder, config.initial.atoms);
  const double t = config.initial.t_over_tf * fs.fermi_temperature;
  try {
    return fermi_dirac_init(ladder, config.initial.atoms, t, config.initial.tail_tolerance).state;
  } catch (const NumericalError& e) {
    throw ConfigError(std::string("initial state: ") + e.what() + " (raise initial.tail_tolerance or n_max)");
  }
}

ScenarioResult simulate(const RunConfig& config, const ProgressCallback& progress) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult result;
  result.warnings = validate_config(config);
  Engine engine(config);
  result.stages = compile_stages(config, engine.ladder);
  OccupationState occ = initial_state(config, engine.ladder);
  PulseCallback cb;
  if (progress) {
    cb = [&](const PulseLogEntry& e, const TraceSample& s) {
      progress(e, s);
      return true;
    };
  }
  result.trace = run_sequence(occ, result.stages, *engine.model, dynamics_options(config.numerics), cb);
  result.final_state = std::move(occ);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string plot_script() {
  return R"PY(#!/usr/bin/env python3
"""Render trace.csv: (a) T/T_F and (b) losses against time, final distribution inset."""
import csv
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(here, name), newline="") as f:
        return list(csv.DictReader(f))


trace = read("trace.csv")
stages = read("stages.csv")
t = [float(r["time_seconds"]) for r in trace]
fig, (ax_t, ax_l) = plt.subplots(2, 1, sharex=True, figsize=(6, 7))
ax_t.plot(t, [float(r["T_over_TF"]) for r in trace], "k-")
ax_t.set_ylabel("T / T_F")
ax_l.plot(t, [float(r["losses_cum"]) for r in trace], "k-")
ax_l.set_ylabel("atoms lost")
ax_l.set_xlabel("t (s)")
for s in stages[:-1]:
    for ax in (ax_t, ax_l):
        ax.axvline(float(s["end_time_seconds"]), color="0.6", ls="--", lw=0.8)

final = sorted(glob.glob(os.path.join(here, "snapshot_*_end.csv")))
if final:
    with open(final[-1], newline="") as f:
        snap = list(csv.DictReader(f))
    inset = ax_t.inset_axes([0.55, 0.5, 0.4, 0.4])
    inset.plot([float(r["energy"]) for r in snap], [float(r["occupation"]) for r in snap], "k-", lw=0.8)
    inset.set_xlabel("energy", fontsize=7)
    inset.set_ylabel("occupation", fontsize=7)
    inset.tick_params(labelsize=6)

fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "trace.png")
fig.savefig(out, dpi=150)
)PY";
}

namespace {

std::string pulses_csv(const SimulationTrace& trace, double omega) {
  std::ostringstream o;
  o << "stage,cycle,label,time_inv_omega,time_seconds,gamma,gamma_clamped,excited,excited_fraction,removed,"
       "energy_change,builds,steps,rejected\n";
  for (const auto& e : trace.pulses) {
    const auto& r = e.report;
    o << e.stage << "," << e.cycle << "," << e.label << "," << format_double(e.time) << ","
      << format_double(e.time / omega) << "," << format_double(r.gamma) << "," << (r.gamma_clamped ? 1 : 0) << ","
      << format_double(r.excited) << "," << format_double(r.excited_fraction) << "," << format_double(r.removed)
      << "," << format_double(r.energy_change) << "," << r.builds << "," << r.steps << "," << r.rejected << "\n";
  }
  return o.str();
}

std::string stages_csv(const SimulationTrace& trace, double omega) {
  std::ostringstream o;
  o << "stage,label,cycles,pulses,stop_reason,end_time_inv_omega,end_time_seconds,T_over_TF,atom_count,losses_cum\n";
  for (std::size_t i = 0; i < trace.stages.size(); ++i) {
    const auto& s = trace.stages[i];
    o << i << "," << s.label << "," << s.cycles << "," << s.pulses << "," << s.stop_reason << ","
      << format_double(s.end.time) << "," << format_double(s.end.time / omega) << ","
      << format_double(s.end.t_over_tf) << "," << format_double(s.end.atom_count) << ","
      << format_double(s.end.losses) << "\n";
  }
  return o.str();
}

std::string run_info(const RunConfig& config, const ScenarioResult& r) {
  std::ostringstream o;
  o << "scenario: " << config.name << "\n";
  o << "wall_seconds: " << format_double(r.wall_seconds) << "\n";
  o << "max_loss_overshoot: " << format_double(r.trace.max_overshoot) << "\n";
  o << "compiled_pulses:\n";
  for (const auto& st : r.stages) {
    for (const auto& p : st.pulses) {
      o << "  - {label: " << p.label << ", delta: " << format_double(p.delta) << ", rabi: " << format_double(p.rabi)
        << ", duration: " << format_double(p.duration) << "}\n";
    }
  }
  o << "realized_stages:\n";
  for (const auto& s : r.trace.stages) {
    o << "  - {label: " << s.label << ", cycles: " << s.cycles << ", pulses: " << s.pulses
      << ", stop: " << s.stop_reason << "}\n";
  }
  o << "warnings:\n";
  for (const auto& w : r.warnings) o << "  - \"" << w << "\"\n";
  return o.str();
}

std::vector<TraceSample> thin(const SimulationTrace& trace, int every) {
  if (every <= 1) return trace.samples;
  std::vector<TraceSample> out;
  std::vector<double> stage_ends;
  for (const auto& s : trace.stages) stage_ends.push_back(s.end.time);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    const bool boundary = std::find(stage_ends.begin(), stage_ends.end(), s.time) != stage_ends.end();
    if (i % static_cast<std::size_t>(every) == 0 || i + 1 == trace.samples.size() || boundary) out.push_back(s);
  }
  return out;
}

}  // namespace

ScenarioResult run_to_directory(const RunConfig& config, const std::filesystem::path& out,
                                const ProgressCallback& progress) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  const auto sentinel = out / "INCOMPLETE";
  write_text(sentinel, "run in progress\n");
  write_text(out / "config.yaml", echo_config(config));
  write_text(out / "plot.py", plot_script());

  const auto start = std::chrono::steady_clock::now();
  ScenarioResult result;
  result.warnings = validate_config(config);
  Engine engine(config);
  result.stages = compile_stages(config, engine.ladder);
  OccupationState occ = initial_state(config, engine.ladder);
  write_snapshot(out / "snapshot_initial.csv", occ, engine.ladder);
  PulseCallback cb = [&](const PulseLogEntry& e, const TraceSample& s) {
    if (progress) progress(e, s);
    return true;
  };
  try {
    result.trace = run_sequence(occ, result.stages, *engine.model, dynamics_options(config.numerics), cb);
  } catch (const SimulationAbort& e) {
    write_snapshot(out / "abort_snapshot.csv", e.state(), engine.ladder);
    write_text(sentinel, std::string("numerical abort: ") + e.what() + "\n");
    throw;
  }
  result.final_state = occ;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const double omega = config.trap.omega;
  write_trace(out / "trace.csv", thin(result.trace, config.outputs.sample_every), omega);
  write_text(out / "pulses.csv", pulses_csv(result.trace, omega));
  write_text(out / "stages.csv", stages_csv(result.trace, omega));
  for (std::size_t i = 0; i < result.trace.stages.size(); ++i) {
    const auto& s = result.trace.stages[i];
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "snapshot_%02zu_", i + 1);
    write_snapshot(out / (std::string(prefix) + s.label + "_end.csv"), s.snapshot, engine.ladder);
  }
  write_text(out / "run_info.yaml", run_info(config, result));
  std::filesystem::remove(sentinel, ec);
  return result;
}

}  // namespace fermicool

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fermicool/config.hpp"
#include "fermicool/diagnostics.hpp"
#include "fermicool/errors.hpp"
#include "fermicool/io.hpp"
#include "fermicool/run.hpp"
#include "fermicool/statmech.hpp"

namespace fc = fermicool;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Source {
  std::string preset;
  std::string config;
  std::vector<std::string> overrides;

  void attach(CLI::App* app, bool required) {
    auto* p = app->add_option("--preset", preset, "built-in scenario (fig1, fig2, fig3, fig3-reduced)");
    auto* c = app->add_option("--config", config, "YAML scenario file");
    p->excludes(c);
    if (required) {
      app->callback([p, c] {
        if (p->count() + c->count() == 0) throw CLI::ValidationError("one of --preset or --config is required");
      });
    }
    app->add_option("--override", overrides, "key=value applied before validation (dotted path)");
  }

  bool given() const { return !preset.empty() || !config.empty(); }

  fc::RunConfig load() const {
    return preset.empty() ? fc::load_config(config, overrides) : fc::preset_config(preset, overrides);
  }
};

int cmd_run(const Source& src, bool validate_only, const std::string& out, bool quiet) {
  const fc::RunConfig config = src.load();
  const auto warnings = fc::validate_config(config);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  if (validate_only) {
    fc::initial_state(config, fc::build_ladder(config.trap));
    std::cout << "config ok: " << (config.name.empty() ? "(unnamed)" : config.name) << ", " << config.sequence.size()
              << " stage(s), " << warnings.size() << " warning(s)\n";
    return kExitOk;
  }
  const std::filesystem::path dir = out.empty() ? config.outputs.directory : out;
  int count = 0;
  const double omega = config.trap.omega;
  auto progress = [&](const fc::PulseLogEntry& e, const fc::TraceSample& s) {
    ++count;
    if (quiet || count % 20 != 0) return;
    std::fprintf(stderr, "[%s] pulse %d  t = %.3f s  T/T_F = %.4f  N = %.3f  lost = %.3f  gamma = %.3g\n",
                 e.label.c_str(), count, s.time / omega, s.t_over_tf, s.atom_count, s.losses, e.report.gamma);
  };
  const auto result = fc::run_to_directory(config, dir, progress);
  const auto& last = result.trace.samples.back();
  std::printf("finished %s: %zu pulses, t = %.4f s, T/T_F = %.5f, N = %.4f, losses = %.4f (%.1f s wall)\n",
              config.name.c_str(), result.trace.pulses.size(), last.time / omega, last.t_over_tf, last.atom_count,
              last.losses, result.wall_seconds);
  std::printf("outputs in %s\n", dir.string().c_str());
  return kExitOk;
}

int cmd_fc_check(const fc::FcCheckOptions& options, const std::string& out) {
  const auto report = fc::fc_check(options);
  std::string text = "m,kappa,residual,max_rel_err\n";
  for (const auto& r : report.rows) {
    text += std::to_string(r.m) + "," + fc::format_double(r.kappa) + "," + fc::format_double(r.residual) + "," +
            fc::format_double(r.max_rel_err) + "\n";
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    fc::write_text(out, text);
  }
  std::fprintf(stderr, "worst completeness residual %.3e, worst oracle error %.3e, kappa = 0 identity %s\n",
               report.worst_residual, report.worst_rel_err, report.identity_exact ? "exact" : "BROKEN");
  return kExitOk;
}

int cmd_rates_dump(const Source& src, const std::string& snapshot, int stage, int pulse, const std::string& out) {
  const fc::RunConfig config = src.load();
  fc::validate_config(config);
  fc::Engine engine(config);
  const auto stages = fc::compile_stages(config, engine.ladder);
  if (stage < 0 || stage >= static_cast<int>(stages.size()) || pulse < 0 ||
      pulse >= static_cast<int>(stages[static_cast<std::size_t>(stage)].pulses.size())) {
    throw fc::ConfigError("--stage/--pulse select no pulse of this scenario");
  }
  const fc::Pulse& p = stages[static_cast<std::size_t>(stage)].pulses[static_cast<std::size_t>(pulse)];
  const fc::OccupationState occ = snapshot.empty()
                                      ? fc::initial_state(config, engine.ladder)
                                      : fc::snapshot_state(fc::read_snapshot(snapshot), engine.ladder);
  const auto gamma = fc::resolve_gamma(p, occ, *engine.model);
  for (const auto& w : gamma.warnings) std::cerr << "warning: " << w << "\n";
  const fc::ResolvedPulse rp{p.delta, p.rabi, p.duration, gamma.gamma};
  fc::RateMatrix rates = engine.model->build(rp, occ);
  rates.excitation = engine.model->excitation(rp, occ, rates.inhibition, true);
  const std::filesystem::path dir = out.empty() ? std::filesystem::path(".") : std::filesystem::path(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw fc::IoError("cannot create " + dir.string());
  fc::write_rates(dir / "rates.csv", rates);
  fc::write_rate_diagnostics(dir / "rate_diagnostics.csv", rates);
  std::printf("pulse %s: delta = %s, Omega = %s, gamma = %s; %ld rates, %zu excitation pairs, snapshot %s\n",
              p.label.c_str(), fc::format_double(rp.delta).c_str(), fc::format_double(rp.rabi).c_str(),
              fc::format_double(rp.gamma).c_str(), static_cast<long>(rates.gamma_rates.nonZeros()),
              rates.excitation.pairs.size(), rates.occupancy_hash.c_str());
  return kExitOk;
}

int cmd_thermo(const Source& src, const std::string& snapshot, const std::string& method) {
  const fc::Snapshot snap = fc::read_snapshot(snapshot);
  const fc::TrapSpec spec = src.given() ? src.load().trap : fc::infer_trap(snap);
  const fc::LevelLadder ladder = fc::build_ladder(spec);
  const fc::OccupationState occ = fc::snapshot_state(snap, ladder);
  fc::ThermoReading r;
  if (method == "auto") {
    r = fc::measure(occ, ladder);
  } else if (method == "gc") {
    r = fc::fit_grand_canonical(occ, ladder);
  } else {
    if (ladder.dimension() != fc::Dimension::OneD) throw fc::ConfigError("--method sommerfeld needs a 1D snapshot");
    const auto fs = fc::fermi_surface(ladder, occ.atom_count);
    r = fc::temperature_1d(fc::mean_energy(occ, ladder), occ.atom_count, 2.0 * fs.ground_energy / occ.atom_count);
    r.t_over_tf = r.temperature / fs.fermi_temperature;
  }
  std::cout << fc::kThermoHeader << "\n" << fc::thermo_row(r) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raman sideband cooling of trapped Fermi gases: rate-equation simulator"};
  app.require_subcommand(1);

  Source run_src;
  bool validate_only = false;
  bool quiet = false;
  std::string out;
  auto* run = app.add_subcommand("run", "simulate a scenario and write traces");
  run_src.attach(run, true);
  run->add_flag("--validate-only", validate_only, "check the configuration and exit");
  run->add_option("--out", out, "output directory (default: outputs.directory)");
  run->add_flag("--quiet", quiet, "no progress lines");

  fc::FcCheckOptions fco;
  std::string fc_out;
  auto* fcc = app.add_subcommand("fc-check", "Franck-Condon completeness and oracle agreement as CSV");
  fcc->add_option("--m-max", fco.m_max, "largest m")->check(CLI::Range(0, 2000));
  fcc->add_option("--kappa-max", fco.kappa_max, "largest |kappa|")->check(CLI::PositiveNumber);
  fcc->add_option("--samples", fco.samples, "random oracle triples")->check(CLI::NonNegativeNumber);
  fcc->add_option("--seed", fco.seed, "random seed");
  fcc->add_option("--out", fc_out, "CSV path (default: stdout)");

  Source rd_src;
  std::string rd_snapshot;
  std::string rd_out;
  int rd_stage = 0;
  int rd_pulse = 0;
  auto* rd = app.add_subcommand("rates-dump", "write one rate matrix and its diagnostics as CSV");
  rd_src.attach(rd, true);
  rd->add_option("--snapshot", rd_snapshot, "occupation CSV (default: the scenario's initial state)");
  rd->add_option("--stage", rd_stage, "stage index (0-based)");
  rd->add_option("--pulse", rd_pulse, "pulse index within the stage (0-based)");
  rd->add_option("--out", rd_out, "output directory");

  Source th_src;
  std::string th_snapshot;
  std::string th_method = "auto";
  auto* th = app.add_subcommand("thermo", "temperature of a snapshot as one CSV row");
  th->add_option("snapshot", th_snapshot, "occupation CSV")->required();
  th_src.attach(th, false);
  th->add_option("--method", th_method, "auto, gc or sommerfeld")
      ->check(CLI::IsMember({"auto", "gc", "sommerfeld"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_src, validate_only, out, quiet);
    if (*fcc) return cmd_fc_check(fco, fc_out);
    if (*rd) return cmd_rates_dump(rd_src, rd_snapshot, rd_stage, rd_pulse, rd_out);
    if (*th) return cmd_thermo(th_src, th_snapshot, th_method);
  } catch (const fc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fc::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fc::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

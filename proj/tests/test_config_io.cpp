#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "fermicool/config.hpp"
#include "fermicool/errors.hpp"
#include "fermicool/io.hpp"
#include "fermicool/run.hpp"
#include "fermicool/statmech.hpp"

using namespace fermicool;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fermicool_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmall = R"(name: small
trap: {dimension: 1d, eta: 2, n_max: 40}
initial: {atoms: 12, t_over_tf: 0.4, tail_tolerance: 0.01}
sequence:
  - label: s
    pulses:
      - {delta: -6, rabi: 0.25, duration: 100, gamma: 1}
      - {delta: -7, rabi: 0.25, duration: 100, gamma: 1}
    stop: {max_cycles: 2}
numerics: {quadrature: 16}
)";

}  // namespace

TEST_CASE("presets parse, validate and echo round trip") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const RunConfig c = preset_config(name);
    CHECK(c.name == name);
    CHECK_NOTHROW(validate_config(c));
    const std::string echo = echo_config(c);
    CHECK(parse_config(echo) == c);
    CHECK(echo_config(parse_config(echo)) == echo);
  }
  CHECK_THROWS_AS(preset_config("fig4"), ConfigError);
}

TEST_CASE("preset contents") {
  const RunConfig f1 = preset_config("fig1");
  CHECK(f1.trap.eta == 2.0);
  CHECK(f1.trap.n_max == 500);
  CHECK(f1.initial.atoms == 200.0);
  CHECK(f1.initial.t_over_tf == 0.65);
  REQUIRE(f1.sequence.size() == 1);
  REQUIRE(f1.sequence[0].pulses.size() == 2);
  CHECK(*f1.sequence[0].pulses[0].delta == -15.0);
  CHECK(*f1.sequence[0].pulses[1].delta == -16.0);
  CHECK(f1.sequence[0].pulses[0].gamma.kind == GammaPolicyKind::LifetimeFraction);
  CHECK(f1.sequence[0].pulses[0].gamma.value == 0.05);
  CHECK(f1.sequence[0].pulses[0].gamma.ceiling == 8.0);

  const RunConfig f2 = preset_config("fig2");
  CHECK(f2.trap.alpha == 1.04e-5);
  CHECK(f2.initial.atoms == 181.0);
  const LevelLadder ladder = build_ladder(f2.trap);
  const auto stages = compile_stages(f2, ladder);
  CHECK(stages[0].pulses[0].delta == ladder.energy(181 - 47) - ladder.energy(181));
  CHECK(stages[0].pulses[1].delta == ladder.energy(181 - 48) - ladder.energy(181));
  CHECK(stages[0].pulses[0].rabi == 0.016);
  CHECK(stages[0].pulses[0].duration == 5000.0);

  const RunConfig f3 = preset_config("fig3");
  CHECK(f3.trap.dimension == Dimension::ThreeDIsotropic);
  CHECK(f3.trap.n_max == 100);
  CHECK(f3.initial.atoms == 26235.0);
  REQUIRE(f3.sequence.size() == 7);
  const LevelLadder l3 = build_ladder(f3.trap);
  const auto s3 = compile_stages(f3, l3);
  CHECK(s3[5].pulses[0].rabi == doctest::Approx(0.1 * 0.48));  // the 11th pulse
  CHECK(s3[5].pulses[1].rabi == doctest::Approx(0.8 * 0.028));
  CHECK(s3[4].pulses[1].rabi == doctest::Approx(0.8 * 0.048));
  CHECK(s3[0].pulses[0].gamma.value == 0.0075);
  CHECK(s3[6].pulses[1].gamma.value == 0.07);
}

TEST_CASE("golden hashes of the resolved presets") {
  const std::map<std::string, std::uint64_t> golden = {
      {"fig1", 0xf8cbe41ea48a98d9ull},
      {"fig2", 0x69c17581ffd3f7a3ull},
      {"fig3", 0xef9c7163883dbbdeull},
      {"fig3-reduced", 0x612cb57e31d7e1d6ull},
  };
  for (const auto& [name, hash] : golden) {
    CAPTURE(name);
    CHECK(fnv1a(echo_config(preset_config(name))) == hash);
  }
}

TEST_CASE("unknown keys and bad values name the key") {
  auto message = [](const std::string& text) {
    try {
      validate_config(parse_config(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  std::string text = kSmall;
  CHECK(message(text).empty());
  CHECK(message(text + "bogus: 1\n").find("bogus") != std::string::npos);
  std::string typo = text;
  typo.replace(typo.find("quadrature"), 10, "quadratur");
  CHECK(message(typo).find("quadratur") != std::string::npos);
  std::string neg = text;
  neg.replace(neg.find("atoms: 12"), 9, "atoms: -1");
  CHECK(message(neg).find("initial.atoms") != std::string::npos);
  std::string no_eta = text;
  no_eta.replace(no_eta.find("eta: 2, "), 8, "");
  CHECK(message(no_eta).find("eta") != std::string::npos);
  CHECK_THROWS_AS(parse_config("trap: [1, 2"), ConfigError);
}

TEST_CASE("cross-field constraints") {
  CHECK_THROWS_AS(validate_config(preset_config("fig2", {"trap.alpha=1e-4"})), ConfigError);
  CHECK_THROWS_AS(validate_config(preset_config("fig1", {"initial.atoms=600"})), ConfigError);
  CHECK_THROWS_AS(validate_config(preset_config("fig1", {"numerics.quadrature=9"})), ConfigError);
  CHECK_THROWS_AS(validate_config(preset_config("fig1", {"numerics.table_budget_mb=1"})), ConfigError);
  CHECK_THROWS_AS(validate_config(preset_config("fig1", {"sequence.0.pulses.0.duration=0"})), ConfigError);
  const auto warnings = validate_config(preset_config("fig1", {"sequence.0.pulses.0.gamma=0.1"}));
  CHECK(warnings.size() == 1);  // Omega = 0.25 >= gamma
}

TEST_CASE("overrides") {
  const RunConfig c = preset_config("fig2", {"numerics.refresh=2500", "sequence.0.pulses.1.rabi=0.01", "name=x"});
  CHECK(c.numerics.refresh == 2500.0);
  CHECK(*c.sequence[0].pulses[1].rabi == 0.01);
  CHECK(c.name == "x");
  CHECK(echo_config(c).find("refresh: 2500") != std::string::npos);
  CHECK_THROWS_AS(preset_config("fig2", {"numerics.refresh"}), ConfigError);
  CHECK_THROWS_AS(preset_config("fig2", {"sequence.5.label=x"}), ConfigError);
  CHECK_THROWS_AS(preset_config("fig2", {"sequence.x.label=y"}), ConfigError);
  CHECK_THROWS_AS(preset_config("fig2", {"numerics.windw=3"}), ConfigError);
}

TEST_CASE("config files") {
  const fs::path dir = scratch_dir("config");
  write_file(dir / "small.yaml", kSmall);
  CHECK(load_config((dir / "small.yaml").string()).name == "small");
  CHECK_THROWS_AS(load_config((dir / "missing.yaml").string()), IoError);
}

TEST_CASE("snapshot round trip and strict CSV") {
  const fs::path dir = scratch_dir("csv");
  TrapSpec spec;
  spec.dimension = Dimension::ThreeDIsotropic;
  spec.n_max = 30;
  spec.alpha = 4.8e-4;
  const LevelLadder ladder = build_ladder(spec);
  const OccupationState occ = fermi_dirac_init(ladder, 500, 3.3, 1.0).state;
  write_snapshot(dir / "snap.csv", occ, ladder);
  CHECK(read_file(dir / "snap.csv").rfind(std::string(kSnapshotHeader) + "\n", 0) == 0);
  const Snapshot snap = read_snapshot(dir / "snap.csv");
  const OccupationState back = snapshot_state(snap, ladder);
  CHECK(back.occupations == occ.occupations);
  CHECK(back.atom_count == doctest::Approx(500.0));
  const TrapSpec inferred = infer_trap(snap);
  CHECK(inferred.dimension == Dimension::ThreeDIsotropic);
  CHECK(inferred.n_max == 30);
  CHECK(inferred.alpha == doctest::Approx(4.8e-4).epsilon(1e-12));
  TrapSpec other = spec;
  other.n_max = 29;
  CHECK_THROWS_AS(snapshot_state(snap, build_ladder(other)), ConfigError);

  write_file(dir / "bad_header.csv", "level,energy,degeneracy,occupation\n0,0,1,1\n");
  CHECK_THROWS_AS(read_snapshot(dir / "bad_header.csv"), IoError);
  write_file(dir / "ragged.csv", std::string(kSnapshotHeader) + "\n0,0,1,1\n1,1,1\n");
  CHECK_THROWS_AS(read_snapshot(dir / "ragged.csv"), IoError);
  write_file(dir / "text.csv", std::string(kSnapshotHeader) + "\n0,0,1,full\n");
  CHECK_THROWS_AS(read_snapshot(dir / "text.csv"), IoError);
  CHECK_THROWS_AS(read_snapshot(dir / "absent.csv"), IoError);
  CHECK_THROWS_AS(write_text(dir / "no" / "such" / "dir" / "x.csv", "x"), IoError);
}

TEST_CASE("number formatting reads back exactly") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("run writes a complete output directory") {
  const fs::path dir = scratch_dir("run");
  const RunConfig c = parse_config(kSmall);
  validate_config(c);
  const ScenarioResult r = run_to_directory(c, dir / "out");
  CHECK(r.trace.pulses.size() == 4);
  for (const char* f : {"config.yaml", "trace.csv", "pulses.csv", "stages.csv", "plot.py", "run_info.yaml",
                        "snapshot_initial.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "out" / f));
  }
  CHECK_FALSE(fs::exists(dir / "out" / "INCOMPLETE"));
  const auto rows = read_csv(dir / "out" / "trace.csv", kTraceHeader);
  CHECK(rows.size() == 5);
  CHECK(rows.back()[3] == doctest::Approx(r.final_state.atom_count));
  CHECK(parse_config(read_file(dir / "out" / "config.yaml")) == c);
  bool snapshot_found = false;
  for (const auto& e : fs::directory_iterator(dir / "out")) {
    const std::string n = e.path().filename().string();
    if (n.rfind("snapshot_01_", 0) == 0) {
      snapshot_found = true;
      CHECK(snapshot_state(read_snapshot(e.path()), build_ladder(c.trap)).occupations == r.final_state.occupations);
    }
  }
  CHECK(snapshot_found);
  // identical reruns give identical bytes
  run_to_directory(c, dir / "again");
  CHECK(read_file(dir / "out" / "trace.csv") == read_file(dir / "again" / "trace.csv"));
}

TEST_CASE("thermo row") {
  ThermoReading r;
  r.temperature = 1.5;
  r.t_over_tf = 0.1;
  const std::string row = thermo_row(r);
  CHECK(std::count(row.begin(), row.end(), ',') == 6);
  CHECK(row.find("grand-canonical") != std::string::npos);
}

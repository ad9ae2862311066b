#include <benchmark/benchmark.h>

#include "fermicool/fc.hpp"
#include "fermicool/rates.hpp"
#include "fermicool/rates_reference.hpp"
#include "fermicool/statmech.hpp"
#include "fermicool/trap.hpp"

namespace fc = fermicool;

namespace {

struct Fixture {
  explicit Fixture(int n_max) : ladder(spec(n_max)), quad(fc::build_quadrature({fc::PatternKind::DipoleLinear, 32}, 2.0)) {
    const double atoms = 0.4 * (n_max + 1);
    const auto fs = fc::fermi_surface(ladder, atoms);
    occ = fc::fermi_dirac_init(ladder, atoms, 0.3 * fs.fermi_temperature, 1.0).state;
    pulse = {-static_cast<double>(n_max) / 4.0, 0.25, 100.0, 0.5};
  }

  static fc::TrapSpec spec(int n_max) {
    fc::TrapSpec s;
    s.n_max = n_max;
    return s;
  }

  fc::LevelLadder ladder;
  fc::AngularQuadrature quad;
  fc::OccupationState occ;
  fc::ResolvedPulse pulse;
};

void BM_ReferenceSerial(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fc::reference_rates(f.pulse, f.occ, f.ladder, f.quad, 2.0));
  }
}

void BM_KernelOpenMP(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const fc::FcTable table(f.ladder.n_max(), 2.0, f.quad);
  fc::RateOptions options;
  options.window = 1e6;
  options.rate_floor = 0.0;
  const fc::LevelRateModel model(f.ladder, table, options);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.build(f.pulse, f.occ));
  }
}

// Production settings: windowed sum, rate floor on.
void BM_KernelWindowed(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const fc::FcTable table(f.ladder.n_max(), 2.0, f.quad);
  const fc::LevelRateModel model(f.ladder, table);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.build(f.pulse, f.occ));
  }
}

}  // namespace

BENCHMARK(BM_ReferenceSerial)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelOpenMP)->Arg(24)->Arg(48)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelWindowed)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <doctest.h>

#include <cmath>

#include "fermicool/errors.hpp"
#include "fermicool/statmech.hpp"
#include "fermicool/trap.hpp"

using namespace fermicool;

namespace {

LevelLadder make(Dimension dim, int n_max, double alpha) {
  TrapSpec s;
  s.dimension = dim;
  s.n_max = n_max;
  s.alpha = alpha;
  return build_ladder(s);
}

}  // namespace

TEST_CASE("Fermi-Dirac factor") {
  CHECK(fermi_dirac(3.0, 3.0, 0.0) == 0.5);
  CHECK(fermi_dirac(2.0, 3.0, 0.0) == 1.0);
  CHECK(fermi_dirac(4.0, 3.0, 0.0) == 0.0);
  CHECK(fermi_dirac(3.0, 3.0, 1.0) == doctest::Approx(0.5));
  CHECK(fermi_dirac(4.0, 3.0, 1.0) == doctest::Approx(1.0 / (std::exp(1.0) + 1.0)));
  CHECK(fermi_dirac(1e6, 0.0, 1.0) == 0.0);
}

TEST_CASE("grand-canonical round trip") {
  struct Case {
    Dimension dim;
    int n_max;
    double alpha;
    double atoms;
  };
  for (const Case& c : {Case{Dimension::OneD, 500, 0.0, 200.0}, Case{Dimension::OneD, 500, 1.04e-5, 181.0},
                        Case{Dimension::ThreeDIsotropic, 100, 1.24e-4, 26235.0},
                        Case{Dimension::ThreeDIsotropic, 40, 4.8e-4, 1771.0}}) {
    const LevelLadder ladder = make(c.dim, c.n_max, c.alpha);
    const FermiSurface fs = fermi_surface(ladder, c.atoms);
    for (double t : {0.027, 0.05, 0.1, 0.5, 1.14}) {
      const ThermalInit init = fermi_dirac_init(ladder, c.atoms, t * fs.fermi_temperature, 10.0);
      CHECK(init.state.atom_count == doctest::Approx(c.atoms).epsilon(1e-10));
      const ThermoReading r = fit_grand_canonical(init.state, ladder);
      CAPTURE(c.n_max);
      CAPTURE(t);
      CHECK(r.t_over_tf == doctest::Approx(t).epsilon(1e-4));
      CHECK(r.mu == doctest::Approx(init.mu).epsilon(1e-4).scale(fs.fermi_energy));
      CHECK(r.method == ThermoMethod::GrandCanonical);
    }
  }
}

// The low-temperature formula ignores holes reaching the bottom of the ladder;
// its error grows like exp(-T_F/T) and passes 5% near T/T_F = 0.29 on a
// 500-level ladder. The acceptance run reports the 0.3 point.
TEST_CASE("Sommerfeld reading agrees with the exact state at low temperature") {
  for (double alpha : {0.0, 1.04e-5}) {
    const LevelLadder ladder = make(Dimension::OneD, 500, alpha);
    for (double atoms : {181.0, 200.0}) {
      const FermiSurface fs = fermi_surface(ladder, atoms);
      for (double t : {0.02, 0.05, 0.08, 0.1, 0.15, 0.2, 0.25}) {
        const ThermalInit init = fermi_dirac_init(ladder, atoms, t * fs.fermi_temperature, 1.0);
        const double e = mean_energy(init.state, ladder);
        const ThermoReading plain = temperature_1d(e, atoms, fs.fermi_energy);
        const ThermoReading used = measure(init.state, ladder);
        CAPTURE(alpha);
        CAPTURE(t);
        CHECK(used.method == ThermoMethod::Sommerfeld1D);
        CHECK(std::abs(used.t_over_tf - t) < 0.05 * t);
        if (t <= 0.08) CHECK(std::abs(used.t_over_tf - t) < 0.03 * t);
        if (alpha == 0.0) CHECK(std::abs(plain.temperature / fs.fermi_temperature - t) < 0.05 * t);
      }
    }
  }
}

TEST_CASE("thermometer switches to the fit above the Sommerfeld limit") {
  const LevelLadder ladder = make(Dimension::OneD, 500, 0.0);
  const FermiSurface fs = fermi_surface(ladder, 200);
  const ThermalInit hot = fermi_dirac_init(ladder, 200, 0.65 * fs.fermi_temperature, 0.1);
  const ThermoReading r = measure(hot.state, ladder);
  CHECK(r.method == ThermoMethod::GrandCanonical);
  CHECK(r.t_over_tf == doctest::Approx(0.65).epsilon(1e-4));
  const LevelLadder shells = make(Dimension::ThreeDIsotropic, 40, 0.0);
  const ThermalInit cold = fermi_dirac_init(shells, 1771, 0.05 * 20.0);
  CHECK(measure(cold.state, shells).method == ThermoMethod::GrandCanonical);
}

TEST_CASE("T = 0 filling") {
  const LevelLadder ladder = make(Dimension::ThreeDIsotropic, 30, 0.0);
  const ThermalInit init = fermi_dirac_init(ladder, 1771.5, 0.0);
  for (int n = 0; n <= 20; ++n) CHECK(init.state[static_cast<std::size_t>(n)] == 1.0);
  CHECK(init.state[21] == doctest::Approx(0.5 / shell_degeneracy(21)));
  for (int n = 22; n <= 30; ++n) CHECK(init.state[static_cast<std::size_t>(n)] == 0.0);
  const FermiSurface fs = fermi_surface(ladder, 1771.5);
  CHECK(mean_energy(init.state, ladder) == doctest::Approx(fs.ground_energy));
  CHECK(temperature_1d(0.5 * 200.0 * 199.0, 200.0, 199.0).temperature == 0.0);
}

TEST_CASE("thermal counts and chemical potential") {
  const LevelLadder ladder = make(Dimension::OneD, 300, 0.0);
  const double mu = solve_mu(ladder, 100.0, 12.0);
  CHECK(thermal_count(ladder, mu, 12.0) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(thermal_count(ladder, mu + 1.0, 12.0) > thermal_count(ladder, mu, 12.0));
  CHECK(thermal_energy(ladder, mu, 12.0) > fermi_surface(ladder, 100.0).ground_energy);
  CHECK(truncated_tail(ladder, mu, 12.0) < 1e-6);
}

TEST_CASE("refusals") {
  const LevelLadder ladder = make(Dimension::OneD, 100, 0.0);
  // a hot gas spills far beyond level 100
  CHECK_THROWS_AS(fermi_dirac_init(ladder, 50.0, 60.0), NumericalError);
  CHECK_THROWS_AS(temperature_1d(100.0, 50.0, 49.0), NumericalError);
  CHECK_THROWS_AS(fermi_dirac_init(ladder, 50.0, -1.0), NumericalError);
}

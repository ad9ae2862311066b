#pragma once

#include <string_view>

#include "fermicool/occupation.hpp"
#include "fermicool/trap.hpp"

namespace fermicool {

enum class ThermoMethod { Sommerfeld1D, GrandCanonical };

std::string_view to_string(ThermoMethod method);

/// Temperatures in hbar*omega/k_B, energies in hbar*omega.
struct ThermoReading {
  double temperature = 0.0;
  double t_over_tf = 0.0;
  double mu = 0.0;
  double mean_energy = 0.0;
  double atom_count = 0.0;
  double fermi_energy = 0.0;
  ThermoMethod method = ThermoMethod::GrandCanonical;
};

/// Fermi-Dirac factor 1 / (exp((e - mu)/T) + 1), with the T = 0 step
/// (1/2 exactly at e = mu).
double fermi_dirac(double energy, double mu, double temperature);

/// sum_n g_n f(eps_n; mu, T).
double thermal_count(const LevelLadder& ladder, double mu, double temperature);
/// sum_n g_n eps_n f(eps_n; mu, T).
double thermal_energy(const LevelLadder& ladder, double mu, double temperature);

/// Chemical potential reproducing n_atoms at temperature T > 0 on the
/// truncated ladder. Throws NumericalError when the root leaves the
/// [eps_0 - 50T, eps_max + 50T] bracket.
double solve_mu(const LevelLadder& ladder, double n_atoms, double temperature);

/// Atoms the same (mu, T) would place beyond the ladder's top level, using the
/// ladder formula while it stays monotone.
double truncated_tail(const LevelLadder& ladder, double mu, double temperature);

struct ThermalInit {
  OccupationState state;
  double mu = 0.0;
  double temperature = 0.0;
  double tail_weight = 0.0;
};

/// Thermal occupations for n_atoms at absolute temperature T. At T = 0 levels
/// fill in energy order with a fractional top level. Refuses (NumericalError)
/// when the omitted tail exceeds tail_tolerance * n_atoms.
ThermalInit fermi_dirac_init(const LevelLadder& ladder, double n_atoms, double temperature,
                             double tail_tolerance = 1e-6);

/// sum_n g_n N_n eps_n.
double mean_energy(const OccupationState& occ, const LevelLadder& ladder);

/// Low-temperature inversion of E = N E_F (1 + (pi^2/3)(T/T_F)^2) / 2.
/// Energies below the T = 0 floor by more than a 1e-9 relative slack throw.
ThermoReading temperature_1d(double mean_energy, double n_atoms, double fermi_energy);

/// Solves N(mu, T) = n_atoms and E(mu, T) = energy for (T, mu); T_F from fermi_surface.
ThermoReading fit_grand_canonical(double n_atoms, double energy, const LevelLadder& ladder);
ThermoReading fit_grand_canonical(const OccupationState& occ, const LevelLadder& ladder);

/// Thermometer used for traces: in 1D the Sommerfeld reading (with the Fermi
/// energy set so that the exact ground state reads T = 0) while it stays at or
/// below `sommerfeld_limit`, otherwise the grand-canonical fit; 3D always fits.
ThermoReading measure(const OccupationState& occ, const LevelLadder& ladder,
                      double sommerfeld_limit = 0.3);

}  // namespace fermicool

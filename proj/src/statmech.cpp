#include "fermicool/statmech.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fermicool/errors.hpp"

namespace fermicool {

std::string_view to_string(ThermoMethod method) {
  return method == ThermoMethod::Sommerfeld1D ? "sommerfeld-1d" : "grand-canonical";
}

double fermi_dirac(double energy, double mu, double temperature) {
  if (temperature <= 0.0) {
    if (energy < mu) return 1.0;
    return energy > mu ? 0.0 : 0.5;
  }
  const double x = (energy - mu) / temperature;
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

double thermal_count(const LevelLadder& ladder, double mu, double temperature) {
  double total = 0.0;
  for (int n = 0; n <= ladder.n_max(); ++n) {
    total += ladder.degeneracy(n) * fermi_dirac(ladder.energy(n), mu, temperature);
  }
  return total;
}

double thermal_energy(const LevelLadder& ladder, double mu, double temperature) {
  double total = 0.0;
  for (int n = 0; n <= ladder.n_max(); ++n) {
    total += ladder.degeneracy(n) * ladder.energy(n) * fermi_dirac(ladder.energy(n), mu, temperature);
  }
  return total;
}

namespace {

// dN/dmu = sum g f (1 - f) / T
double count_slope(const LevelLadder& ladder, double mu, double temperature) {
  double total = 0.0;
  for (int n = 0; n <= ladder.n_max(); ++n) {
    const double f = fermi_dirac(ladder.energy(n), mu, temperature);
    total += ladder.degeneracy(n) * f * (1.0 - f);
  }
  return total / temperature;
}

}  // namespace

double solve_mu(const LevelLadder& ladder, double n_atoms, double temperature) {
  if (!(temperature > 0.0)) throw NumericalError("solve_mu: temperature must be positive");
  double lo = ladder.energy(0) - 50.0 * temperature;
  double hi = ladder.energy(ladder.n_max()) + 50.0 * temperature;
  const double f_lo = thermal_count(ladder, lo, temperature) - n_atoms;
  const double f_hi = thermal_count(ladder, hi, temperature) - n_atoms;
  if (f_lo > 0.0 || f_hi < 0.0) {
    std::ostringstream msg;
    msg << "solve_mu: no chemical potential in [" << lo << ", " << hi << "] gives " << n_atoms
        << " atoms at T = " << temperature << " (capacity " << ladder.capacity() << ")";
    throw NumericalError(msg.str());
  }
  // Safeguarded Newton on the monotone N(mu).
  double mu = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double f = thermal_count(ladder, mu, temperature) - n_atoms;
    if (f > 0.0) {
      hi = mu;
    } else {
      lo = mu;
    }
    if (std::abs(f) <= 1e-13 * std::max(1.0, n_atoms)) break;
    const double slope = count_slope(ladder, mu, temperature);
    double next = slope > 0.0 ? mu - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mu))) break;
    mu = next;
  }
  return mu;
}

double truncated_tail(const LevelLadder& ladder, double mu, double temperature) {
  if (temperature <= 0.0) return 0.0;
  const auto& spec = ladder.spec();
  double tail = 0.0;
  double prev = ladder.energy(ladder.n_max());
  for (int n = ladder.n_max() + 1; n < ladder.n_max() + 2000000; ++n) {
    const double e = ladder_energy(n, spec.alpha);
    if (!(e > prev)) break;
    prev = e;
    const double g = spec.dimension == Dimension::OneD ? 1.0 : static_cast<double>(shell_degeneracy(n));
    const double term = g * fermi_dirac(e, mu, temperature);
    tail += term;
    if (e - mu > 40.0 * temperature && term < 1e-18) break;
  }
  return tail;
}

ThermalInit fermi_dirac_init(const LevelLadder& ladder, double n_atoms, double temperature,
                             double tail_tolerance) {
  if (!(temperature >= 0.0)) throw NumericalError("fermi_dirac_init: temperature must be >= 0");
  const FermiSurface fs = fermi_surface(ladder, n_atoms);
  ThermalInit init;
  init.temperature = temperature;
  auto& occ = init.state.occupations;
  occ.assign(static_cast<std::size_t>(ladder.n_max()) + 1, 0.0);
  if (temperature == 0.0) {
    double remaining = n_atoms;
    for (int n = 0; n <= ladder.n_max() && remaining > 0.0; ++n) {
      const double g = ladder.degeneracy(n);
      const double take = std::min(g, remaining);
      occ[static_cast<std::size_t>(n)] = take / g;
      remaining -= take;
    }
    init.mu = fs.fermi_energy;
  } else {
    init.mu = solve_mu(ladder, n_atoms, temperature);
    for (int n = 0; n <= ladder.n_max(); ++n) {
      occ[static_cast<std::size_t>(n)] = fermi_dirac(ladder.energy(n), init.mu, temperature);
    }
    init.tail_weight = truncated_tail(ladder, init.mu, temperature);
    if (init.tail_weight > tail_tolerance * n_atoms) {
      std::ostringstream msg;
      msg << "fermi_dirac_init: T = " << temperature << " puts " << init.tail_weight
          << " atoms beyond the top level (tolerance " << tail_tolerance * n_atoms
          << "); raise n_max or numerics.tail_tolerance";
      throw NumericalError(msg.str());
    }
  }
  recount(init.state, ladder);
  return init;
}

double mean_energy(const OccupationState& occ, const LevelLadder& ladder) {
  double total = 0.0;
  for (std::size_t n = 0; n < occ.size(); ++n) {
    const int i = static_cast<int>(n);
    total += ladder.degeneracy(i) * occ.occupations[n] * ladder.energy(i);
  }
  return total;
}

ThermoReading temperature_1d(double energy, double n_atoms, double fermi_energy) {
  if (!(n_atoms > 0.0) || !(fermi_energy > 0.0)) {
    throw NumericalError("temperature_1d: atom number and Fermi energy must be positive");
  }
  const double floor = 0.5 * n_atoms * fermi_energy;
  ThermoReading reading;
  reading.method = ThermoMethod::Sommerfeld1D;
  reading.mean_energy = energy;
  reading.atom_count = n_atoms;
  reading.fermi_energy = fermi_energy;
  if (energy < floor * (1.0 - 1e-9)) {
    std::ostringstream msg;
    msg << "temperature_1d: mean energy " << energy << " below the T = 0 floor " << floor;
    throw NumericalError(msg.str());
  }
  const double excess = std::max(0.0, 2.0 * energy / (n_atoms * fermi_energy) - 1.0);
  reading.t_over_tf = std::sqrt(3.0 / (std::numbers::pi * std::numbers::pi) * excess);
  reading.temperature = reading.t_over_tf * fermi_energy;
  reading.mu = fermi_energy;
  return reading;
}

ThermoReading fit_grand_canonical(double n_atoms, double energy, const LevelLadder& ladder) {
  const FermiSurface fs = fermi_surface(ladder, n_atoms);
  ThermoReading reading;
  reading.method = ThermoMethod::GrandCanonical;
  reading.mean_energy = energy;
  reading.atom_count = n_atoms;
  reading.fermi_energy = fs.fermi_energy;
  const double e0 = fs.ground_energy;
  const double slack = 1e-10 * std::max(1.0, std::abs(e0));
  if (energy < e0 - slack) {
    std::ostringstream msg;
    msg << "fit_grand_canonical: energy " << energy << " below the T = 0 minimum " << e0;
    throw NumericalError(msg.str());
  }
  if (energy <= e0 + slack) {
    reading.mu = fs.fermi_energy;
    return reading;
  }
  auto energy_at = [&](double t, double& mu) {
    mu = solve_mu(ladder, n_atoms, t);
    return thermal_energy(ladder, mu, t);
  };
  double mu = 0.0;
  double t_lo = 0.0;
  double t_hi = std::max(1e-3, 0.1 * fs.fermi_energy);
  int guard = 0;
  while (energy_at(t_hi, mu) < energy) {
    t_lo = t_hi;
    t_hi *= 2.0;
    if (++guard > 60) {
      throw NumericalError("fit_grand_canonical: energy above the infinite-temperature limit of the ladder");
    }
  }
  int it = 0;
  for (; it < 200; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    if (energy_at(mid, mu) > energy) {
      t_hi = mid;
    } else {
      t_lo = mid;
    }
    if (t_hi - t_lo <= 1e-13 * t_hi) break;
  }
  if (it == 200) {
    std::ostringstream msg;
    msg << "fit_grand_canonical: no convergence, T in [" << t_lo << ", " << t_hi << "]";
    throw NumericalError(msg.str());
  }
  reading.temperature = 0.5 * (t_lo + t_hi);
  reading.mu = solve_mu(ladder, n_atoms, reading.temperature);
  reading.t_over_tf = reading.temperature / fs.fermi_temperature;
  return reading;
}

ThermoReading fit_grand_canonical(const OccupationState& occ, const LevelLadder& ladder) {
  return fit_grand_canonical(count_atoms(occ, ladder), mean_energy(occ, ladder), ladder);
}

ThermoReading measure(const OccupationState& occ, const LevelLadder& ladder, double sommerfeld_limit) {
  const double n = count_atoms(occ, ladder);
  const double e = mean_energy(occ, ladder);
  if (ladder.dimension() == Dimension::OneD) {
    const FermiSurface fs = fermi_surface(ladder, n);
    const double effective_ef = 2.0 * fs.ground_energy / n;
    if (effective_ef > 0.0) {
      ThermoReading r = temperature_1d(std::max(e, fs.ground_energy), n, effective_ef);
      const double t = r.temperature;
      r.fermi_energy = fs.fermi_energy;
      r.t_over_tf = t / fs.fermi_temperature;
      if (r.t_over_tf <= sommerfeld_limit) return r;
    }
  }
  return fit_grand_canonical(n, e, ladder);
}

}  // namespace fermicool

#include "fermicool/trap.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "fermicool/errors.hpp"

namespace fermicool {

void validate(const TrapSpec& spec) {
  if (!(spec.eta > 0.0) || !std::isfinite(spec.eta)) {
    throw ConfigError("trap.eta must be positive and finite");
  }
  if (spec.n_max < 1) throw ConfigError("trap.n_max must be >= 1");
  if (!(spec.alpha >= 0.0) || !std::isfinite(spec.alpha)) {
    throw ConfigError("trap.alpha must be >= 0");
  }
  if (!(spec.alpha * spec.n_max < 0.5)) throw ConfigError("trap.alpha * trap.n_max must be < 1/2");
  if (!(spec.excited_scale > 0.0)) throw ConfigError("trap.excited_scale must be positive");
  if (!(spec.omega > 0.0)) throw ConfigError("trap.omega must be positive");
}

LevelLadder::LevelLadder(const TrapSpec& spec) : spec_(spec) {
  validate(spec);
  const auto count = static_cast<std::size_t>(spec.n_max) + 1;
  energies_.resize(count);
  degeneracies_.resize(count);
  cumulative_.resize(count);
  std::int64_t running = 0;
  for (int n = 0; n <= spec.n_max; ++n) {
    const auto i = static_cast<std::size_t>(n);
    energies_[i] = ladder_energy(n, spec.alpha);
    const std::int64_t g = spec.dimension == Dimension::OneD ? 1 : shell_degeneracy(n);
    degeneracies_[i] = static_cast<double>(g);
    running += g;
    cumulative_[i] = running;
    // eps_{n} - eps_{n-1} = 1 - alpha (2n - 1)
    if (n > 0 && !(energies_[i] > energies_[i - 1])) {
      std::ostringstream msg;
      msg << "trap.alpha = " << spec.alpha << " makes the ladder non-monotone at index " << n
          << " (need alpha*n_max < 1/2)";
      throw ConfigError(msg.str());
    }
  }
}

LevelLadder build_ladder(const TrapSpec& spec) { return LevelLadder(spec); }

FermiSurface fermi_surface(const LevelLadder& ladder, double n_atoms) {
  if (!(n_atoms > 0.0)) throw NumericalError("fermi_surface: atom number must be positive");
  const double capacity = static_cast<double>(ladder.capacity());
  if (n_atoms > capacity * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "fermi_surface: overflow, " << n_atoms << " atoms exceed ladder capacity " << capacity;
    throw NumericalError(msg.str());
  }
  FermiSurface fs;
  double remaining = n_atoms;
  for (int n = 0; n <= ladder.n_max(); ++n) {
    const double g = ladder.degeneracy(n);
    const double take = std::min(g, remaining);
    fs.ground_energy += take * ladder.energy(n);
    remaining -= take;
    fs.fermi_index = n;
    if (remaining <= 1e-9 * n_atoms) break;
  }
  fs.fermi_energy = ladder.energy(fs.fermi_index);
  fs.fermi_temperature = fs.fermi_energy;
  return fs;
}

BandCheck check_band_constraint(double alpha, int m_max, int sideband) {
  BandCheck check;
  if (sideband == 0) {
    check.carrier = true;
    return check;
  }
  check.margin = alpha * static_cast<double>(m_max) * 4.0 * std::abs(sideband);
  check.pass = check.margin < 1.0;
  return check;
}

}  // namespace fermicool

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fermicool {

enum class Dimension { OneD, ThreeDIsotropic };

/// Trap geometry. Energies are in units of hbar*omega and times in 1/omega;
/// `omega` (rad/s) is only used to convert simulated time to seconds.
struct TrapSpec {
  Dimension dimension = Dimension::OneD;
  double omega = 2.0 * 3.14159265358979323846 * 5.7e3;
  double alpha = 0.0;  // anharmonicity, eps_n = n (1 - alpha n)
  double eta = 2.0;    // Lamb-Dicke parameter k_L * a
  int n_max = 500;     // highest level (1D) or shell (3D) retained
  // Scales the excited-manifold ladder in resonance denominators only.
  double excited_scale = 1.0;

  bool operator==(const TrapSpec&) const = default;
};

/// Throws ConfigError unless eta > 0, n_max >= 1, alpha >= 0 and alpha*n_max < 1/2.
void validate(const TrapSpec& spec);

/// Level (1D) or shell (3D) energies with degeneracies.
class LevelLadder {
 public:
  explicit LevelLadder(const TrapSpec& spec);

  const TrapSpec& spec() const { return spec_; }
  Dimension dimension() const { return spec_.dimension; }
  int n_max() const { return spec_.n_max; }
  std::size_t size() const { return energies_.size(); }

  double energy(int n) const { return energies_[static_cast<std::size_t>(n)]; }
  /// Excited-manifold energy used in resonance denominators.
  double excited_energy(int n) const { return spec_.excited_scale * energy(n); }
  double degeneracy(int n) const { return degeneracies_[static_cast<std::size_t>(n)]; }
  /// Number of single-particle states in levels/shells 0..n.
  std::int64_t cumulative(int n) const { return cumulative_[static_cast<std::size_t>(n)]; }
  std::int64_t capacity() const { return cumulative_.back(); }

  std::span<const double> energies() const { return energies_; }
  std::span<const double> degeneracies() const { return degeneracies_; }

 private:
  TrapSpec spec_;
  std::vector<double> energies_;
  std::vector<double> degeneracies_;
  std::vector<std::int64_t> cumulative_;
};

/// eps_n = n (1 - alpha n); zero-point omitted, detunings are relative to the carrier.
inline double ladder_energy(int n, double alpha) {
  const double x = static_cast<double>(n);
  return x * (1.0 - alpha * x);
}

/// Number of states in 3D isotropic shell n.
inline std::int64_t shell_degeneracy(int n) {
  return static_cast<std::int64_t>(n + 1) * (n + 2) / 2;
}

/// Builds the ladder; throws ConfigError naming the first non-monotone index.
LevelLadder build_ladder(const TrapSpec& spec);

struct FermiSurface {
  int fermi_index = 0;      // highest level/shell occupied at T = 0
  double fermi_energy = 0;  // E_F in hbar*omega
  double fermi_temperature = 0;  // T_F = E_F with k_B = 1
  /// Exact T = 0 energy of n_atoms with fractional filling of the top shell.
  double ground_energy = 0;
};

/// Throws NumericalError ("overflow") when n_atoms exceeds the ladder capacity.
FermiSurface fermi_surface(const LevelLadder& ladder, double n_atoms);

struct BandCheck {
  double margin = 0;  // alpha * m_max * 4 |s|
  bool pass = true;
  bool carrier = false;  // s == 0: not subject to the band constraint
};

/// Band-selectivity requirement alpha * m_max < 1 / (4|s|) for a pulse on sideband s.
BandCheck check_band_constraint(double alpha, int m_max, int sideband);

}  // namespace fermicool

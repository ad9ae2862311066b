#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "fermicool/fc.hpp"
#include "fermicool/occupation.hpp"
#include "fermicool/trap.hpp"

namespace fermicool {

enum class GammaPolicyKind { Fixed, LifetimeFraction };

/// How the effective spontaneous Raman rate gamma of a pulse is chosen.
struct GammaPolicy {
  GammaPolicyKind kind = GammaPolicyKind::Fixed;
  double value = 0.5;    // gamma in units of omega, or the lifetime fraction f
  double ceiling = 8.0;  // Festina Lente ceiling for resolved values

  bool operator==(const GammaPolicy&) const = default;
};

/// One Raman pulse. Detuning is measured from the carrier: resonance with
/// l <- m when delta = eps^e_l - eps^g_m.
struct Pulse {
  double delta = 0.0;
  double rabi = 0.0;      // Omega, units of omega
  double duration = 0.0;  // t_p, units of 1/omega
  GammaPolicy gamma;
  int repeats = 1;
  std::string label;
};

/// Pulse with gamma fixed to a number.
struct ResolvedPulse {
  double delta = 0.0;
  double rabi = 0.0;
  double duration = 0.0;
  double gamma = 0.0;
};

/// Throws ConfigError on invalid parameters; returns warnings (Omega >= gamma).
std::vector<std::string> validate(const Pulse& pulse);

struct RateOptions {
  /// Coherent l-sum window half-width in units of max(gamma, 1).
  double window = 128.0;
  /// Nearest-resonant excited levels always kept per source.
  int nearest = 4;
  /// Rates below rate_floor * max rate are dropped.
  double rate_floor = 1e-12;
  /// Sources with N_m <= source_floor are skipped.
  double source_floor = 1e-12;
};

struct ExcitationPair {
  int m = 0;
  int l = 0;
  double inhibition = 0.0;  // R_ml
  double overlap = 0.0;     // Delta_ml
  double excited = 0.0;     // atoms excited on l <- m
  double detuning = 0.0;    // delta - (eps_l^e - eps_m^g)
};

struct ExcitationEstimate {
  /// Steady-state excited atoms attributable to each source level/shell.
  std::vector<double> p_exc;
  double total = 0.0;
  /// Excitation-weighted mean inhibited lifetime, 1/omega.
  double mean_lifetime = 0.0;
  bool lifetime_infinite = false;
  /// Excitation-weighted mean of R_ml.
  double mean_inhibition = 0.0;
  std::vector<ExcitationPair> pairs;
};

/// Sparse Gamma_{n<-m} for one occupation snapshot.
struct RateMatrix {
  /// (n, m) -> Gamma_{n<-m}, fermionic factor (1 - N_n) of the snapshot included.
  Eigen::SparseMatrix<double> gamma_rates;
  /// (n, m) -> Gamma_{n<-m} / (1 - N_n).
  Eigen::SparseMatrix<double> core;
  /// R per excited level (1D) or excited shell (3D).
  std::vector<double> inhibition;
  ExcitationEstimate excitation;
  double max_outflow = 0.0;
  double max_core_outflow = 0.0;
  ResolvedPulse pulse;
  std::string occupancy_hash;
  std::vector<std::string> warnings;

  bool empty() const { return gamma_rates.nonZeros() == 0; }
};

/// Rate assembly for one trap geometry. The 1D model works on individual
/// levels; the 3D model works on shells with shell-uniform occupations.
class RateModel {
 public:
  RateModel(const LevelLadder& ladder, RateOptions options) : ladder_(&ladder), options_(options) {}
  virtual ~RateModel() = default;

  const LevelLadder& ladder() const { return *ladder_; }
  const RateOptions& options() const { return options_; }
  void set_options(const RateOptions& options) { options_ = options; }

  /// R for every excited level/shell.
  virtual std::vector<double> inhibition(const OccupationState& occ) const = 0;
  virtual ExcitationEstimate excitation(const ResolvedPulse& pulse, const OccupationState& occ,
                                        std::span<const double> inhibition,
                                        bool with_pairs = false) const = 0;
  virtual RateMatrix build(const ResolvedPulse& pulse, const OccupationState& occ) const = 0;

 protected:
  /// Detuning mismatch delta - (eps^e_l - eps^g_m) in shell/level energies.
  double mismatch(double delta, int l, int m) const {
    return delta - (ladder_->excited_energy(l) - ladder_->energy(m));
  }
  double window_width(double gamma) const { return options_.window * std::max(gamma, 1.0); }

  const LevelLadder* ladder_;
  RateOptions options_;
};

/// 1D levels.
class LevelRateModel final : public RateModel {
 public:
  LevelRateModel(const LevelLadder& ladder, const FcTable& fc, RateOptions options = {});

  const FcTable& fc() const { return *fc_; }

  std::vector<double> inhibition(const OccupationState& occ) const override;
  ExcitationEstimate excitation(const ResolvedPulse& pulse, const OccupationState& occ,
                                std::span<const double> inhibition,
                                bool with_pairs = false) const override;
  RateMatrix build(const ResolvedPulse& pulse, const OccupationState& occ) const override;

  /// Excited levels l in the coherent sum for source m.
  std::vector<int> window(const ResolvedPulse& pulse, int m) const;

 private:
  const FcTable* fc_;
};

/// Shell-level Franck-Condon data for the 3D isotropic trap with the laser
/// along z. Emission directions are integrated over theta with the phi
/// dependence of W absorbed: transverse shell-to-shell probabilities only
/// depend on the transverse recoil.
struct ShellTables {
  int shells = 0;
  double eta = 0.0;
  std::vector<double> pair_u;       // cos(theta) > 0 member of each +/- pair
  std::vector<double> pair_weight;  // weight of one member
  /// r(lz, nz) at kappa_z = eta u, rows parity-split like FcTable::emission.
  std::vector<Eigen::MatrixXd> axial;
  /// Two-dimensional shell transfer probability P(s -> t) at kappa_perp = eta sqrt(1-u^2),
  /// summed over initial and final substates.
  std::vector<Eigen::MatrixXd> transverse;
  Eigen::MatrixXd laser;  // r(lz, mz) at eta
  /// Shell-to-shell emission probability per excited substate: P3D(L -> N) / g_L.
  Eigen::MatrixXd shell_emission;

  int even_count() const { return (shells + 1) / 2; }
  int parity_row(int l) const { return (l % 2 == 0) ? l / 2 : even_count() + l / 2; }
};

/// Gauss-Legendre nodes in theta, paired under theta -> pi - theta.
AngularQuadrature build_theta_quadrature(const AngularPattern& pattern);

/// Builds tables from an explicit symmetric quadrature over u = cos(theta).
ShellTables build_shell_tables(const LevelLadder& ladder, const AngularQuadrature& quadrature,
                               double eta);
ShellTables build_shell_tables(const LevelLadder& ladder, const AngularPattern& pattern, double eta);

class ShellRateModel final : public RateModel {
 public:
  ShellRateModel(const LevelLadder& ladder, ShellTables tables, RateOptions options = {});

  const ShellTables& tables() const { return tables_; }

  std::vector<double> inhibition(const OccupationState& occ) const override;
  ExcitationEstimate excitation(const ResolvedPulse& pulse, const OccupationState& occ,
                                std::span<const double> inhibition,
                                bool with_pairs = false) const override;
  RateMatrix build(const ResolvedPulse& pulse, const OccupationState& occ) const override;

  /// Rate from the single substate (0, 0, m) of shell m into shell n, without
  /// the 1/g_m shell average. Used to relate shell rates to 1D rates.
  Eigen::VectorXd axial_substate_rates(const ResolvedPulse& pulse, const OccupationState& occ,
                                       int m) const;

 private:
  bool in_window(const ResolvedPulse& pulse, int excited_shell, int source_shell,
                 double width) const;

  ShellTables tables_;
};

/// R_ml for excited level l (1D: independent of m).
double compute_R(int l, const OccupationState& occ, const FcTable& fc);

/// Delta_ml = |eta_lm(k_L)|^2.
double compute_Delta(int l, int m, const FcTable& fc);

/// Requires a Fixed gamma policy; throws ConfigError otherwise.
RateMatrix build_rate_matrix(const Pulse& pulse, const OccupationState& occ, const LevelLadder& ladder,
                             const FcTable& fc, const RateOptions& options = {});

ExcitationEstimate estimate_excited_population(const ResolvedPulse& pulse, const OccupationState& occ,
                                               const RateModel& model, bool with_pairs = false);

struct GammaResolution {
  double gamma = 0.0;
  bool clamped = false;
  bool bracket_failed = false;
  int iterations = 0;
  double mean_lifetime = 0.0;
  /// Anharmonic band width 4 gamma R / (alpha |s|) for the nominal sideband; 0 when alpha = 0.
  double band_width = 0.0;
  std::vector<std::string> warnings;
};

inline constexpr double kGammaLow = 1e-4;
inline constexpr double kGammaHigh = 1e2;

/// Returns the pulse's gamma: Fixed values pass through; LifetimeFraction(f)
/// solves mean_lifetime(gamma) = f * t_p by bisection in log(gamma).
GammaResolution resolve_gamma(const Pulse& pulse, const OccupationState& occ, const RateModel& model);

}  // namespace fermicool

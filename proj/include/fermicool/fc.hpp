#pragma once

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fermicool {

class LevelLadder;

/// Franck-Condon amplitudes eta_lm(kappa) = <l| exp(i kappa (a + a^dagger)) |m>
/// between harmonic-oscillator states.
///
/// Every amplitude factors as i^(l-m) * r_lm(kappa) with r_lm real, so tables
/// store r only. For l >= m,
///   r_lm = exp(-kappa^2/2) kappa^(l-m) sqrt(m!/l!) L_m^(l-m)(kappa^2),
/// and r_lm = (-1)^(m-l) r_ml for l < m. The generalized Laguerre factor is
/// evaluated with the normalized three-term recurrence in m, carrying a
/// separate log-scale so that quantum numbers in the thousands stay finite.

inline constexpr int kFcHardCap = 2048;

/// Reduced (real) amplitude r_lm(kappa).
double fc_reduced(int l, int m, double kappa, int hard_cap = kFcHardCap);

/// Complex amplitude eta_lm(kappa) = i^(l-m) r_lm(kappa).
std::complex<double> fc_element(int l, int m, double kappa, int hard_cap = kFcHardCap);

/// Phase i^k for integer k.
inline std::complex<double> i_pow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

/// Dense matrix R(l, m) = r_lm(kappa) for l, m in [0, size).
Eigen::MatrixXd reduced_fc_matrix(int size, double kappa);

/// Angular distribution of the fluorescence. The trap (and laser) axis is z;
/// dipole patterns assume the atomic dipole / quantization axis along x.
enum class PatternKind { Isotropic, DipoleLinear, DipoleCircular };

std::string_view to_string(PatternKind kind);
PatternKind pattern_from_string(std::string_view name);

struct AngularPattern {
  PatternKind kind = PatternKind::DipoleLinear;
  int node_count = 32;
};

/// Normalized density of u = cos(theta) after integrating W over phi.
double pattern_density(PatternKind kind, double u);

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

/// Sphere integral of f(kappa = eta cos theta) as sum_j weights[j] f(kappa[j]).
/// Nodes come in +/- pairs; `kappa` is ascending.
struct AngularQuadrature {
  std::vector<double> u;
  std::vector<double> kappa;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Requires an even node_count >= 8.
AngularQuadrature build_quadrature(const AngularPattern& pattern, double eta);

/// Cached reduced amplitudes for one trap and emission pattern.
///
/// Emission tables are kept only for the positive member of every +/- node pair
/// since r_ln(-kappa) = (-1)^(l-n) r_ln(kappa). Their rows are permuted so that
/// even l come first, then odd l; the rates kernel relies on that split.
class FcTable {
 public:
  FcTable(int n_max, double eta, AngularQuadrature quadrature);

  int n_max() const { return n_max_; }
  int dim() const { return n_max_ + 1; }
  double eta() const { return eta_; }
  const AngularQuadrature& quadrature() const { return quad_; }

  /// Number of +/- node pairs.
  int pair_count() const { return static_cast<int>(pair_kappa_.size()); }
  double pair_kappa(int p) const { return pair_kappa_[static_cast<std::size_t>(p)]; }
  /// Weight of a single member of the pair (both members carry the same weight).
  double pair_weight(int p) const { return pair_weight_[static_cast<std::size_t>(p)]; }

  /// Parity-split emission table for pair p: row parity_row(l), column n.
  const Eigen::MatrixXd& emission(int p) const { return emission_[static_cast<std::size_t>(p)]; }
  int even_count() const { return (dim() + 1) / 2; }
  int parity_row(int l) const { return (l % 2 == 0) ? l / 2 : even_count() + l / 2; }

  /// Reduced amplitude at full quadrature node j (either sign).
  double reduced(int j, int l, int n) const;
  /// Complex amplitude A[j][l][n].
  std::complex<double> amplitude(int j, int l, int n) const;

  /// r_lm(eta): laser absorption along the trap axis.
  const Eigen::MatrixXd& laser() const { return laser_; }
  /// Angle-averaged emission probability sum_j w_j |eta_ln(kappa_j)|^2.
  const Eigen::MatrixXd& emission_probability() const { return emission_probability_; }

  /// Row range [first, last) of nonzero entries of column block b in the
  /// even (parity 0) or odd (parity 1) half, in parity-local row indices.
  struct RowRange {
    int first = 0;
    int last = 0;
  };
  static constexpr int kColumnBlock = 64;
  int column_blocks() const { return (dim() + kColumnBlock - 1) / kColumnBlock; }
  RowRange support(int p, int block, int parity) const;

  std::size_t memory_bytes() const;

 private:
  int n_max_;
  double eta_;
  AngularQuadrature quad_;
  std::vector<double> pair_kappa_;
  std::vector<double> pair_weight_;
  std::vector<int> node_pair_;  // full node j -> pair index
  std::vector<Eigen::MatrixXd> emission_;
  std::vector<RowRange> support_;
  Eigen::MatrixXd laser_;
  Eigen::MatrixXd emission_probability_;
};

/// Estimated bytes for a table; build_fc_table refuses beyond `budget_bytes`.
std::size_t estimate_fc_table_bytes(int n_max, int node_count);

FcTable build_fc_table(const LevelLadder& ladder, const AngularPattern& pattern, double eta,
                       std::size_t budget_bytes = std::size_t{4} << 30);

}  // namespace fermicool

#include "fermicool/fc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fermicool/errors.hpp"
#include "fermicool/trap.hpp"

namespace fermicool {

namespace {

constexpr double kRescale = 1e200;
const double kLogRescale = std::log(kRescale);
// Entries below this magnitude are treated as outside the support of a column.
constexpr double kSupportFloor = 1e-24;

inline double scaled_value(double g, double log_scale) {
  if (g == 0.0) return 0.0;
  if (log_scale > -600.0 && log_scale < 600.0) return g * std::exp(log_scale);
  return std::copysign(std::exp(log_scale + std::log(std::abs(g))), g);
}

// r_{n+a, n}(kappa) for n = 0 .. count-1.
void diagonal(int a, double kappa, int count, double* out) {
  if (count <= 0) return;
  if (kappa == 0.0) {
    std::fill(out, out + count, a == 0 ? 1.0 : 0.0);
    return;
  }
  const double x = kappa * kappa;
  const double sign = (kappa < 0.0 && (a % 2) == 1) ? -1.0 : 1.0;
  const double ad = static_cast<double>(a);
  double log_scale = -0.5 * x + ad * std::log(std::abs(kappa)) - 0.5 * std::lgamma(ad + 1.0);
  double prev = 0.0;
  double cur = 1.0;
  out[0] = sign * scaled_value(cur, log_scale);
  for (int n = 0; n + 1 < count; ++n) {
    const double nd = static_cast<double>(n);
    const double next = ((2.0 * nd + 1.0 + ad - x) * cur - std::sqrt(nd * (nd + ad)) * prev) /
                        std::sqrt((nd + 1.0) * (nd + 1.0 + ad));
    prev = cur;
    cur = next;
    if (std::abs(cur) > kRescale) {
      cur /= kRescale;
      prev /= kRescale;
      log_scale += kLogRescale;
    }
    out[n + 1] = sign * scaled_value(cur, log_scale);
  }
}

void check_quantum_numbers(int l, int m, double kappa, int hard_cap) {
  if (!std::isfinite(kappa)) throw NumericalError("fc_element: non-finite kappa");
  if (l < 0 || m < 0) throw NumericalError("fc_element: negative quantum number");
  if (l > hard_cap || m > hard_cap) {
    std::ostringstream msg;
    msg << "fc_element: quantum number above hard cap " << hard_cap;
    throw NumericalError(msg.str());
  }
}

}  // namespace

double fc_reduced(int l, int m, double kappa, int hard_cap) {
  check_quantum_numbers(l, m, kappa, hard_cap);
  const int lo = std::min(l, m);
  const int a = std::abs(l - m);
  std::vector<double> diag(static_cast<std::size_t>(lo) + 1);
  diagonal(a, kappa, lo + 1, diag.data());
  const double v = diag.back();
  return (l < m && (a % 2) == 1) ? -v : v;
}

std::complex<double> fc_element(int l, int m, double kappa, int hard_cap) {
  return i_pow(l - m) * fc_reduced(l, m, kappa, hard_cap);
}

Eigen::MatrixXd reduced_fc_matrix(int size, double kappa) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(size, size);
#pragma omp parallel
  {
    std::vector<double> diag(static_cast<std::size_t>(size));
#pragma omp for schedule(dynamic, 8)
    for (int a = 0; a < size; ++a) {
      const int count = size - a;
      diagonal(a, kappa, count, diag.data());
      const double flip = (a % 2 == 1) ? -1.0 : 1.0;
      for (int n = 0; n < count; ++n) {
        r(n + a, n) = diag[static_cast<std::size_t>(n)];
        r(n, n + a) = flip * diag[static_cast<std::size_t>(n)];
      }
    }
  }
  return r;
}

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::Isotropic: return "isotropic";
    case PatternKind::DipoleLinear: return "dipole-linear";
    case PatternKind::DipoleCircular: return "dipole-circular";
  }
  return "?";
}

PatternKind pattern_from_string(std::string_view name) {
  if (name == "isotropic") return PatternKind::Isotropic;
  if (name == "dipole-linear") return PatternKind::DipoleLinear;
  if (name == "dipole-circular") return PatternKind::DipoleCircular;
  throw ConfigError("unknown fluorescence pattern '" + std::string(name) +
                    "' (expected isotropic, dipole-linear or dipole-circular)");
}

double pattern_density(PatternKind kind, double u) {
  switch (kind) {
    case PatternKind::Isotropic:
      return 0.5;
    case PatternKind::DipoleLinear:
      // sin^2 of the angle to a dipole along x, averaged over phi
      return 0.375 * (1.0 + u * u);
    case PatternKind::DipoleCircular:
      // (1 + cos^2) / 2 about a quantization axis along x, averaged over phi
      return 0.1875 * (3.0 - u * u);
  }
  return 0.0;
}

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(order), 0.0);
  weights.assign(static_cast<std::size_t>(order), 0.0);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (z * p1 - p0) / (z * z - 1.0);
      const double step = p1 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes[static_cast<std::size_t>(i)] = -z;
    nodes[static_cast<std::size_t>(order - 1 - i)] = z;
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(order - 1 - i)] = w;
  }
}

AngularQuadrature build_quadrature(const AngularPattern& pattern, double eta) {
  if (pattern.node_count < 8 || pattern.node_count % 2 != 0) {
    throw ConfigError("numerics.quadrature must be an even node count >= 8");
  }
  if (!std::isfinite(eta) || eta < 0.0) throw ConfigError("quadrature: eta must be >= 0");
  AngularQuadrature q;
  std::vector<double> w;
  gauss_legendre(pattern.node_count, q.u, w);
  q.kappa.resize(q.u.size());
  q.weights.resize(q.u.size());
  double total = 0.0;
  for (std::size_t j = 0; j < q.u.size(); ++j) {
    q.kappa[j] = eta * q.u[j];
    q.weights[j] = w[j] * pattern_density(pattern.kind, q.u[j]);
    total += q.weights[j];
  }
  // The densities are quadratic, so this only removes rounding.
  for (auto& wj : q.weights) wj /= total;
  return q;
}

FcTable::FcTable(int n_max, double eta, AngularQuadrature quadrature)
    : n_max_(n_max), eta_(eta), quad_(std::move(quadrature)) {
  const int g = static_cast<int>(quad_.size());
  if (g % 2 != 0) throw ConfigError("FcTable: quadrature must have +/- node pairs");
  const int half = g / 2;
  node_pair_.resize(static_cast<std::size_t>(g));
  for (int j = 0; j < g; ++j) {
    node_pair_[static_cast<std::size_t>(j)] = j >= half ? j - half : half - 1 - j;
  }
  const int d = dim();
  const int ne = even_count();
  pair_kappa_.resize(static_cast<std::size_t>(half));
  pair_weight_.resize(static_cast<std::size_t>(half));
  emission_.resize(static_cast<std::size_t>(half));
  support_.resize(static_cast<std::size_t>(half * column_blocks() * 2));
  emission_probability_ = Eigen::MatrixXd::Zero(d, d);

  for (int p = 0; p < half; ++p) {
    const auto j = static_cast<std::size_t>(half + p);
    pair_kappa_[static_cast<std::size_t>(p)] = quad_.kappa[j];
    pair_weight_[static_cast<std::size_t>(p)] = quad_.weights[j];
    const Eigen::MatrixXd r = reduced_fc_matrix(d, quad_.kappa[j]);
    emission_probability_ += (2.0 * quad_.weights[j]) * r.cwiseAbs2();
    Eigen::MatrixXd& split = emission_[static_cast<std::size_t>(p)];
    split.resize(d, d);
    for (int l = 0; l < d; ++l) split.row(parity_row(l)) = r.row(l);

    for (int b = 0; b < column_blocks(); ++b) {
      const int c0 = b * kColumnBlock;
      const int c1 = std::min(d, c0 + kColumnBlock);
      for (int parity = 0; parity < 2; ++parity) {
        const int r0 = parity == 0 ? 0 : ne;
        const int r1 = parity == 0 ? ne : d;
        int first = r1;
        int last = r0;
        for (int row = r0; row < r1; ++row) {
          if (split.block(row, c0, 1, c1 - c0).cwiseAbs().maxCoeff() > kSupportFloor) {
            first = std::min(first, row);
            last = row + 1;
          }
        }
        RowRange range;
        if (last > first) range = {first - r0, last - r0};
        support_[static_cast<std::size_t>((p * column_blocks() + b) * 2 + parity)] = range;
      }
    }
  }
  laser_ = reduced_fc_matrix(d, eta_);
}

FcTable::RowRange FcTable::support(int p, int block, int parity) const {
  return support_[static_cast<std::size_t>((p * column_blocks() + block) * 2 + parity)];
}

double FcTable::reduced(int j, int l, int n) const {
  const int half = pair_count();
  const int p = node_pair_[static_cast<std::size_t>(j)];
  const double v = emission_[static_cast<std::size_t>(p)](parity_row(l), n);
  return (j < half && ((l - n) % 2 != 0)) ? -v : v;
}

std::complex<double> FcTable::amplitude(int j, int l, int n) const {
  return i_pow(l - n) * reduced(j, l, n);
}

std::size_t FcTable::memory_bytes() const { return estimate_fc_table_bytes(n_max_, 2 * pair_count()); }

std::size_t estimate_fc_table_bytes(int n_max, int node_count) {
  const auto d = static_cast<std::size_t>(n_max) + 1;
  const auto matrices = static_cast<std::size_t>(node_count) / 2 + 2;
  return matrices * d * d * sizeof(double);
}

FcTable build_fc_table(const LevelLadder& ladder, const AngularPattern& pattern, double eta,
                       std::size_t budget_bytes) {
  const std::size_t need = estimate_fc_table_bytes(ladder.n_max(), pattern.node_count);
  if (need > budget_bytes) {
    std::ostringstream msg;
    msg << "Franck-Condon table needs " << need / (1024.0 * 1024.0) << " MiB, budget is "
        << budget_bytes / (1024.0 * 1024.0) << " MiB";
    throw NumericalError(msg.str());
  }
  return FcTable(ladder.n_max(), eta, build_quadrature(pattern, eta));
}

}  // namespace fermicool

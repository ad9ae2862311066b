#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "fermicool/errors.hpp"
#include "fermicool/rates.hpp"

namespace fermicool {

namespace {

constexpr double kAmplitudeFloor = 1e-15;

}  // namespace

AngularQuadrature build_theta_quadrature(const AngularPattern& pattern) {
  if (pattern.node_count < 8 || pattern.node_count % 2 != 0) {
    throw ConfigError("numerics.quadrature must be an even node count >= 8");
  }
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(pattern.node_count, x, w);
  AngularQuadrature q;
  const auto g = x.size();
  q.u.resize(g);
  q.weights.resize(g);
  double total = 0.0;
  // theta = pi (1 - x) / 2 puts u = cos(theta) in ascending order
  for (std::size_t k = 0; k < g; ++k) {
    const double theta = 0.5 * std::numbers::pi * (1.0 - x[k]);
    q.u[k] = std::cos(theta);
    q.weights[k] = 0.5 * std::numbers::pi * w[k] * std::sin(theta) * pattern_density(pattern.kind, q.u[k]);
    total += q.weights[k];
  }
  for (auto& v : q.weights) v /= total;
  // exact mirror symmetry
  for (std::size_t k = 0; k < g / 2; ++k) {
    const double u = 0.5 * (q.u[g - 1 - k] - q.u[k]);
    const double wk = 0.5 * (q.weights[k] + q.weights[g - 1 - k]);
    q.u[k] = -u;
    q.u[g - 1 - k] = u;
    q.weights[k] = q.weights[g - 1 - k] = wk;
  }
  q.kappa = q.u;
  return q;
}

ShellTables build_shell_tables(const LevelLadder& ladder, const AngularQuadrature& quadrature, double eta) {
  if (ladder.dimension() != Dimension::ThreeDIsotropic) throw ConfigError("shell tables need a 3D ladder");
  const auto g = quadrature.size();
  if (g % 2 != 0 || g == 0) throw ConfigError("shell tables: quadrature must have +/- node pairs");
  ShellTables t;
  t.shells = ladder.n_max() + 1;
  t.eta = eta;
  const int d = t.shells;
  const std::size_t half = g / 2;
  for (std::size_t p = 0; p < half; ++p) {
    const std::size_t j = half + p;
    const double u = quadrature.u[j];
    if (std::abs(u + quadrature.u[half - 1 - p]) > 1e-12 ||
        std::abs(quadrature.weights[j] - quadrature.weights[half - 1 - p]) > 1e-15) {
      throw ConfigError("shell tables: quadrature nodes must be mirror symmetric");
    }
    t.pair_u.push_back(u);
    t.pair_weight.push_back(quadrature.weights[j]);
  }
  t.axial.resize(half);
  t.transverse.resize(half);
  for (std::size_t p = 0; p < half; ++p) {
    const double u = t.pair_u[p];
    const Eigen::MatrixXd axial = reduced_fc_matrix(d, eta * u);
    Eigen::MatrixXd& split = t.axial[p];
    split.resize(d, d);
    for (int l = 0; l < d; ++l) split.row(t.parity_row(l)) = axial.row(l);
    // transverse probabilities; the 2D shell sum is invariant under rotations
    // about z, so the recoil can be put along x.
    const double kperp = eta * std::sqrt(std::max(0.0, 1.0 - u * u));
    const Eigen::MatrixXd r2 = reduced_fc_matrix(d, kperp).cwiseAbs2();
    Eigen::MatrixXd& tr = t.transverse[p];
    tr = Eigen::MatrixXd::Zero(d, d);
    for (int s = 0; s < d; ++s) {
      for (int target = 0; target < d; ++target) {
        double acc = 0.0;
        for (int mx = std::max(0, s - target); mx <= s; ++mx) acc += r2(mx + target - s, mx);
        tr(s, target) = acc;
      }
    }
  }
  t.laser = reduced_fc_matrix(d, eta);
  // Emission probabilities are isotropic in 3D: put the recoil along z with
  // the full eta; transverse quantum numbers are conserved.
  const Eigen::MatrixXd r2 = t.laser.cwiseAbs2();
  t.shell_emission = Eigen::MatrixXd::Zero(d, d);
  for (int l = 0; l < d; ++l) {
    const double gl = static_cast<double>(shell_degeneracy(l));
    for (int n = 0; n < d; ++n) {
      double acc = 0.0;
      for (int lz = std::max(0, l - n); lz <= l; ++lz) acc += (l - lz + 1) * r2(lz + n - l, lz);
      t.shell_emission(l, n) = acc / gl;
    }
  }
  return t;
}

ShellTables build_shell_tables(const LevelLadder& ladder, const AngularPattern& pattern, double eta) {
  return build_shell_tables(ladder, build_theta_quadrature(pattern), eta);
}

ShellRateModel::ShellRateModel(const LevelLadder& ladder, ShellTables tables, RateOptions options)
    : RateModel(ladder, options), tables_(std::move(tables)) {
  if (ladder.dimension() != Dimension::ThreeDIsotropic) throw ConfigError("ShellRateModel needs a 3D ladder");
  if (tables_.shells != ladder.n_max() + 1) throw ConfigError("shell tables and ladder disagree on the shell count");
}

std::vector<double> ShellRateModel::inhibition(const OccupationState& occ) const {
  const int d = tables_.shells;
  Eigen::VectorXd vacancy(d);
  for (int n = 0; n < d; ++n) vacancy(n) = 1.0 - occ.occupations[static_cast<std::size_t>(n)];
  const Eigen::VectorXd r = tables_.shell_emission * vacancy;
  std::vector<double> out(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) out[static_cast<std::size_t>(l)] = std::clamp(r(l), 0.0, 1.0);
  return out;
}

bool ShellRateModel::in_window(const ResolvedPulse& pulse, int excited_shell, int source_shell, double width) const {
  return std::abs(mismatch(pulse.delta, excited_shell, source_shell)) <= width;
}

namespace {

// Excited shells admitted for source shell m: the resonance window plus the
// nearest-resonant shells. Empty when the window itself is empty.
std::vector<char> admitted(const ShellRateModel& model, const ResolvedPulse& pulse, int m, double width,
                           int nearest, const std::function<double(int, int)>& mismatch) {
  const int d = model.tables().shells;
  std::vector<char> ok(static_cast<std::size_t>(d), 0);
  bool any = false;
  for (int l = 0; l < d; ++l) {
    if (std::abs(mismatch(l, m)) <= width) {
      ok[static_cast<std::size_t>(l)] = 1;
      any = true;
    }
  }
  if (!any) return {};
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  const int keep = std::min(nearest, d);
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](int a, int b) { return std::abs(mismatch(a, m)) < std::abs(mismatch(b, m)); });
  for (int k = 0; k < keep; ++k) ok[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
  (void)pulse;
  return ok;
}

}  // namespace

ExcitationEstimate ShellRateModel::excitation(const ResolvedPulse& pulse, const OccupationState& occ,
                                              std::span<const double> inhibition, bool with_pairs) const {
  const int d = tables_.shells;
  ExcitationEstimate est;
  est.p_exc.assign(static_cast<std::size_t>(d), 0.0);
  const double drive = 0.25 * pulse.rabi * pulse.rabi;
  const double g2 = pulse.gamma * pulse.gamma;
  const double width = window_width(pulse.gamma);
  auto mis = [&](int l, int m) { return mismatch(pulse.delta, l, m); };
  double weight_total = 0.0;
  double lifetime_sum = 0.0;
  double inhibition_sum = 0.0;
  for (int m = 0; m < d; ++m) {
    const double nm = occ.occupations[static_cast<std::size_t>(m)];
    if (nm <= options_.source_floor || drive == 0.0) continue;
    const auto ok = admitted(*this, pulse, m, width, options_.nearest, mis);
    if (ok.empty()) continue;
    for (int mz = 0; mz <= m; ++mz) {
      const int s = m - mz;
      for (int lz = 0; lz + s < d; ++lz) {
        const int l = s + lz;
        if (!ok[static_cast<std::size_t>(l)]) continue;
        const double r = tables_.laser(lz, mz);
        if (std::abs(r) < kAmplitudeFloor) continue;
        const double overlap = r * r;
        const double rl = inhibition[static_cast<std::size_t>(l)];
        const double w = rl + overlap;
        const double x = mis(l, m);
        const double denom = std::max(x * x + g2 * w * w, std::numeric_limits<double>::min());
        const double p = nm * (s + 1) * drive * overlap / denom;
        est.p_exc[static_cast<std::size_t>(m)] += p;
        weight_total += p;
        inhibition_sum += p * rl;
        if (w > 0.0 && std::isfinite(1.0 / w)) {
          lifetime_sum += p / (2.0 * pulse.gamma * w);
        } else {
          est.lifetime_infinite = true;
        }
        if (with_pairs) est.pairs.push_back({m, l, rl, overlap, p, x});
      }
    }
  }
  est.total = weight_total;
  if (weight_total > 0.0) {
    est.mean_lifetime =
        est.lifetime_infinite ? std::numeric_limits<double>::infinity() : lifetime_sum / weight_total;
    est.mean_inhibition = inhibition_sum / weight_total;
  }
  return est;
}

namespace {

// Coherent amplitudes c(mz, lz) for source shell m, columns in parity-split lz
// order; rows [0, m] real parts, [m+1, 2m+1] imaginary parts.
Eigen::MatrixXd shell_amplitudes(const ShellTables& t, const ResolvedPulse& pulse, int m,
                                 const std::vector<char>& ok, std::span<const double> inhibition,
                                 const std::function<double(int, int)>& mismatch) {
  const int d = t.shells;
  const int rows = m + 1;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * rows, d);
  for (int mz = 0; mz <= m; ++mz) {
    const int s = m - mz;
    for (int lz = 0; lz + s < d; ++lz) {
      const int l = s + lz;
      if (!ok[static_cast<std::size_t>(l)]) continue;
      const double r = t.laser(lz, mz);
      if (std::abs(r) < kAmplitudeFloor) continue;
      const double w = inhibition[static_cast<std::size_t>(l)] + r * r;
      const std::complex<double> v = pulse.gamma * r / std::complex<double>(mismatch(l, m), pulse.gamma * w);
      c(mz, t.parity_row(lz)) = v.real();
      c(rows + mz, t.parity_row(lz)) = v.imag();
    }
  }
  return c;
}

// sum_j w_j |S(mz, nz)|^2 for pair p, folded over the +/- members.
Eigen::MatrixXd folded_axial(const ShellTables& t, const Eigen::MatrixXd& c, int p) {
  const int d = t.shells;
  const int ne = t.even_count();
  const Eigen::Index rows = c.rows() / 2;
  const Eigen::MatrixXd& ax = t.axial[static_cast<std::size_t>(p)];
  const Eigen::MatrixXd even = c.leftCols(ne) * ax.topRows(ne);
  const Eigen::MatrixXd odd = c.rightCols(d - ne) * ax.bottomRows(d - ne);
  return 2.0 * t.pair_weight[static_cast<std::size_t>(p)] *
         (even.topRows(rows).cwiseAbs2() + even.bottomRows(rows).cwiseAbs2() + odd.topRows(rows).cwiseAbs2() +
          odd.bottomRows(rows).cwiseAbs2());
}

}  // namespace

RateMatrix ShellRateModel::build(const ResolvedPulse& pulse, const OccupationState& occ) const {
  const int d = tables_.shells;
  RateMatrix out;
  out.pulse = pulse;
  out.occupancy_hash = hash_hex(occupation_hash(occ));
  out.inhibition = inhibition(occ);
  out.excitation = excitation(pulse, occ, out.inhibition);
  out.gamma_rates.resize(d, d);
  out.core.resize(d, d);
  if (pulse.rabi == 0.0) return out;
  const double width = window_width(pulse.gamma);
  auto mis = [&](int l, int m) { return mismatch(pulse.delta, l, m); };

  std::vector<int> sources;
  std::vector<std::vector<char>> windows;
  for (int m = 0; m < d; ++m) {
    if (occ.occupations[static_cast<std::size_t>(m)] <= options_.source_floor) continue;
    auto ok = admitted(*this, pulse, m, width, options_.nearest, mis);
    if (ok.empty()) continue;
    sources.push_back(m);
    windows.push_back(std::move(ok));
  }
  if (sources.empty()) {
    out.warnings.push_back("rate window empty: no excited shell within the resonance window of any source");
    return out;
  }
  const int ns = static_cast<int>(sources.size());
  const int pairs = static_cast<int>(tables_.pair_u.size());
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(ns, d);
#pragma omp parallel for schedule(dynamic, 1)
  for (int si = 0; si < ns; ++si) {
    const int m = sources[static_cast<std::size_t>(si)];
    const Eigen::MatrixXd c =
        shell_amplitudes(tables_, pulse, m, windows[static_cast<std::size_t>(si)], out.inhibition, mis);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    for (int p = 0; p < pairs; ++p) {
      const Eigen::MatrixXd a = folded_axial(tables_, c, p);
      const Eigen::MatrixXd& tr = tables_.transverse[static_cast<std::size_t>(p)];
      for (int mz = 0; mz <= m; ++mz) {
        const int s = m - mz;
        for (int nz = 0; nz < d; ++nz) {
          const double v = a(mz, nz);
          if (v == 0.0) continue;
          for (int t = 0; nz + t < d; ++t) acc(nz + t) += tr(s, t) * v;
        }
      }
    }
    kernel.row(si) = acc.transpose() / static_cast<double>(shell_degeneracy(m));
  }

  const double pref = pulse.rabi * pulse.rabi / (2.0 * pulse.gamma);
  double max_rate = 0.0;
  for (int si = 0; si < ns; ++si) {
    for (int n = 0; n < d; ++n) {
      if (n != sources[static_cast<std::size_t>(si)]) max_rate = std::max(max_rate, pref * kernel(si, n));
    }
  }
  const double cut = options_.rate_floor * max_rate;
  std::vector<Eigen::Triplet<double>> rates;
  std::vector<Eigen::Triplet<double>> core;
  for (int si = 0; si < ns; ++si) {
    const int m = sources[static_cast<std::size_t>(si)];
    double outflow = 0.0;
    double core_outflow = 0.0;
    for (int n = 0; n < d; ++n) {
      if (n == m) continue;
      const double k = pref * kernel(si, n);
      if (k <= cut || k == 0.0) continue;
      const double g = k * (1.0 - occ.occupations[static_cast<std::size_t>(n)]);
      core.emplace_back(n, m, k);
      core_outflow += k;
      if (g > cut) {
        rates.emplace_back(n, m, g);
        outflow += g;
      }
    }
    out.max_outflow = std::max(out.max_outflow, outflow);
    out.max_core_outflow = std::max(out.max_core_outflow, core_outflow);
  }
  out.gamma_rates.setFromTriplets(rates.begin(), rates.end());
  out.core.setFromTriplets(core.begin(), core.end());
  return out;
}

Eigen::VectorXd ShellRateModel::axial_substate_rates(const ResolvedPulse& pulse, const OccupationState& occ,
                                                     int m) const {
  const int d = tables_.shells;
  const auto r = inhibition(occ);
  auto mis = [&](int l, int src) { return mismatch(pulse.delta, l, src); };
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  const auto ok = admitted(*this, pulse, m, window_width(pulse.gamma), options_.nearest, mis);
  if (ok.empty()) return acc;
  const Eigen::MatrixXd c = shell_amplitudes(tables_, pulse, m, ok, r, mis);
  for (int p = 0; p < static_cast<int>(tables_.pair_u.size()); ++p) {
    const Eigen::MatrixXd a = folded_axial(tables_, c, p);
    const Eigen::MatrixXd& tr = tables_.transverse[static_cast<std::size_t>(p)];
    // substate (0, 0, m): mz = m, transverse shell 0
    for (int nz = 0; nz < d; ++nz) {
      for (int t = 0; nz + t < d; ++t) acc(nz + t) += tr(0, t) * a(m, nz);
    }
  }
  const double pref = pulse.rabi * pulse.rabi / (2.0 * pulse.gamma);
  for (int n = 0; n < d; ++n) acc(n) *= pref * (1.0 - occ.occupations[static_cast<std::size_t>(n)]);
  return acc;
}

}  // namespace fermicool

#include "fermicool/rates.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>

#include "fermicool/errors.hpp"

namespace fermicool {

namespace {

constexpr int kSourceBlock = 32;
// Absorption amplitudes below this are outside the Franck-Condon support;
// their terms are far below the rate floor.
constexpr double kAmplitudeFloor = 1e-15;

double prefactor(const ResolvedPulse& pulse) { return pulse.rabi * pulse.rabi / (2.0 * pulse.gamma); }

}  // namespace

std::vector<std::string> validate(const Pulse& pulse) {
  std::vector<std::string> warnings;
  const std::string who = pulse.label.empty() ? std::string("pulse") : "pulse '" + pulse.label + "'";
  if (!std::isfinite(pulse.delta)) throw ConfigError(who + ": delta must be finite");
  if (!(pulse.rabi >= 0.0) || !std::isfinite(pulse.rabi)) {
    throw ConfigError(who + ": rabi must be >= 0");
  }
  if (!(pulse.duration > 0.0)) throw ConfigError(who + ": duration must be positive");
  if (pulse.repeats < 1) throw ConfigError(who + ": repeats must be >= 1");
  if (!(pulse.gamma.ceiling > 0.0)) throw ConfigError(who + ": gamma ceiling must be positive");
  if (pulse.gamma.kind == GammaPolicyKind::Fixed) {
    if (!(pulse.gamma.value > 0.0)) throw ConfigError(who + ": gamma must be positive");
    if (pulse.rabi >= pulse.gamma.value) {
      warnings.push_back(who + ": rabi >= gamma, adiabatic elimination of the excited state is questionable");
    }
  } else if (!(pulse.gamma.value > 0.0 && pulse.gamma.value < 1.0)) {
    throw ConfigError(who + ": lifetime fraction must lie in (0, 1)");
  }
  return warnings;
}

LevelRateModel::LevelRateModel(const LevelLadder& ladder, const FcTable& fc, RateOptions options)
    : RateModel(ladder, options), fc_(&fc) {
  if (ladder.dimension() != Dimension::OneD) {
    throw ConfigError("LevelRateModel needs a 1D ladder");
  }
  if (fc.n_max() != ladder.n_max()) {
    throw ConfigError("Franck-Condon table and ladder disagree on n_max");
  }
}

std::vector<double> LevelRateModel::inhibition(const OccupationState& occ) const {
  const int d = fc_->dim();
  Eigen::VectorXd vacancy(d);
  for (int n = 0; n < d; ++n) vacancy(n) = 1.0 - occ.occupations[static_cast<std::size_t>(n)];
  const Eigen::VectorXd r = fc_->emission_probability() * vacancy;
  std::vector<double> out(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) out[static_cast<std::size_t>(l)] = std::clamp(r(l), 0.0, 1.0);
  return out;
}

std::vector<int> LevelRateModel::window(const ResolvedPulse& pulse, int m) const {
  const int d = fc_->dim();
  const double width = window_width(pulse.gamma);
  std::vector<int> ls;
  for (int l = 0; l < d; ++l) {
    if (std::abs(mismatch(pulse.delta, l, m)) <= width && std::abs(fc_->laser()(l, m)) >= kAmplitudeFloor) {
      ls.push_back(l);
    }
  }
  if (ls.empty()) return ls;
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  const int keep = std::min(options_.nearest, d);
  std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](int a, int b) {
    return std::abs(mismatch(pulse.delta, a, m)) < std::abs(mismatch(pulse.delta, b, m));
  });
  for (int k = 0; k < keep; ++k) ls.push_back(order[static_cast<std::size_t>(k)]);
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  return ls;
}

ExcitationEstimate LevelRateModel::excitation(const ResolvedPulse& pulse, const OccupationState& occ,
                                              std::span<const double> inhibition,
                                              bool with_pairs) const {
  const int d = fc_->dim();
  ExcitationEstimate est;
  est.p_exc.assign(static_cast<std::size_t>(d), 0.0);
  const double drive = 0.25 * pulse.rabi * pulse.rabi;
  const double g2 = pulse.gamma * pulse.gamma;
  double weight_total = 0.0;
  double lifetime_sum = 0.0;
  double inhibition_sum = 0.0;
  for (int m = 0; m < d; ++m) {
    const double nm = occ.occupations[static_cast<std::size_t>(m)];
    if (nm <= options_.source_floor || drive == 0.0) continue;
    for (int l : window(pulse, m)) {
      const double r = fc_->laser()(l, m);
      const double overlap = r * r;
      if (overlap == 0.0) continue;
      const double width = inhibition[static_cast<std::size_t>(l)] + overlap;
      const double x = mismatch(pulse.delta, l, m);
      const double denom = std::max(x * x + g2 * width * width, std::numeric_limits<double>::min());
      const double p = nm * drive * overlap / denom;
      est.p_exc[static_cast<std::size_t>(m)] += p;
      weight_total += p;
      inhibition_sum += p * inhibition[static_cast<std::size_t>(l)];
      if (width > 0.0 && std::isfinite(1.0 / width)) {
        lifetime_sum += p / (2.0 * pulse.gamma * width);
      } else {
        est.lifetime_infinite = true;
      }
      if (with_pairs) est.pairs.push_back({m, l, inhibition[static_cast<std::size_t>(l)], overlap, p, x});
    }
  }
  est.total = weight_total;
  if (weight_total > 0.0) {
    est.mean_lifetime = est.lifetime_infinite ? std::numeric_limits<double>::infinity()
                                              : lifetime_sum / weight_total;
    est.mean_inhibition = inhibition_sum / weight_total;
  }
  return est;
}

RateMatrix LevelRateModel::build(const ResolvedPulse& pulse, const OccupationState& occ) const {
  const int d = fc_->dim();
  const int ne = fc_->even_count();
  RateMatrix out;
  out.pulse = pulse;
  out.occupancy_hash = hash_hex(occupation_hash(occ));
  out.inhibition = inhibition(occ);
  out.excitation = excitation(pulse, occ, out.inhibition);
  out.gamma_rates.resize(d, d);
  out.core.resize(d, d);
  if (pulse.rabi == 0.0) return out;

  std::vector<int> sources;
  std::vector<std::vector<int>> windows;
  for (int m = 0; m < d; ++m) {
    if (occ.occupations[static_cast<std::size_t>(m)] <= options_.source_floor) continue;
    auto w = window(pulse, m);
    if (w.empty()) continue;
    sources.push_back(m);
    windows.push_back(std::move(w));
  }
  if (sources.empty()) {
    out.warnings.push_back("rate window empty: no excited level within the resonance window of any source");
    return out;
  }
  const int ns = static_cast<int>(sources.size());

  // Absorption-weighted coherent amplitudes c_ml, columns in parity-split order.
  Eigen::MatrixXd c_re = Eigen::MatrixXd::Zero(ns, d);
  Eigen::MatrixXd c_im = Eigen::MatrixXd::Zero(ns, d);
  for (int s = 0; s < ns; ++s) {
    const int m = sources[static_cast<std::size_t>(s)];
    for (int l : windows[static_cast<std::size_t>(s)]) {
      const double r = fc_->laser()(l, m);
      if (r == 0.0) continue;
      const double width = out.inhibition[static_cast<std::size_t>(l)] + r * r;
      const std::complex<double> denom(mismatch(pulse.delta, l, m), pulse.gamma * width);
      const std::complex<double> c = pulse.gamma * r / denom;
      c_re(s, fc_->parity_row(l)) = c.real();
      c_im(s, fc_->parity_row(l)) = c.imag();
    }
  }

  // K(s, n) = sum_j w_j |sum_l c_ml r_ln(kappa_j)|^2, folded over +/- node pairs:
  // |A(k)|^2 + |A(-k)|^2 = 2 (|even-l part|^2 + |odd-l part|^2).
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(ns, d);
  const int blocks = (ns + kSourceBlock - 1) / kSourceBlock;
#pragma omp parallel for schedule(dynamic, 1)
  for (int rb = 0; rb < blocks; ++rb) {
    const int s0 = rb * kSourceBlock;
    const int nb = std::min(kSourceBlock, ns - s0);
    Eigen::MatrixXd stacked(2 * nb, d);
    stacked.topRows(nb) = c_re.middleRows(s0, nb);
    stacked.bottomRows(nb) = c_im.middleRows(s0, nb);
    // nonzero column span of this source block in each parity half
    int cfirst[2] = {d, d};
    int clast[2] = {0, 0};
    for (int parity = 0; parity < 2; ++parity) {
      const int c0 = parity == 0 ? 0 : ne;
      const int c1 = parity == 0 ? ne : d;
      for (int col = c0; col < c1; ++col) {
        if (stacked.col(col).cwiseAbs().maxCoeff() > 0.0) {
          cfirst[parity] = std::min(cfirst[parity], col - c0);
          clast[parity] = col - c0 + 1;
        }
      }
    }
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nb, d);
    Eigen::MatrixXd product;
    for (int p = 0; p < fc_->pair_count(); ++p) {
      const Eigen::MatrixXd& e = fc_->emission(p);
      const double w2 = 2.0 * fc_->pair_weight(p);
      for (int parity = 0; parity < 2; ++parity) {
        if (clast[parity] <= cfirst[parity]) continue;
        const int offset = parity == 0 ? 0 : ne;
        for (int b = 0; b < fc_->column_blocks(); ++b) {
          const auto range = fc_->support(p, b, parity);
          const int first = std::max(range.first, cfirst[parity]);
          const int last = std::min(range.last, clast[parity]);
          if (last <= first) continue;
          const int n0 = b * FcTable::kColumnBlock;
          const int nw = std::min(FcTable::kColumnBlock, d - n0);
          product.noalias() = stacked.middleCols(offset + first, last - first) *
                              e.block(offset + first, n0, last - first, nw);
          local.middleCols(n0, nw) +=
              w2 * (product.topRows(nb).cwiseAbs2() + product.bottomRows(nb).cwiseAbs2());
        }
      }
    }
    kernel.middleRows(s0, nb) = local;
  }

  const double pref = prefactor(pulse);
  double max_rate = 0.0;
  for (int s = 0; s < ns; ++s) {
    const int m = sources[static_cast<std::size_t>(s)];
    for (int n = 0; n < d; ++n) {
      if (n == m) continue;
      max_rate = std::max(max_rate, pref * kernel(s, n));
    }
  }
  const double cut = options_.rate_floor * max_rate;
  std::vector<Eigen::Triplet<double>> rates;
  std::vector<Eigen::Triplet<double>> core;
  for (int s = 0; s < ns; ++s) {
    const int m = sources[static_cast<std::size_t>(s)];
    double outflow = 0.0;
    double core_outflow = 0.0;
    for (int n = 0; n < d; ++n) {
      if (n == m) continue;
      const double k = pref * kernel(s, n);
      if (k <= cut || k == 0.0) continue;
      const double vacancy = 1.0 - occ.occupations[static_cast<std::size_t>(n)];
      const double g = k * vacancy;
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

double compute_R(int l, const OccupationState& occ, const FcTable& fc) {
  double r = 0.0;
  for (int n = 0; n < fc.dim(); ++n) {
    r += fc.emission_probability()(l, n) * (1.0 - occ.occupations[static_cast<std::size_t>(n)]);
  }
  return std::clamp(r, 0.0, 1.0);
}

double compute_Delta(int l, int m, const FcTable& fc) {
  const double r = fc.laser()(l, m);
  return r * r;
}

RateMatrix build_rate_matrix(const Pulse& pulse, const OccupationState& occ, const LevelLadder& ladder,
                             const FcTable& fc, const RateOptions& options) {
  if (pulse.gamma.kind != GammaPolicyKind::Fixed) {
    throw ConfigError("build_rate_matrix: gamma policy unresolved (call resolve_gamma first)");
  }
  auto warnings = validate(pulse);
  LevelRateModel model(ladder, fc, options);
  RateMatrix out = model.build({pulse.delta, pulse.rabi, pulse.duration, pulse.gamma.value}, occ);
  out.warnings.insert(out.warnings.begin(), warnings.begin(), warnings.end());
  return out;
}

ExcitationEstimate estimate_excited_population(const ResolvedPulse& pulse, const OccupationState& occ,
                                               const RateModel& model, bool with_pairs) {
  const auto r = model.inhibition(occ);
  return model.excitation(pulse, occ, r, with_pairs);
}

GammaResolution resolve_gamma(const Pulse& pulse, const OccupationState& occ, const RateModel& model) {
  GammaResolution res;
  const auto r = model.inhibition(occ);
  auto lifetime = [&](double gamma) {
    return model.excitation({pulse.delta, pulse.rabi, pulse.duration, gamma}, occ, r).mean_lifetime;
  };
  if (pulse.gamma.kind == GammaPolicyKind::Fixed) {
    res.gamma = pulse.gamma.value;
  } else {
    const double target = pulse.gamma.value * pulse.duration;
    double lo = std::log(kGammaLow);
    double hi = std::log(kGammaHigh);
    const double f_lo = lifetime(kGammaLow) - target;
    const double f_hi = lifetime(kGammaHigh) - target;
    if (!(f_lo > 0.0 && f_hi < 0.0)) {
      res.bracket_failed = true;
      res.gamma = std::abs(f_lo) <= std::abs(f_hi) ? kGammaLow : kGammaHigh;
      if (f_lo <= 0.0) res.gamma = kGammaLow;
      if (f_hi >= 0.0) res.gamma = kGammaHigh;
      std::ostringstream msg;
      msg << "resolve_gamma: no root of lifetime(gamma) = " << target << " in [" << kGammaLow << ", "
          << kGammaHigh << "], using " << res.gamma;
      res.warnings.push_back(msg.str());
    } else {
      for (res.iterations = 0; res.iterations < 60 && hi - lo > 1e-10; ++res.iterations) {
        const double mid = 0.5 * (lo + hi);
        if (lifetime(std::exp(mid)) > target) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      res.gamma = std::exp(0.5 * (lo + hi));
    }
    if (res.gamma > pulse.gamma.ceiling) {
      res.clamped = true;
      std::ostringstream msg;
      msg << "resolve_gamma: gamma " << res.gamma << " clamped to ceiling " << pulse.gamma.ceiling;
      res.warnings.push_back(msg.str());
      res.gamma = pulse.gamma.ceiling;
    }
  }
  const auto est = model.excitation({pulse.delta, pulse.rabi, pulse.duration, res.gamma}, occ, r);
  res.mean_lifetime = est.mean_lifetime;
  const double alpha = model.ladder().spec().alpha;
  const int sideband = static_cast<int>(std::lround(pulse.delta));
  if (alpha > 0.0 && sideband != 0) {
    res.band_width = 4.0 * res.gamma * est.mean_inhibition / (alpha * std::abs(sideband));
  }
  return res;
}

}  // namespace fermicool

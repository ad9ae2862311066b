#include "fermicool/dynamics.hpp"

#include <algorithm>
#include <complex>
#include <limits>
#include <cstdint>
#include <memory>

#include <Eigen/LU>
#include <cmath>
#include <sstream>

namespace fermicool {

namespace {

const double kRosenbrockGamma = 1.0 + 1.0 / std::sqrt(2.0);

Eigen::VectorXd degeneracy_vector(const LevelLadder& ladder, std::size_t size) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(size));
  for (std::size_t n = 0; n < size; ++n) g(static_cast<Eigen::Index>(n)) = ladder.degeneracy(static_cast<int>(n));
  return g;
}

Eigen::VectorXd to_vector(const OccupationState& occ) {
  return Eigen::Map<const Eigen::VectorXd>(occ.occupations.data(), static_cast<Eigen::Index>(occ.size()));
}

void from_vector(const Eigen::VectorXd& v, OccupationState& occ) {
  occ.occupations.assign(v.data(), v.data() + v.size());
}

// Linear flow on a frozen Gamma.
struct LinearFlow {
  const Eigen::SparseMatrix<double>& gamma;
  Eigen::VectorXd g;
  Eigen::VectorXd inv_g;
  Eigen::VectorXd out;  // sum_n Gamma_{n<-m}

  LinearFlow(const RateMatrix& rates, const LevelLadder& ladder, std::size_t size)
      : gamma(rates.gamma_rates), g(degeneracy_vector(ladder, size)) {
    inv_g = g.cwiseInverse();
    out = Eigen::VectorXd::Zero(g.size());
    for (int k = 0; k < gamma.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(gamma, k); it; ++it) out(it.col()) += it.value();
    }
  }
  void derivative(const Eigen::VectorXd& n, Eigen::VectorXd& d) const {
    d = inv_g.cwiseProduct(gamma * g.cwiseProduct(n)) - out.cwiseProduct(n);
  }
};

// The core rates see occupations only through the inhibition R, the vacancy
// factor being live; staleness is measured on R.
double inhibition_drift(const RateModel& model, const Eigen::VectorXd& y, const std::vector<double>& at_build,
                        OccupationState& scratch) {
  from_vector(y, scratch);
  const auto r = model.inhibition(scratch);
  double worst = 0.0;
  for (std::size_t l = 0; l < r.size(); ++l) worst = std::max(worst, std::abs(r[l] - at_build[l]));
  return worst;
}

constexpr int kGridBits = 40;

// Two-stage linearly implicit Rosenbrock scheme
//   (I - g h J) k1 = f(y),  (I - g h J) k2 = f(y + h k1) - 2 k1,  y' = y + h (3 k1 + k2) / 2,
// g = 1 + 1/sqrt(2): L-stable and second order for any J, so J and the
// factorizations are kept until the step size or the rates change. The error
// estimate compares one step with two half steps.
class Rosenbrock {
 public:
  explicit Rosenbrock(Eigen::Index n) : jac_(n, n) {}

  void reset(const PauliFlow& flow, const Eigen::VectorXd& y) {
    flow.jacobian(y, jac_);
    flow.derivative(y, f0_);
    cached_h_ = -1.0;
  }
  // Re-evaluates f at the new state; J stays.
  void advance(const PauliFlow& flow, const Eigen::VectorXd& y) { flow.derivative(y, f0_); }

  double attempt(const PauliFlow& flow, const Eigen::VectorXd& y, double h) {
    if (h != cached_h_) {
      if (h == 0.5 * cached_h_) {
        std::swap(full_lu_, half_lu_);
      } else {
        factor(full_lu_, h);
      }
      factor(half_lu_, 0.5 * h);
      cached_h_ = h;
    }
    stage(flow, full_lu_, f0_, y, h, full_);
    stage(flow, half_lu_, f0_, y, 0.5 * h, mid_);
    flow.derivative(mid_, f1_);
    stage(flow, half_lu_, f1_, mid_, 0.5 * h, out_);
    return (out_ - full_).cwiseAbs().maxCoeff() / 3.0;
  }
  const Eigen::VectorXd& result() const { return out_; }

 private:
  void factor(Eigen::PartialPivLU<Eigen::MatrixXd>& lu, double h) {
    Eigen::MatrixXd m = -kRosenbrockGamma * h * jac_;
    m.diagonal().array() += 1.0;
    lu.compute(m);
  }
  static void stage(const PauliFlow& flow, const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, const Eigen::VectorXd& f,
                    const Eigen::VectorXd& y, double h, Eigen::VectorXd& out) {
    const Eigen::VectorXd k1 = lu.solve(f);
    Eigen::VectorXd f1;
    flow.derivative(y + h * k1, f1);
    const Eigen::VectorXd k2 = lu.solve(f1 - 2.0 * k1);
    out = y + (1.5 * h) * k1 + (0.5 * h) * k2;
  }

  Eigen::MatrixXd jac_;
  Eigen::PartialPivLU<Eigen::MatrixXd> full_lu_;
  Eigen::PartialPivLU<Eigen::MatrixXd> half_lu_;
  double cached_h_ = -1.0;
  Eigen::VectorXd f0_, f1_, full_, mid_, out_;
};

template <class Flow>
Eigen::VectorXd rk4(const Flow& flow, const Eigen::VectorXd& y, double h) {
  Eigen::VectorXd k1, k2, k3, k4;
  flow.derivative(y, k1);
  flow.derivative(y + 0.5 * h * k1, k2);
  flow.derivative(y + 0.5 * h * k2, k3);
  flow.derivative(y + h * k3, k4);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

double stability_bound(const RateMatrix& rates, double safety) {
  return rates.max_outflow > 0.0 ? safety / rates.max_outflow : std::numeric_limits<double>::infinity();
}

StepOutcome step(const OccupationState& occ, const RateMatrix& rates, const LevelLadder& ladder, double dt,
                 double safety) {
  StepOutcome res;
  res.dt = dt;
  if (dt > stability_bound(rates, safety)) {
    res.accepted = false;
    res.dt = 0.5 * dt;
    res.state = occ;
    return res;
  }
  res.state = occ;
  if (rates.gamma_rates.nonZeros() > 0) {
    LinearFlow flow(rates, ladder, occ.size());
    from_vector(rk4(flow, to_vector(occ), dt), res.state);
  }
  res.state.time = occ.time + dt;
  return res;
}

PauliFlow::PauliFlow(const RateMatrix& rates, const LevelLadder& ladder) : core_(rates.core) {
  g_ = degeneracy_vector(ladder, static_cast<std::size_t>(rates.core.rows()));
  inv_g_ = g_.cwiseInverse();
  // K_nm g_m / g_n
  scaled_ = inv_g_.asDiagonal() * core_ * g_.asDiagonal();
  max_outflow_ = rates.max_outflow;
}

void PauliFlow::derivative(const Eigen::VectorXd& n, Eigen::VectorXd& out) const {
  const Eigen::VectorXd vacancy = Eigen::VectorXd::Ones(n.size()) - n;
  const Eigen::VectorXd inflow = scaled_ * n;
  const Eigen::VectorXd outflow = core_.transpose() * vacancy;
  out = vacancy.cwiseProduct(inflow) - n.cwiseProduct(outflow);
}

void PauliFlow::jacobian(const Eigen::VectorXd& n, Eigen::MatrixXd& out) const {
  const Eigen::VectorXd vacancy = Eigen::VectorXd::Ones(n.size()) - n;
  const Eigen::VectorXd inflow = scaled_ * n;
  const Eigen::VectorXd outflow = core_.transpose() * vacancy;
  out.noalias() = vacancy.asDiagonal() * scaled_;
  out.noalias() += n.asDiagonal() * core_.transpose();
  out.diagonal() -= inflow + outflow;
}

std::string to_string(LossPolicy policy) {
  switch (policy) {
    case LossPolicy::SteadyState: return "steady-state";
    case LossPolicy::Survival: return "survival";
    case LossPolicy::PulseEnd: return "pulse-end";
    case LossPolicy::None: return "none";
  }
  return "?";
}

LossPolicy loss_policy_from_string(const std::string& name) {
  if (name == "steady-state") return LossPolicy::SteadyState;
  if (name == "survival") return LossPolicy::Survival;
  if (name == "pulse-end") return LossPolicy::PulseEnd;
  if (name == "none") return LossPolicy::None;
  throw ConfigError("numerics.loss: unknown policy '" + name + "' (expected steady-state, survival, pulse-end or none)");
}

LossReport apply_loss(OccupationState& occ, std::span<const double> p_exc, const LevelLadder& ladder) {
  LossReport rep;
  for (std::size_t m = 0; m < occ.size() && m < p_exc.size(); ++m) {
    const double want = p_exc[m];
    if (want <= 0.0) continue;
    const double g = ladder.degeneracy(static_cast<int>(m));
    const double have = occ.occupations[m] * g;
    if (want > have) {
      rep.overshoot += want - have;
      rep.removed += have;
      occ.occupations[m] = 0.0;
    } else {
      rep.removed += want;
      occ.occupations[m] = (have - want) / g;
    }
  }
  recount(occ, ladder);
  occ.losses_cumulative += rep.removed;
  return rep;
}

std::vector<double> loss_profile(const ExcitationEstimate& estimate, const ResolvedPulse& pulse,
                                 const LevelLadder& ladder, LossPolicy policy, double tail) {
  std::vector<double> out(ladder.size(), 0.0);
  switch (policy) {
    case LossPolicy::None:
      break;
    case LossPolicy::SteadyState:
      std::copy(estimate.p_exc.begin(), estimate.p_exc.end(), out.begin());
      break;
    case LossPolicy::Survival:
      for (const auto& pair : estimate.pairs) {
        const double decay = 2.0 * pulse.gamma * (pair.inhibition + pair.overlap);
        out[static_cast<std::size_t>(pair.m)] += pair.excited * std::exp(-decay * tail);
      }
      break;
    case LossPolicy::PulseEnd:
      for (const auto& pair : estimate.pairs) {
        const double w = pair.inhibition + pair.overlap;
        const std::complex<double> z(pulse.gamma * w, pair.detuning);
        const double mag = std::abs(z);
        // |1 - exp(-z t)|^2 / |z|^2, continuous through z = 0
        const double build_up = mag * pulse.duration < 1e-6
                                    ? pulse.duration * pulse.duration
                                    : std::norm(1.0 - std::exp(-z * pulse.duration)) / (mag * mag);
        const double steady_scale = std::max(pulse.gamma * pulse.gamma * w * w + pair.detuning * pair.detuning,
                                             std::numeric_limits<double>::min());
        const double decay = 2.0 * pulse.gamma * w;
        out[static_cast<std::size_t>(pair.m)] += pair.excited * steady_scale * build_up * std::exp(-decay * tail);
      }
      break;
  }
  return out;
}

PulseReport run_pulse(OccupationState& occ, const Pulse& pulse, const RateModel& model,
                      const DynamicsOptions& options) {
  const LevelLadder& ladder = model.ladder();
  PulseReport report;
  report.warnings = validate(pulse);
  const double e_start = mean_energy(occ, ladder);
  const double t0 = occ.time;

  const GammaResolution res = resolve_gamma(pulse, occ, model);
  report.gamma = res.gamma;
  report.gamma_clamped = res.clamped;
  report.mean_lifetime = res.mean_lifetime;
  report.warnings.insert(report.warnings.end(), res.warnings.begin(), res.warnings.end());
  const ResolvedPulse rp{pulse.delta, pulse.rabi, pulse.duration, res.gamma};

  if (pulse.rabi == 0.0) {
    occ.time = t0 + pulse.duration;
    return report;
  }

  const double tp = pulse.duration;
  if (options.refresh <= 0.0 && options.segments < 1) throw ConfigError("segments must be >= 1");
  const double refresh = options.refresh > 0.0 ? std::min(options.refresh, tp) : tp / options.segments;
  Eigen::VectorXd y = to_vector(occ);
  RateMatrix rates = model.build(rp, occ);
  std::vector<double> r_build = rates.inhibition;
  ++report.builds;
  report.warnings.insert(report.warnings.end(), rates.warnings.begin(), rates.warnings.end());
  if (rates.empty()) {
    report.warnings.push_back("empty rate matrix: pulse completed as a no-op");
    occ.time = t0 + tp;
    return report;
  }
  auto flow = std::make_unique<PauliFlow>(rates, ladder);

  const int segments = std::max(1, static_cast<int>(std::ceil(tp / refresh - 1e-9)));
  Rosenbrock stepper(y.size());
  stepper.reset(*flow, y);
  int level = -1;  // step = segment length / 2^level
  for (int seg = 0; seg < segments; ++seg) {
    const double t_begin = seg * refresh;
    const double length = (seg + 1 == segments ? tp : (seg + 1) * refresh) - t_begin;
    if (seg > 0) {
      from_vector(y, occ);
      rates = model.build(rp, occ);
      ++report.builds;
      r_build = rates.inhibition;
      flow = std::make_unique<PauliFlow>(rates, ladder);
      stepper.reset(*flow, y);
    }
    // Steps live on a dyadic grid of the segment so that factorizations can
    // be reused while the step size is unchanged.
    const double bound = flow->max_outflow() > 0.0 ? options.safety / flow->max_outflow() : length;
    if (level < 0) level = 0;
    while (length / std::ldexp(1.0, level) > bound * (1.0 + 1e-12)) ++level;
    std::int64_t pos = 0;  // in units of length / 2^kGridBits
    const std::int64_t end = std::int64_t{1} << kGridBits;
    while (pos < end) {
      const double h = length / std::ldexp(1.0, level);
      const double err = stepper.attempt(*flow, y, h);
      if (!std::isfinite(err) || err > options.tolerance) {
        ++report.rejected;
        if (++level > kGridBits) {
          from_vector(y, occ);
          occ.time = t0 + t_begin + length * std::ldexp(static_cast<double>(pos), -kGridBits);
          throw SimulationAbort("step size underflow in the pulse integrator", occ);
        }
        continue;
      }
      const Eigen::VectorXd& next = stepper.result();
      const double lo = next.minCoeff();
      const double hi = next.maxCoeff();
      // An overshoot inside the local error bound is retried on a finer step;
      // one that survives down to the finest grid is a genuine failure.
      if (lo < -options.box_tolerance || hi > 1.0 + options.box_tolerance) {
        ++report.rejected;
        if (++level > kGridBits) {
          from_vector(y, occ);
          occ.time = t0 + t_begin + length * std::ldexp(static_cast<double>(pos), -kGridBits);
          std::ostringstream msg;
          msg << "occupation left [0, 1] (min " << lo << ", max " << hi << ") at t = " << occ.time;
          throw SimulationAbort(msg.str(), occ);
        }
        continue;
      }
      y = next.cwiseMax(0.0).cwiseMin(1.0);
      pos += std::int64_t{1} << (kGridBits - level);
      ++report.steps;
      // grow only on the coarser grid and within the stability bound
      if (err < options.tolerance / 16.0 && level > 0 && pos % (std::int64_t{1} << (kGridBits - level + 1)) == 0 &&
          2.0 * h <= bound * (1.0 + 1e-12)) {
        --level;
      }
      if (pos < end && inhibition_drift(model, y, r_build, occ) > options.drift) {
        from_vector(y, occ);
        rates = model.build(rp, occ);
        ++report.builds;
        r_build = rates.inhibition;
        flow = std::make_unique<PauliFlow>(rates, ladder);
        stepper.reset(*flow, y);
        const double new_bound = flow->max_outflow() > 0.0 ? options.safety / flow->max_outflow() : length;
        while (length / std::ldexp(1.0, level) > new_bound * (1.0 + 1e-12)) ++level;
      } else {
        stepper.advance(*flow, y);
      }
    }
  }
  from_vector(y, occ);
  occ.time = t0 + tp;
  recount(occ, ladder);

  const auto r = model.inhibition(occ);
  const bool pairs = options.loss == LossPolicy::Survival || options.loss == LossPolicy::PulseEnd;
  const auto est = model.excitation(rp, occ, r, pairs);
  report.excited = est.total;
  report.excited_fraction = occ.atom_count > 0.0 ? est.total / occ.atom_count : 0.0;
  const auto profile = loss_profile(est, rp, ladder, options.loss, options.loss_tail);
  const LossReport loss = apply_loss(occ, profile, ladder);
  report.removed = loss.removed;
  report.overshoot = loss.overshoot;
  report.energy_change = mean_energy(occ, ladder) - e_start;
  return report;
}

TraceSample sample_state(const OccupationState& occ, const LevelLadder& ladder, double sommerfeld_limit) {
  TraceSample s;
  s.time = occ.time;
  s.atom_count = occ.atom_count;
  s.mean_energy = mean_energy(occ, ladder);
  s.losses = occ.losses_cumulative;
  s.t_over_tf = occ.atom_count > 0.0 ? measure(occ, ladder, sommerfeld_limit).t_over_tf : 0.0;
  return s;
}

SimulationTrace run_sequence(OccupationState& occ, const std::vector<Stage>& stages, const RateModel& model,
                             const DynamicsOptions& options, const PulseCallback& callback) {
  const LevelLadder& ladder = model.ladder();
  SimulationTrace trace;
  recount(occ, ladder);
  trace.samples.push_back(sample_state(occ, ladder, options.sommerfeld_limit));
  bool halted = false;
  for (std::size_t si = 0; si < stages.size() && !halted; ++si) {
    const Stage& stage = stages[si];
    StageSummary summary;
    summary.label = stage.label;
    summary.stop_reason = "max_cycles";
    const double stage_start = occ.time;
    double e_prev = mean_energy(occ, ladder);
    if (stage.pulses.empty()) summary.stop_reason = "empty";
    bool done = stage.pulses.empty();
    while (!done && summary.cycles < stage.stop.max_cycles) {
      for (const Pulse& pulse : stage.pulses) {
        for (int rep = 0; rep < pulse.repeats && !done; ++rep) {
          PulseLogEntry entry;
          entry.stage = static_cast<int>(si);
          entry.cycle = summary.cycles;
          entry.label = pulse.label;
          entry.report = run_pulse(occ, pulse, model, options);
          entry.time = occ.time;
          ++summary.pulses;
          trace.max_overshoot = std::max(trace.max_overshoot, entry.report.overshoot);
          if (!(occ.atom_count > 0.0)) throw SimulationAbort("all atoms lost", occ);
          TraceSample s;
          try {
            s = sample_state(occ, ladder, options.sommerfeld_limit);
          } catch (const SimulationAbort&) {
            throw;
          } catch (const NumericalError& e) {
            throw SimulationAbort(std::string("thermometry failed: ") + e.what(), occ);
          }
          trace.samples.push_back(s);
          if (callback && !callback(entry, s)) {
            done = halted = true;
            summary.stop_reason = "interrupted";
          }
          trace.pulses.push_back(std::move(entry));
          if (!done && stage.stop.target_t_over_tf > 0.0 && s.t_over_tf <= stage.stop.target_t_over_tf) {
            done = true;
            summary.stop_reason = "target";
          }
          if (!done && stage.stop.max_time > 0.0 && occ.time - stage_start >= stage.stop.max_time * (1 - 1e-12)) {
            done = true;
            summary.stop_reason = "max_time";
          }
        }
        if (done) break;
      }
      ++summary.cycles;
      const double e = mean_energy(occ, ladder);
      if (!done && stage.stop.plateau > 0.0 && std::abs(e - e_prev) < stage.stop.plateau * std::abs(e_prev)) {
        done = true;
        summary.stop_reason = "plateau";
      }
      e_prev = e;
    }
    summary.end = trace.samples.back();
    summary.snapshot = occ;
    trace.stages.push_back(std::move(summary));
  }
  return trace;
}

}  // namespace fermicool

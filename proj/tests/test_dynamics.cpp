#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "fermicool/dynamics.hpp"
#include "fermicool/errors.hpp"
#include "fermicool/fc.hpp"
#include "fermicool/rates.hpp"
#include "fermicool/statmech.hpp"
#include "fermicool/trap.hpp"

using namespace fermicool;

namespace {

struct Setup {
  explicit Setup(int n_max, double alpha = 0.0, Dimension dim = Dimension::OneD)
      : ladder(build_ladder(spec(n_max, alpha, dim))) {}
  static TrapSpec spec(int n_max, double alpha, Dimension dim) {
    TrapSpec s;
    s.n_max = n_max;
    s.alpha = alpha;
    s.dimension = dim;
    return s;
  }
  LevelLadder ladder;
};

OccupationState thermal(const LevelLadder& ladder, double atoms, double t_over_tf) {
  const auto fs = fermi_surface(ladder, atoms);
  return fermi_dirac_init(ladder, atoms, t_over_tf * fs.fermi_temperature, 1.0).state;
}

Pulse make_pulse(double delta, double rabi, double gamma, double duration = 100.0) {
  Pulse p;
  p.delta = delta;
  p.rabi = rabi;
  p.duration = duration;
  p.gamma = {GammaPolicyKind::Fixed, gamma, 8.0};
  return p;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("explicit step matches the matrix exponential of the frozen generator") {
  Setup s(20);
  const FcTable table = build_fc_table(s.ladder, {PatternKind::DipoleLinear, 16}, 2.0);
  const OccupationState occ = thermal(s.ladder, 8.0, 0.5);
  const RateMatrix rm = build_rate_matrix(make_pulse(-4.0, 0.25, 0.5), occ, s.ladder, table);
  const Eigen::MatrixXd g = Eigen::MatrixXd(rm.gamma_rates);
  const int d = static_cast<int>(g.rows());
  // dN_n/dt = sum_m g_m/g_n Gamma_nm N_m - N_n sum_m Gamma_mn (1D: g = 1)
  Eigen::MatrixXd a = g;
  for (int n = 0; n < d; ++n) a(n, n) -= g.col(n).sum();
  const double dt = 0.02 * stability_bound(rm, 0.1);
  const StepOutcome out = step(occ, rm, s.ladder, dt);
  REQUIRE(out.accepted);
  const Eigen::VectorXd n0 = Eigen::Map<const Eigen::VectorXd>(occ.occupations.data(), d);
  const Eigen::VectorXd exact = (a * dt).exp() * n0;
  for (int n = 0; n < d; ++n) CHECK(out.state[static_cast<std::size_t>(n)] == doctest::Approx(exact(n)).epsilon(1e-13).scale(1e-12));
  CHECK(out.state.time == doctest::Approx(dt));

  const StepOutcome rejected = step(occ, rm, s.ladder, 10.0 * stability_bound(rm, 0.1));
  CHECK_FALSE(rejected.accepted);
  CHECK(rejected.dt == doctest::Approx(5.0 * stability_bound(rm, 0.1)));
}

TEST_CASE("Pauli flow conserves atoms and its Jacobian matches finite differences") {
  Setup s(12, 0.0, Dimension::ThreeDIsotropic);
  const ShellRateModel model(s.ladder, build_shell_tables(s.ladder, AngularPattern{PatternKind::DipoleLinear, 8}, 1.5));
  const OccupationState occ = thermal(s.ladder, 120.0, 0.4);
  const RateMatrix rm = model.build({-3.0, 0.2, 100.0, 0.5}, occ);
  const PauliFlow flow(rm, s.ladder);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(occ.occupations.data(), 13);
  Eigen::VectorXd f;
  flow.derivative(y, f);
  double flux = 0.0;
  double scale = 0.0;
  for (int n = 0; n <= 12; ++n) {
    flux += s.ladder.degeneracy(n) * f(n);
    scale += s.ladder.degeneracy(n) * std::abs(f(n));
  }
  CHECK(std::abs(flux) < 1e-13 * scale);
  Eigen::MatrixXd jac(13, 13);
  flow.jacobian(y, jac);
  const double h = 1e-6;
  for (int k = 0; k < 13; ++k) {
    Eigen::VectorXd yp = y, ym = y, fp, fm;
    yp(k) += h;
    ym(k) -= h;
    flow.derivative(yp, fp);
    flow.derivative(ym, fm);
    const Eigen::VectorXd col = (fp - fm) / (2.0 * h);
    CHECK((col - jac.col(k)).cwiseAbs().maxCoeff() < 1e-7 * (1.0 + jac.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("closed pulse conserves atoms, stays in the box and is deterministic") {
  Setup s(120);
  const FcTable table = build_fc_table(s.ladder, {PatternKind::DipoleLinear, 32}, 2.0);
  const LevelRateModel model(s.ladder, table);
  DynamicsOptions opt;
  opt.loss = LossPolicy::None;
  OccupationState a = thermal(s.ladder, 50.0, 0.4);
  OccupationState b = a;
  const double n0 = a.atom_count;
  const double e0 = mean_energy(a, s.ladder);
  Pulse p = make_pulse(-15.0, 0.25, 0.0);
  p.gamma = {GammaPolicyKind::LifetimeFraction, 0.05, 8.0};
  const PulseReport ra = run_pulse(a, p, model, opt);
  const PulseReport rb = run_pulse(b, p, model, opt);
  CHECK(std::abs(a.atom_count - n0) < 1e-10 * n0);
  CHECK(ra.removed == 0.0);
  CHECK(mean_energy(a, s.ladder) < e0);
  CHECK(a.time == doctest::Approx(100.0));
  for (double v : a.occupations) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(same_bits(a.occupations, b.occupations));
  CHECK(ra.steps == rb.steps);
  CHECK(ra.gamma == rb.gamma);
}

TEST_CASE("Omega = 0 is a no-op apart from the clock") {
  Setup s(40);
  const FcTable table = build_fc_table(s.ladder, {PatternKind::DipoleLinear, 16}, 2.0);
  const LevelRateModel model(s.ladder, table);
  OccupationState occ = thermal(s.ladder, 15.0, 0.3);
  const auto before = occ.occupations;
  run_pulse(occ, make_pulse(-5.0, 0.0, 0.5), model);
  CHECK(same_bits(before, occ.occupations));
  CHECK(occ.time == 100.0);
}

TEST_CASE("loss step") {
  Setup s(4, 0.0, Dimension::ThreeDIsotropic);
  OccupationState occ;
  occ.occupations = {1.0, 0.5, 0.2, 0.0, 0.0};
  recount(occ, s.ladder);
  const double n0 = occ.atom_count;
  const std::vector<double> p_exc = {0.25, 0.3, 2.0, 0.0, 0.0};  // shell 2 holds 1.2 atoms
  const LossReport rep = apply_loss(occ, p_exc, s.ladder);
  CHECK(occ[0] == doctest::Approx(0.75));
  CHECK(occ[1] == doctest::Approx((1.5 - 0.3) / 3.0));
  CHECK(occ[2] == 0.0);
  CHECK(rep.removed == doctest::Approx(0.25 + 0.3 + 1.2));
  CHECK(rep.overshoot == doctest::Approx(0.8));
  CHECK(occ.atom_count == doctest::Approx(n0 - rep.removed));
  CHECK(occ.losses_cumulative == doctest::Approx(rep.removed));
}

TEST_CASE("pulse-end loss matches the driven damped two-level amplitude") {
  // c_e' = -(gamma w + i x) c_e - i (Omega/2) sqrt(Delta) c_g with c_g = sqrt(N_m) held fixed
  const double rabi = 0.05, gamma = 0.02, r = 0.3, overlap = 0.2, x = 0.013, tp = 400.0, occ_m = 0.7;
  const double w = r + overlap;
  const std::complex<double> z(gamma * w, x);
  const std::complex<double> drive(0.0, -0.5 * rabi * std::sqrt(overlap) * std::sqrt(occ_m));
  std::complex<double> c = 0.0;
  const int steps = 40000;
  const double h = tp / steps;
  auto f = [&](std::complex<double> v) { return -z * v + drive; };
  for (int i = 0; i < steps; ++i) {
    const auto k1 = f(c), k2 = f(c + 0.5 * h * k1), k3 = f(c + 0.5 * h * k2), k4 = f(c + h * k3);
    c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  Setup s(3);
  ExcitationEstimate est;
  est.pairs.push_back({1, 0, r, overlap, occ_m * 0.25 * rabi * rabi * overlap / (x * x + gamma * gamma * w * w), x});
  const ResolvedPulse p{0.0, rabi, tp, gamma};
  const auto end = loss_profile(est, p, s.ladder, LossPolicy::PulseEnd, 0.0);
  CHECK(end[1] == doctest::Approx(std::norm(c)).epsilon(1e-9));
  const auto tail = loss_profile(est, p, s.ladder, LossPolicy::PulseEnd, 50.0);
  CHECK(tail[1] == doctest::Approx(std::norm(c) * std::exp(-2.0 * gamma * w * 50.0)).epsilon(1e-9));
  const auto survive = loss_profile(est, p, s.ladder, LossPolicy::Survival, 50.0);
  CHECK(survive[1] == doctest::Approx(est.pairs[0].excited * std::exp(-2.0 * gamma * w * 50.0)));
  CHECK(loss_profile(est, p, s.ladder, LossPolicy::None, 0.0)[1] == 0.0);
  // a pair that cannot decay still only builds up for t_p
  est.pairs[0].inhibition = 0.0;
  est.pairs[0].overlap = 0.0;
  est.pairs[0].detuning = 0.0;
  est.pairs[0].excited = 1e300;
  const auto frozen = loss_profile(est, p, s.ladder, LossPolicy::PulseEnd, 0.0);
  CHECK(std::isfinite(frozen[1]));
  for (auto pol : {LossPolicy::SteadyState, LossPolicy::Survival, LossPolicy::PulseEnd, LossPolicy::None}) {
    CHECK(loss_policy_from_string(to_string(pol)) == pol);
  }
  CHECK_THROWS_AS(loss_policy_from_string("evaporate"), ConfigError);
}

TEST_CASE("stop rules") {
  Setup s(60);
  const FcTable table = build_fc_table(s.ladder, {PatternKind::DipoleLinear, 16}, 2.0);
  const LevelRateModel model(s.ladder, table);
  OccupationState occ = thermal(s.ladder, 20.0, 0.5);
  Stage st;
  st.label = "a";
  st.pulses = {make_pulse(-6.0, 0.25, 1.0), make_pulse(-7.0, 0.25, 1.0)};
  st.stop.max_cycles = 3;
  Stage t = st;
  t.label = "b";
  t.stop.max_time = 150.0;
  t.stop.max_cycles = 100;
  int calls = 0;
  const SimulationTrace trace = run_sequence(occ, {st, t}, model, {}, [&](const PulseLogEntry&, const TraceSample&) {
    ++calls;
    return true;
  });
  REQUIRE(trace.stages.size() == 2);
  CHECK(trace.stages[0].cycles == 3);
  CHECK(trace.stages[0].pulses == 6);
  CHECK(trace.stages[0].stop_reason == "max_cycles");
  CHECK(trace.stages[1].stop_reason == "max_time");
  CHECK(trace.stages[1].pulses == 2);
  CHECK(calls == 8);
  CHECK(trace.samples.size() == 9);
  CHECK(trace.samples.back().time == doctest::Approx(800.0));
  const double total = trace.samples.back().atom_count + trace.samples.back().losses;
  CHECK(std::abs(total - 20.0) < 1e-9);

  OccupationState again = thermal(s.ladder, 20.0, 0.5);
  const SimulationTrace stopped =
      run_sequence(again, {st}, model, {}, [](const PulseLogEntry&, const TraceSample&) { return false; });
  CHECK(stopped.pulses.size() == 1);
  CHECK(stopped.stages[0].stop_reason == "interrupted");
}

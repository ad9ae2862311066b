#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "fermicool/errors.hpp"
#include "fermicool/fc.hpp"
#include "fermicool/rates.hpp"
#include "fermicool/rates_reference.hpp"
#include "fermicool/statmech.hpp"
#include "fermicool/trap.hpp"

using namespace fermicool;

namespace {

LevelLadder ladder_1d(int n_max, double alpha = 0.0) {
  TrapSpec s;
  s.n_max = n_max;
  s.alpha = alpha;
  return build_ladder(s);
}

OccupationState random_state(int size, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  OccupationState occ;
  occ.occupations.resize(static_cast<std::size_t>(size));
  for (auto& v : occ.occupations) v = u(rng);
  occ.atom_count = 0;
  for (double v : occ.occupations) occ.atom_count += v;
  return occ;
}

Pulse fixed_pulse(double delta, double rabi, double gamma) {
  Pulse p;
  p.delta = delta;
  p.rabi = rabi;
  p.duration = 100.0;
  p.gamma = {GammaPolicyKind::Fixed, gamma, 8.0};
  return p;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("rate matrix equals untruncated direct evaluation for n_max <= 12") {
  for (int n_max : {4, 8, 12}) {
    for (double alpha : {0.0, 0.01}) {
      const LevelLadder ladder = ladder_1d(n_max, alpha);
      const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 24}, 2.0);
      const OccupationState occ = random_state(n_max + 1, 11u + static_cast<unsigned>(n_max));
      for (const Pulse& p : {fixed_pulse(-3.0, 0.25, 0.5), fixed_pulse(-5.5, 0.1, 2.0), fixed_pulse(1.0, 0.3, 0.05)}) {
        const RateMatrix rm = build_rate_matrix(p, occ, ladder, table);
        const Eigen::MatrixXd direct =
            reference_rates({p.delta, p.rabi, p.duration, p.gamma.value}, occ, ladder, table.quadrature(), 2.0);
        const Eigen::MatrixXd kernel = Eigen::MatrixXd(rm.gamma_rates);
        CAPTURE(n_max);
        CAPTURE(p.delta);
        CHECK(max_abs(kernel - direct) <= 1e-10 * max_abs(direct));
        const auto r = reference_inhibition(occ, table.quadrature(), 2.0);
        for (int l = 0; l <= n_max; ++l) CHECK(rm.inhibition[static_cast<std::size_t>(l)] == doctest::Approx(r[static_cast<std::size_t>(l)]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("Pauli zeros are exact") {
  const LevelLadder ladder = ladder_1d(40);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 32}, 2.0);
  OccupationState occ = random_state(41, 5);
  for (int n : {0, 3, 17, 40}) occ.occupations[static_cast<std::size_t>(n)] = 1.0;
  const RateMatrix rm = build_rate_matrix(fixed_pulse(-6.0, 0.25, 0.7), occ, ladder, table);
  const Eigen::MatrixXd g = Eigen::MatrixXd(rm.gamma_rates);
  REQUIRE(max_abs(g) > 0.0);
  for (int n : {0, 3, 17, 40}) {
    for (int m = 0; m <= 40; ++m) CHECK(g(n, m) == 0.0);
  }
  // the blocked core rates are kept for the live Pauli flow
  const Eigen::MatrixXd core = Eigen::MatrixXd(rm.core);
  CHECK(core.row(17).sum() > 0.0);
  for (int m = 0; m <= 40; ++m) {
    for (int n = 0; n <= 40; ++n) {
      if (g(n, m) != 0.0) CHECK(g(n, m) == doctest::Approx(core(n, m) * (1.0 - occ[static_cast<std::size_t>(n)])));
    }
  }
}

TEST_CASE("window doubling leaves rates unchanged on a stage-1 state") {
  const LevelLadder ladder = ladder_1d(500);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 128}, 2.0);
  const auto fs = fermi_surface(ladder, 200);
  const OccupationState occ = fermi_dirac_init(ladder, 200, 0.3 * fs.fermi_temperature, 1.0).state;
  for (double gamma : {0.5, 2.0}) {
    RateOptions narrow;
    RateOptions wide;
    wide.window = 2.0 * narrow.window;
    const ResolvedPulse p{-15.0, 0.25, 100.0, gamma};
    const Eigen::MatrixXd a = Eigen::MatrixXd(LevelRateModel(ladder, table, narrow).build(p, occ).gamma_rates);
    const Eigen::MatrixXd b = Eigen::MatrixXd(LevelRateModel(ladder, table, wide).build(p, occ).gamma_rates);
    CAPTURE(gamma);
    CHECK(max_abs(a - b) < 1e-6 * max_abs(b));
  }
}

TEST_CASE("rates scale as Omega^2") {
  const LevelLadder ladder = ladder_1d(30);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 16}, 2.0);
  const OccupationState occ = random_state(31, 3);
  const Eigen::MatrixXd a = Eigen::MatrixXd(build_rate_matrix(fixed_pulse(-4.0, 0.1, 0.5), occ, ladder, table).gamma_rates);
  const Eigen::MatrixXd b = Eigen::MatrixXd(build_rate_matrix(fixed_pulse(-4.0, 0.2, 0.5), occ, ladder, table).gamma_rates);
  CHECK(max_abs(b - 4.0 * a) < 1e-13 * max_abs(b));
  const RateMatrix zero = build_rate_matrix(fixed_pulse(-4.0, 0.0, 0.5), occ, ladder, table);
  CHECK(zero.empty());
}

TEST_CASE("excited population in closed form") {
  const LevelLadder ladder = ladder_1d(12, 0.01);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 16}, 2.0);
  const OccupationState occ = random_state(13, 9);
  const LevelRateModel model(ladder, table);
  const ResolvedPulse p{-2.5, 0.2, 100.0, 0.3};
  const auto r = model.inhibition(occ);
  const ExcitationEstimate est = model.excitation(p, occ, r, true);
  double total = 0.0;
  for (int m = 0; m <= 12; ++m) {
    double expected = 0.0;
    for (int l = 0; l <= 12; ++l) {
      const double delta_lm = std::pow(fc_reduced(l, m, 2.0), 2);
      const double w = compute_R(l, occ, table) + delta_lm;
      const double x = p.delta - (ladder.energy(l) - ladder.energy(m));
      expected += 0.25 * p.rabi * p.rabi * delta_lm / (x * x + p.gamma * p.gamma * w * w);
    }
    expected *= occ[static_cast<std::size_t>(m)];
    CHECK(est.p_exc[static_cast<std::size_t>(m)] == doctest::Approx(expected).epsilon(1e-12));
    total += expected;
  }
  CHECK(est.total == doctest::Approx(total).epsilon(1e-12));
  double pair_sum = 0.0;
  for (const auto& pr : est.pairs) {
    pair_sum += pr.excited;
    CHECK(pr.overlap == doctest::Approx(compute_Delta(pr.l, pr.m, table)));
    CHECK(pr.detuning == doctest::Approx(p.delta - (ladder.energy(pr.l) - ladder.energy(pr.m))));
  }
  CHECK(pair_sum == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("inhibition vanishes for a full ladder") {
  const LevelLadder ladder = ladder_1d(20);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 16}, 2.0);
  OccupationState full;
  full.occupations.assign(21, 1.0);
  for (double r : LevelRateModel(ladder, table).inhibition(full)) CHECK(r == 0.0);
  OccupationState empty;
  empty.occupations.assign(21, 0.0);
  // emission from low levels stays on the ladder
  CHECK(LevelRateModel(ladder, table).inhibition(empty)[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gamma resolution") {
  const LevelLadder ladder = ladder_1d(300);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 32}, 2.0);
  const LevelRateModel model(ladder, table);
  const auto fs = fermi_surface(ladder, 120);
  const OccupationState occ = fermi_dirac_init(ladder, 120, 0.4 * fs.fermi_temperature, 1.0).state;

  const GammaResolution fixed = resolve_gamma(fixed_pulse(-15.0, 0.25, 0.7), occ, model);
  CHECK(fixed.gamma == 0.7);
  CHECK_FALSE(fixed.clamped);

  Pulse p = fixed_pulse(-15.0, 0.25, 0.0);
  p.gamma = {GammaPolicyKind::LifetimeFraction, 0.05, 8.0};
  const GammaResolution res = resolve_gamma(p, occ, model);
  CHECK(res.gamma > 0.0);
  CHECK(res.gamma <= 8.0);
  if (!res.clamped) CHECK(res.mean_lifetime == doctest::Approx(0.05 * p.duration).epsilon(1e-3));

  p.gamma.ceiling = 1e-3;
  const GammaResolution capped = resolve_gamma(p, occ, model);
  CHECK(capped.clamped);
  CHECK(capped.gamma == 1e-3);
}

TEST_CASE("pulse validation") {
  CHECK(validate(fixed_pulse(-15.0, 0.25, 0.5)).empty());
  CHECK_FALSE(validate(fixed_pulse(-15.0, 0.6, 0.5)).empty());  // Omega >= gamma warns
  CHECK_THROWS_AS(validate(fixed_pulse(-15.0, -0.1, 0.5)), ConfigError);
  Pulse bad = fixed_pulse(-15.0, 0.1, 0.5);
  bad.duration = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = fixed_pulse(-15.0, 0.1, 0.5);
  bad.gamma = {GammaPolicyKind::LifetimeFraction, 0.05, 8.0};
  const LevelLadder ladder = ladder_1d(10);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 8}, 2.0);
  CHECK_THROWS_AS(build_rate_matrix(bad, random_state(11, 1), ladder, table), ConfigError);
}

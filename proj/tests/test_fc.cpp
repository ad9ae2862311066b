#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "fermicool/diagnostics.hpp"
#include "fermicool/errors.hpp"
#include "fermicool/fc.hpp"
#include "fermicool/fc_oracle.hpp"
#include "fermicool/trap.hpp"

using namespace fermicool;

TEST_CASE("kappa = 0 gives the identity exactly") {
  for (int l = 0; l <= 600; l += 7) {
    for (int m = 0; m <= 600; m += 11) {
      CHECK(fc_reduced(l, m, 0.0) == (l == m ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("ground-state column has the Poisson closed form") {
  for (double kappa : {0.3, 1.0, 2.0}) {
    for (int l = 0; l <= 60; ++l) {
      const double expected = std::exp(-0.5 * kappa * kappa + l * std::log(kappa) - 0.5 * std::lgamma(l + 1.0));
      CHECK(fc_reduced(l, 0, kappa) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  // <1|D|1> = e^{-k^2/2} (1 - k^2)
  CHECK(fc_reduced(1, 1, 0.7) == doctest::Approx(std::exp(-0.245) * (1.0 - 0.49)).epsilon(1e-14));
}

TEST_CASE("symmetries of the reduced amplitudes") {
  for (int l = 0; l <= 80; l += 3) {
    for (int m = 0; m <= 80; m += 5) {
      const double sign = ((l - m) % 2 == 0) ? 1.0 : -1.0;
      CHECK(fc_reduced(m, l, 1.3) == doctest::Approx(sign * fc_reduced(l, m, 1.3)).epsilon(1e-12).scale(1e-300));
      CHECK(fc_reduced(l, m, -1.3) == doctest::Approx(sign * fc_reduced(l, m, 1.3)).epsilon(1e-12).scale(1e-300));
    }
  }
  CHECK(fc_element(3, 1, 0.5) == i_pow(2) * fc_reduced(3, 1, 0.5));
}

TEST_CASE("completeness on the full range m <= 500, |kappa| <= 2") {
  for (int m : {0, 1, 17, 100, 333, 500}) {
    for (double kappa : {-2.0, -0.75, 0.25, 1.5, 2.0}) {
      long double sum = 0.0L;
      for (int n = 0; n <= m + 200; ++n) {
        const long double r = fc_reduced(n, m, kappa);
        sum += r * r;
      }
      CHECK(std::abs(1.0L - sum) < 1e-10L);
    }
  }
}

TEST_CASE("columns of the displacement operator are orthonormal") {
  const double kappa = 1.7;
  for (int a : {0, 5, 40}) {
    for (int b : {0, 3, 40, 41}) {
      std::complex<double> dot = 0.0;
      for (int n = 0; n <= 250; ++n) dot += std::conj(fc_element(n, a, kappa)) * fc_element(n, b, kappa);
      CHECK(std::abs(dot - std::complex<double>(a == b ? 1.0 : 0.0, 0.0)) < 1e-12);
    }
  }
}

TEST_CASE("agreement with the Gauss-Hermite oracle") {
  const oracle::GaussHermiteOracle gh(260);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> level(0, 100);
  std::uniform_real_distribution<double> k(-2.0, 2.0);
  for (int i = 0; i < 60; ++i) {
    const int l = level(rng);
    const int m = level(rng);
    const double kappa = k(rng);
    const auto a = fc_element(l, m, kappa);
    const auto b = gh.element(l, m, kappa);
    const std::complex<double> bd(static_cast<double>(b.real()), static_cast<double>(b.imag()));
    CHECK(std::abs(a - bd) <= 1e-9 * std::max(std::abs(bd), 1e-6));
  }
}

TEST_CASE("reduced matrix agrees with elementwise evaluation") {
  const Eigen::MatrixXd r = reduced_fc_matrix(40, 1.1);
  for (int l = 0; l < 40; ++l) {
    for (int m = 0; m < 40; ++m) CHECK(r(l, m) == doctest::Approx(fc_reduced(l, m, 1.1)).epsilon(1e-13).scale(1e-300));
  }
}

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n - 1 exactly") {
  std::vector<double> x, w;
  gauss_legendre(12, x, w);
  REQUIRE(x.size() == 12);
  for (std::size_t i = 1; i < x.size(); ++i) CHECK(x[i] > x[i - 1]);
  for (int p = 0; p <= 23; ++p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * std::pow(x[i], p);
    const double exact = (p % 2 == 1) ? 0.0 : 2.0 / (p + 1);
    CHECK(sum == doctest::Approx(exact).epsilon(1e-14).scale(1.0));
  }
}

TEST_CASE("emission patterns") {
  // phi-average of 1 - sin^2(theta) cos^2(phi), normalized over u
  const double u = 0.4;
  CHECK(pattern_density(PatternKind::DipoleLinear, u) == doctest::Approx((1.0 - 0.5 * (1.0 - u * u)) * 0.75));
  CHECK(pattern_density(PatternKind::Isotropic, u) == 0.5);
  for (auto kind : {PatternKind::Isotropic, PatternKind::DipoleLinear, PatternKind::DipoleCircular}) {
    const AngularQuadrature q = build_quadrature({kind, 16}, 2.0);
    double total = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      total += q.weights[j];
      CHECK(q.kappa[j] == doctest::Approx(2.0 * q.u[j]));
      CHECK(q.u[j] == doctest::Approx(-q.u[q.size() - 1 - j]));
      CHECK(q.weights[j] == doctest::Approx(q.weights[q.size() - 1 - j]));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pattern_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(build_quadrature({PatternKind::DipoleLinear, 7}, 2.0), ConfigError);
  CHECK_THROWS_AS(pattern_from_string("quadrupole"), ConfigError);
}

TEST_CASE("cached table matches direct amplitudes") {
  TrapSpec spec;
  spec.n_max = 60;
  const LevelLadder ladder = build_ladder(spec);
  const FcTable table = build_fc_table(ladder, {PatternKind::DipoleLinear, 16}, 2.0);
  CHECK(table.pair_count() == 8);
  const auto& q = table.quadrature();
  for (int j : {0, 3, 8, 15}) {
    for (int l = 0; l <= 60; l += 6) {
      for (int n = 0; n <= 60; n += 4) {
        const auto expected = fc_element(l, n, q.kappa[static_cast<std::size_t>(j)]);
        CHECK(std::abs(table.amplitude(j, l, n) - expected) < 1e-13);
      }
    }
  }
  for (int l = 0; l <= 60; l += 9) {
    for (int m = 0; m <= 60; m += 7) CHECK(table.laser()(l, m) == doctest::Approx(fc_reduced(l, m, 2.0)).scale(1e-300));
  }
  CHECK_THROWS_AS(build_fc_table(ladder, {PatternKind::DipoleLinear, 16}, 2.0, 1024), NumericalError);
}

TEST_CASE("fc_check report on a reduced grid") {
  FcCheckOptions o;
  o.m_max = 120;
  o.m_stride = 40;
  o.kappa_steps = 2;
  o.samples = 40;
  const FcCheckReport r = fc_check(o);
  CHECK(r.identity_exact);
  CHECK(r.worst_residual < 1e-8);
  CHECK(r.worst_rel_err < 1e-9);
  CHECK(r.rows.size() == 4 * 5 + 40);
}

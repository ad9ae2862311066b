#include "fermicool/rates_reference.hpp"

#include <algorithm>
#include <complex>

namespace fermicool {

namespace {

using Table = std::vector<std::vector<std::complex<double>>>;

Table element_table(int d, double kappa) {
  Table t(static_cast<std::size_t>(d), std::vector<std::complex<double>>(static_cast<std::size_t>(d)));
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) t[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = fc_element(a, b, kappa);
  }
  return t;
}

}  // namespace

std::vector<double> reference_inhibition(const OccupationState& occ, const AngularQuadrature& quadrature,
                                         double eta) {
  const int d = static_cast<int>(occ.size());
  std::vector<double> r(static_cast<std::size_t>(d), 0.0);
  for (std::size_t j = 0; j < quadrature.size(); ++j) {
    const Table e = element_table(d, eta * quadrature.u[j]);
    for (int l = 0; l < d; ++l) {
      for (int n = 0; n < d; ++n) {
        r[static_cast<std::size_t>(l)] += quadrature.weights[j] *
                                          std::norm(e[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)]) *
                                          (1.0 - occ.occupations[static_cast<std::size_t>(n)]);
      }
    }
  }
  for (auto& v : r) v = std::clamp(v, 0.0, 1.0);
  return r;
}

Eigen::MatrixXd reference_rates(const ResolvedPulse& pulse, const OccupationState& occ, const LevelLadder& ladder,
                                const AngularQuadrature& quadrature, double eta) {
  const int d = static_cast<int>(occ.size());
  const auto r = reference_inhibition(occ, quadrature, eta);
  // c(m, l) = gamma eta_lm(k_L) / (x + i gamma (R_l + Delta_lm))
  std::vector<std::vector<std::complex<double>>> c(static_cast<std::size_t>(d),
                                                   std::vector<std::complex<double>>(static_cast<std::size_t>(d)));
  const Table laser = element_table(d, eta);
  for (int m = 0; m < d; ++m) {
    for (int l = 0; l < d; ++l) {
      const auto a = laser[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)];
      const double x = pulse.delta - (ladder.excited_energy(l) - ladder.energy(m));
      const double w = r[static_cast<std::size_t>(l)] + std::norm(a);
      c[static_cast<std::size_t>(m)][static_cast<std::size_t>(l)] = pulse.gamma * a / std::complex<double>(x, pulse.gamma * w);
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t j = 0; j < quadrature.size(); ++j) {
    const Table e = element_table(d, eta * quadrature.u[j]);
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) {
        std::complex<double> s = 0.0;
        // emission l -> n: eta_nl(kappa) = <n|exp(i kappa x)|l>
        for (int l = 0; l < d; ++l) {
          s += c[static_cast<std::size_t>(m)][static_cast<std::size_t>(l)] *
               e[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)];
        }
        out(n, m) += quadrature.weights[j] * std::norm(s);
      }
    }
  }
  const double pref = pulse.rabi * pulse.rabi / (2.0 * pulse.gamma);
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      out(n, m) = n == m ? 0.0 : pref * out(n, m) * (1.0 - occ.occupations[static_cast<std::size_t>(n)]);
    }
  }
  return out;
}

}  // namespace fermicool

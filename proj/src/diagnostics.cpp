#include "fermicool/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fermicool/fc.hpp"
#include "fermicool/fc_oracle.hpp"

namespace fermicool {

namespace {

// Rows beyond this distance from m carry < 1e-30 of the norm for kappa <= 2.
double completeness_residual(int m, double kappa) {
  const int reach = 60 + static_cast<int>(std::ceil(8.0 * std::abs(kappa) * std::sqrt(m + 1.0)));
  long double sum = 0.0L;
  for (int n = std::max(0, m - reach); n <= m + reach; ++n) {
    const long double r = fc_reduced(n, m, kappa);
    sum += r * r;
  }
  return static_cast<double>(std::abs(1.0L - sum));
}

}  // namespace

FcCheckReport fc_check(const FcCheckOptions& o) {
  FcCheckReport report;
  for (int m = 0; m <= o.m_max; m += std::max(1, o.m_stride)) {
    for (int k = -o.kappa_steps; k <= o.kappa_steps; ++k) {
      const double kappa = o.kappa_max * k / std::max(1, o.kappa_steps);
      FcCheckRow row{m, kappa, completeness_residual(m, kappa), 0.0};
      report.worst_residual = std::max(report.worst_residual, row.residual);
      report.rows.push_back(row);
    }
  }
  for (int l = 0; l <= std::min(o.m_max, 64); ++l) {
    for (int m = 0; m <= std::min(o.m_max, 64); ++m) {
      if (fc_reduced(l, m, 0.0) != (l == m ? 1.0 : 0.0)) report.identity_exact = false;
    }
  }
  if (o.samples > 0) {
    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<int> pick_m(0, o.m_max);
    std::uniform_real_distribution<double> pick_k(-o.kappa_max, o.kappa_max);
    std::uniform_int_distribution<int> pick_offset(-20, 20);
    const oracle::GaussHermiteOracle gh(o.m_max + 160);
    for (int s = 0; s < o.samples; ++s) {
      const int m = pick_m(rng);
      const double kappa = pick_k(rng);
      // l inside the Franck-Condon support of m
      const int width = static_cast<int>(2.0 * std::abs(kappa) * std::sqrt(m + 1.0));
      const int l = std::clamp(m + pick_offset(rng) * std::max(width, 1) / 20, 0, o.m_max);
      const auto a = fc_element(l, m, kappa);
      const auto b = gh.element(l, m, kappa);
      const std::complex<double> bd(static_cast<double>(b.real()), static_cast<double>(b.imag()));
      const double err = std::abs(a - bd) / std::max(std::abs(bd), o.relative_floor);
      FcCheckRow row{m, kappa, completeness_residual(m, kappa), err};
      report.worst_residual = std::max(report.worst_residual, row.residual);
      report.worst_rel_err = std::max(report.worst_rel_err, err);
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace fermicool

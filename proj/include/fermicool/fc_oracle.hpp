#pragma once

// Independent Franck-Condon oracle: Gauss-Hermite quadrature of the two
// oscillator eigenfunctions against exp(i kappa sqrt(2) x) in long double.
// Nodes come from the Jacobi matrix eigenvalues refined by Newton steps on the
// orthonormal Hermite recurrence; weights from the Christoffel function.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Eigenvalues>

namespace fermicool::oracle {

class GaussHermiteOracle {
 public:
  explicit GaussHermiteOracle(int nodes) : n_(nodes) {
    using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    Vec diag = Vec::Zero(nodes);
    Vec sub(nodes - 1);
    for (int k = 1; k < nodes; ++k) sub(k - 1) = std::sqrt(static_cast<long double>(k) / 2.0L);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    x_.resize(static_cast<std::size_t>(nodes));
    w_.resize(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
      long double x = es.eigenvalues()(i);
      for (int it = 0; it < 6; ++it) {
        long double hm1 = 0, h = 0;
        hermite_pair(x, nodes, hm1, h);
        const long double dh = std::sqrt(2.0L * nodes) * hm1;
        const long double step = h / dh;
        x -= step;
        if (std::abs(step) < 1e-22L * (1.0L + std::abs(x))) break;
      }
      long double sum = 0;
      long double p0 = 0, p1 = std::pow(std::acos(-1.0L), -0.25L);
      for (int k = 0; k < nodes; ++k) {
        sum += p1 * p1;
        const long double p2 =
            std::sqrt(2.0L / (k + 1)) * x * p1 - std::sqrt(static_cast<long double>(k) / (k + 1)) * p0;
        p0 = p1;
        p1 = p2;
      }
      x_[static_cast<std::size_t>(i)] = x;
      w_[static_cast<std::size_t>(i)] = 1.0L / sum;
    }
  }

  int nodes() const { return n_; }

  /// <l| exp(i kappa (a + a^dagger)) |m>; accurate while l + m stays well below 2 * nodes.
  std::complex<long double> element(int l, int m, long double kappa) const {
    long double re = 0, im = 0;
    const int top = std::max(l, m);
    std::vector<long double> h(static_cast<std::size_t>(top) + 1);
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const long double x = x_[i];
      long double p0 = 0, p1 = std::pow(std::acos(-1.0L), -0.25L);
      for (int k = 0; k <= top; ++k) {
        h[static_cast<std::size_t>(k)] = p1;
        const long double p2 =
            std::sqrt(2.0L / (k + 1)) * x * p1 - std::sqrt(static_cast<long double>(k) / (k + 1)) * p0;
        p0 = p1;
        p1 = p2;
      }
      const long double f = w_[i] * h[static_cast<std::size_t>(l)] * h[static_cast<std::size_t>(m)];
      const long double phase = kappa * std::sqrt(2.0L) * x;
      re += f * std::cos(phase);
      im += f * std::sin(phase);
    }
    return {re, im};
  }

 private:
  static void hermite_pair(long double x, int n, long double& hm1, long double& h) {
    long double p0 = 0, p1 = std::pow(std::acos(-1.0L), -0.25L);
    for (int k = 0; k < n; ++k) {
      const long double p2 =
          std::sqrt(2.0L / (k + 1)) * x * p1 - std::sqrt(static_cast<long double>(k) / (k + 1)) * p0;
      p0 = p1;
      p1 = p2;
    }
    hm1 = p0;
    h = p1;
  }

  int n_;
  std::vector<long double> x_;
  std::vector<long double> w_;
};

}  // namespace fermicool::oracle

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fermicool {

struct FcCheckRow {
  int m = 0;
  double kappa = 0.0;
  double residual = 0.0;     // |1 - sum_n r_nm(kappa)^2|
  double max_rel_err = 0.0;  // against the quadrature oracle, over the sampled l
};

struct FcCheckOptions {
  int m_max = 500;
  double kappa_max = 2.0;
  int kappa_steps = 8;  // kappa grid: kappa_max * k / kappa_steps for k = -steps..steps
  int m_stride = 25;    // completeness rows for m = 0, stride, ..., m_max
  int samples = 500;    // random (l, m, kappa) oracle triples
  std::uint64_t seed = 12345;
  /// Oracle comparisons use |a - b| / max(|b|, floor): amplitudes near zeros of
  /// the Laguerre factor have no meaningful relative error.
  double relative_floor = 1e-6;
};

struct FcCheckReport {
  std::vector<FcCheckRow> rows;
  double worst_residual = 0.0;
  double worst_rel_err = 0.0;
  bool identity_exact = true;  // kappa = 0 gives exactly delta_lm
};

/// Completeness on an (m, kappa) grid plus oracle agreement on random triples;
/// each random triple appears as its own row with residual from its (m, kappa).
FcCheckReport fc_check(const FcCheckOptions& options = {});

}  // namespace fermicool

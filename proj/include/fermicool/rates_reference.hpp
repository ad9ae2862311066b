#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fermicool/fc.hpp"
#include "fermicool/occupation.hpp"
#include "fermicool/rates.hpp"
#include "fermicool/trap.hpp"

namespace fermicool {

/// Serial 1D evaluation with no window, no parity folding and no blocking:
/// every excited level and every quadrature node, complex amplitudes taken
/// from fc_element. Cost O(n^3 G). Used as the test oracle and benchmark baseline.
std::vector<double> reference_inhibition(const OccupationState& occ, const AngularQuadrature& quadrature,
                                         double eta);

/// Dense Gamma(n, m) in units of omega, diagonal zero.
Eigen::MatrixXd reference_rates(const ResolvedPulse& pulse, const OccupationState& occ, const LevelLadder& ladder,
                                const AngularQuadrature& quadrature, double eta);

}  // namespace fermicool

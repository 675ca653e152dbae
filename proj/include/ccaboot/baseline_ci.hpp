#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccaboot/types.hpp"

namespace ccaboot {

// Plug-in asymptotic variances for the direction entries, per-observation
// scale (divide by N for the sampling variance of an estimate).
struct AsymptoticVariances {
  Eigen::MatrixXd var_b;      // p x K
  Eigen::MatrixXd var_gamma;  // q x K
};

struct AsymptoticCiResult {
  CiTable b_ci;
  CiTable gamma_ci;
  AsymptoticVariances variances;
  std::vector<std::string> warnings;
};

// Asymptotic-normal intervals from the limiting distribution of the sample
// canonical directions:
//   var(B_ij) = B_ij^2 / 2
//             + (1 - rho_j^2) * sum_{k != j} (rho_k^2 + rho_j^2
//               - 2 rho_k^2 rho_j^2) / (rho_j^2 - rho_k^2)^2 * B_ik^2,
// with estimates plugged in for parameters. The theory assumes p = q; a
// warning is attached when p != q. Near-degenerate correlation gaps
// (|rho_j^2 - rho_k^2| < 1e-8) are clamped and flagged.
AsymptoticCiResult asymptotic_ci(const DataMatrix& x, const DataMatrix& y,
                                 double alpha);

// The variance formula alone, for one direction matrix and a full set of
// estimated correlations.
Eigen::MatrixXd asymptotic_direction_variances(
    const Eigen::MatrixXd& directions, const Eigen::VectorXd& rho);

struct RegressionCiResult {
  CiTable b_ci;
  CiTable gamma_ci;
};

// Split-sample regression intervals: CCA on a random half fixes the
// directions of the opposite block; on the held-out half each canonical
// variate is regressed on the raw variables, the OLS coefficient vector is
// rescaled to satisfy the unit-variance constraint, and t-intervals are
// formed from the rescaled OLS standard errors.
RegressionCiResult regression_ci(const DataMatrix& x, const DataMatrix& y,
                                 double alpha, std::uint64_t split_seed);

}  // namespace ccaboot

#pragma once

#include "ccaboot/types.hpp"

namespace ccaboot {

// Subtracts each column mean and sets the centered flag.
DataMatrix center_columns(const DataMatrix& x);

// Sample CCA via thin QR of each block followed by an SVD of Qx' Qy.
// Directions are rescaled by sqrt(N-1) so canonical variates have empirical
// variance 1, and a deterministic sign convention is applied: each column
// pair is flipped so the largest-magnitude entry of gamma_k is positive
// (ties toward the lower index).
//
// Requires N > max(p, q) and full column rank in both blocks; inputs are
// centered internally when the flag is not set.
CcaSolution estimate_cca(const DataMatrix& x, const DataMatrix& y);

// Population CCA from a covariance model: SVD of
// SigmaX^{-1/2} SigmaXY SigmaY^{-1/2}. Same sign convention as the sample
// estimator.
CcaSolution population_cca(const CovarianceModel& model);

// C = X B and D = Y Gamma.
CanonicalVariates canonical_variates(const DataMatrix& x, const DataMatrix& y,
                                     const CcaSolution& solution);

// Flips column pairs of (b, gamma) in place so the largest-|.| entry of each
// gamma column is positive; ties broken toward the lower index.
void apply_sign_convention(Eigen::MatrixXd& b, Eigen::MatrixXd& gamma);

}  // namespace ccaboot

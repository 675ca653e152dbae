#pragma once

#include <filesystem>

#include "ccaboot/types.hpp"

namespace ccaboot {

// Builds a joint covariance whose population CCA solution is (R, B, Gamma).
// Requires p >= q = K, full-column-rank B and Gamma, and strictly
// decreasing correlations in (0, 1). SigmaY = (Gamma^{-1})' Gamma^{-1};
// SigmaX = (B^+)' B^+ with trailing eigenvalues inflated to full rank when
// p > K; SigmaXY = SigmaX B R Gamma' SigmaY.
CovarianceModel invert_cca_model(const Eigen::VectorXd& rho,
                                 const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& gamma);

// Replaces eigenvalues K+1..p of a rank-K PSD matrix by an equally spaced
// open grid between the Kth eigenvalue and 0:
// lambda_K * (p - K + 1 - j) / (p - K + 1) for j = 1..p-K. Eigenvectors are
// unchanged so B' SigmaX B is preserved for any B in the original range.
// K >= p is a no-op.
Eigen::MatrixXd inflate_trailing_eigenvalues(const Eigen::MatrixXd& sigma_x,
                                             Eigen::Index k);

// CSV blocks plus a small JSON manifest recording p, q.
void save_covariance_model(const std::filesystem::path& dir,
                           const CovarianceModel& model);
CovarianceModel load_covariance_model(const std::filesystem::path& dir);

}  // namespace ccaboot

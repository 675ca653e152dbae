#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "ccaboot/types.hpp"

namespace ccaboot {

// Everything learned on the training half that is needed to map new data
// into the reduced space and estimated directions back out of it.
struct PreprocessModel {
  Eigen::MatrixXd nuisance_coef_x;  // (w cols) x Dx
  Eigen::MatrixXd nuisance_coef_y;  // (w cols) x q
  Eigen::MatrixXd pca_basis;        // Dx x r, orthonormal columns
  Eigen::VectorXd column_variances_x;  // r, variances of the reduced scores
  Eigen::VectorXd column_variances_y;  // q
  Eigen::Index r = 250;
};

struct ResidualizedData {
  Eigen::MatrixXd x_train, y_train;
  Eigen::MatrixXd x_test, y_test;
  Eigen::MatrixXd coef_x, coef_y;  // learned on the training half
};

// Regresses X and Y on the nuisance matrix over the training half and
// removes the fitted contribution from both halves using the train-fit
// coefficients. W must have full column rank and span an intercept.
ResidualizedData residualize_nuisance(const Eigen::MatrixXd& x_train,
                                      const Eigen::MatrixXd& y_train,
                                      const Eigen::MatrixXd& w_train,
                                      const Eigen::MatrixXd& x_test,
                                      const Eigen::MatrixXd& y_test,
                                      const Eigen::MatrixXd& w_test);

struct PcaReduction {
  Eigen::MatrixXd train_scores;  // n1 x r
  Eigen::MatrixXd test_scores;   // n2 x r
  Eigen::MatrixXd basis;         // Dx x r
};

// PCA via the SVD of the (already centered) training residuals; both halves
// are projected onto the leading r right singular vectors.
PcaReduction pca_reduce(const Eigen::MatrixXd& train_residuals,
                        const Eigen::MatrixXd& test_residuals, Eigen::Index r);

// Columns to mean 0, variance 1 (divisor N-1). Returns the matrix and the
// original column standard deviations.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> standardize_columns(
    const Eigen::MatrixXd& m);

// Back-maps reduced-space directions to the original feature space:
// B_check = V D^{-1/2} B_hat, D the diagonal of reduced-score variances.
// When a CI table is supplied, entries whose interval contains 0 are zeroed
// before mapping.
Eigen::MatrixXd map_directions_to_original(const Eigen::MatrixXd& b_hat,
                                           const PreprocessModel& model,
                                           const CiTable* ci_table = nullptr);

struct PreprocessedData {
  Eigen::MatrixXd x;  // standardized reduced scores, test half
  Eigen::MatrixXd y;  // standardized residualized phenotypes, test half
  PreprocessModel model;
};

// Full preprocessing chain: seeded random half split, nuisance
// residualization, PCA reduction of X, and column standardization of the
// held-out half, which is what the CCA then runs on.
PreprocessedData run_preprocess(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& y,
                                const Eigen::MatrixXd& w, Eigen::Index r,
                                std::uint64_t split_seed);

void save_preprocess_model(const std::filesystem::path& dir,
                           const PreprocessModel& model);
PreprocessModel load_preprocess_model(const std::filesystem::path& dir);

}  // namespace ccaboot

#pragma once

#include <string>

#include "ccaboot/types.hpp"

namespace ccaboot {

enum class AlignmentStrategy { kIdentity, kSignFlip, kHungarianWeighted, kProcrustes };

AlignmentStrategy parse_alignment_strategy(const std::string& name);
std::string alignment_strategy_name(AlignmentStrategy strategy);

// Transformation mapping a replicate solution onto the reference. P and H
// are identity for strategies that do not permute or flip; the orthogonal
// factors are populated only by the Procrustes strategy.
struct AlignmentTransform {
  Eigen::MatrixXd p;   // K x K permutation
  Eigen::MatrixXd h;   // K x K diagonal, entries +-1
  Eigen::MatrixXd t_b;      // K x K orthogonal (Procrustes only, else empty)
  Eigen::MatrixXd t_gamma;  // K x K orthogonal (Procrustes only, else empty)
  bool rho_not_diagonal = false;  // Procrustes: correlations no longer diagonal
  bool rank_deficient = false;    // Procrustes cross-product lost rank
};

// Column standard deviations of the data behind each block of a solution.
struct ColumnSds {
  Eigen::VectorXd x;  // length p
  Eigen::VectorXd y;  // length q
};

// Multiplies row i of a direction matrix by sds[i]; the result matches what
// the directions would have been had the variables been standardized first.
Eigen::MatrixXd row_standardize_directions(const Eigen::MatrixXd& directions,
                                           const Eigen::VectorXd& sds);

// G[i, j] = cosine of the angle between column i of a and column j of b.
Eigen::MatrixXd cosine_similarity_columns(const Eigen::MatrixXd& a,
                                          const Eigen::MatrixXd& b);

// Permutation matrix P maximizing trace(score * P); P(sigma(a), a) = 1
// assigns score row a to column sigma(a). Hungarian algorithm on the
// reduced cost (max entry - score).
Eigen::MatrixXd solve_assignment(const Eigen::MatrixXd& score);

// Row-to-column assignment underlying solve_assignment.
std::vector<Eigen::Index> solve_assignment_map(const Eigen::MatrixXd& score);

struct ProcrustesResult {
  Eigen::MatrixXd rotation;  // K x K orthogonal
  bool rank_deficient = false;
};

// Orthogonal T minimizing ||target - source * T||_F, via the SVD of
// source' target. A rank-deficient cross product is flagged, not rejected.
ProcrustesResult procrustes_rotation(const Eigen::MatrixXd& target,
                                     const Eigen::MatrixXd& source);

struct AlignedSolution {
  CcaSolution solution;
  AlignmentTransform transform;
};

// Maps a replicate solution onto the reference. Similarities are computed
// on row-standardized copies (reference rows scaled by the full-data column
// sds, replicate rows by the resample's); transforms are applied to the
// unstandardized replicate directions.
AlignedSolution align(const CcaSolution& reference, const CcaSolution& replicate,
                      AlignmentStrategy strategy, const ColumnSds& sds_reference,
                      const ColumnSds& sds_replicate);

}  // namespace ccaboot

#include "ccaboot/alignment.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ccaboot/errors.hpp"

namespace ccaboot {

AlignmentStrategy parse_alignment_strategy(const std::string& name) {
  if (name == "identity") return AlignmentStrategy::kIdentity;
  if (name == "signflip") return AlignmentStrategy::kSignFlip;
  if (name == "hungarian") return AlignmentStrategy::kHungarianWeighted;
  if (name == "procrustes") return AlignmentStrategy::kProcrustes;
  throw InvalidInputError("unknown alignment strategy '" + name +
                          "' (expected identity|signflip|hungarian|procrustes)");
}

std::string alignment_strategy_name(AlignmentStrategy strategy) {
  switch (strategy) {
    case AlignmentStrategy::kIdentity: return "identity";
    case AlignmentStrategy::kSignFlip: return "signflip";
    case AlignmentStrategy::kHungarianWeighted: return "hungarian";
    case AlignmentStrategy::kProcrustes: return "procrustes";
  }
  throw InvalidInputError("unknown alignment strategy value");
}

Eigen::MatrixXd row_standardize_directions(const Eigen::MatrixXd& directions,
                                           const Eigen::VectorXd& sds) {
  if (sds.size() != directions.rows())
    throw InvalidInputError(
        "row_standardize_directions: sds length must equal the row count");
  for (Eigen::Index i = 0; i < sds.size(); ++i)
    if (!(sds(i) > 0.0))
      throw DegenerateVariableError(
          i, "row_standardize_directions: variable " + std::to_string(i) +
                 " has non-positive standard deviation");
  return sds.asDiagonal() * directions;
}

Eigen::MatrixXd cosine_similarity_columns(const Eigen::MatrixXd& a,
                                          const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows())
    throw InvalidInputError("cosine_similarity_columns: row counts differ");
  const Eigen::VectorXd norms_a = a.colwise().norm();
  const Eigen::VectorXd norms_b = b.colwise().norm();
  for (Eigen::Index j = 0; j < norms_a.size(); ++j)
    if (norms_a(j) == 0.0)
      throw DegenerateVariableError(
          j, "cosine_similarity_columns: column " + std::to_string(j) +
                 " of the first matrix is zero");
  for (Eigen::Index j = 0; j < norms_b.size(); ++j)
    if (norms_b(j) == 0.0)
      throw DegenerateVariableError(
          j, "cosine_similarity_columns: column " + std::to_string(j) +
                 " of the second matrix is zero");
  Eigen::MatrixXd g = a.transpose() * b;
  g.array().colwise() /= norms_a.array();
  g.array().rowwise() /= norms_b.transpose().array();
  return g.cwiseMin(1.0).cwiseMax(-1.0);
}

std::vector<Eigen::Index> solve_assignment_map(const Eigen::MatrixXd& score) {
  const Eigen::Index k = score.rows();
  if (score.cols() != k)
    throw InvalidInputError("solve_assignment: score matrix must be square");
  if (!score.allFinite())
    throw InvalidInputError("solve_assignment: non-finite score entry");

  // Kuhn-Munkres via shortest augmenting paths, as a minimization of
  // (max entry - score). 1-based arrays; row 0 / column 0 are sentinels.
  const Eigen::MatrixXd cost =
      Eigen::MatrixXd::Constant(k, k, score.maxCoeff()) - score;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<Eigen::Index> match(k + 1, 0), way(k + 1, 0);
  for (Eigen::Index i = 1; i <= k; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> min_v(k + 1, inf);
    std::vector<bool> used(k + 1, false);
    do {
      used[j0] = true;
      const Eigen::Index i0 = match[j0];
      Eigen::Index j1 = 0;
      double delta = inf;
      for (Eigen::Index j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double current = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (current < min_v[j]) {
          min_v[j] = current;
          way[j] = j0;
        }
        if (min_v[j] < delta) {
          delta = min_v[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= k; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_v[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Eigen::Index> sigma(static_cast<std::size_t>(k), 0);
  for (Eigen::Index j = 1; j <= k; ++j)
    if (match[j] != 0) sigma[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return sigma;
}

Eigen::MatrixXd solve_assignment(const Eigen::MatrixXd& score) {
  const auto sigma = solve_assignment_map(score);
  const Eigen::Index k = score.rows();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    p(sigma[static_cast<std::size_t>(a)], a) = 1.0;
  return p;
}

ProcrustesResult procrustes_rotation(const Eigen::MatrixXd& target,
                                     const Eigen::MatrixXd& source) {
  if (target.rows() != source.rows() || target.cols() != source.cols())
    throw InvalidInputError("procrustes_rotation: shape mismatch");
  const Eigen::MatrixXd cross = source.transpose() * target;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult result;
  result.rotation = svd.matrixU() * svd.matrixV().transpose();
  const auto& sv = svd.singularValues();
  result.rank_deficient =
      sv(0) == 0.0 || sv(sv.size() - 1) <= 1e-12 * sv(0);
  return result;
}

namespace {

double sign_or_plus(double value) { return value < 0.0 ? -1.0 : 1.0; }

}  // namespace

AlignedSolution align(const CcaSolution& reference, const CcaSolution& replicate,
                      AlignmentStrategy strategy, const ColumnSds& sds_reference,
                      const ColumnSds& sds_replicate) {
  if (reference.p() != replicate.p() || reference.q() != replicate.q() ||
      reference.k() != replicate.k())
    throw InvalidInputError("align: reference and replicate shapes differ");
  const Eigen::Index k = reference.k();

  AlignedSolution out;
  out.transform.p = Eigen::MatrixXd::Identity(k, k);
  out.transform.h = Eigen::MatrixXd::Identity(k, k);

  if (strategy == AlignmentStrategy::kIdentity) {
    out.solution = replicate;
    return out;
  }

  const Eigen::MatrixXd ref_b_std =
      row_standardize_directions(reference.b, sds_reference.x);
  const Eigen::MatrixXd ref_g_std =
      row_standardize_directions(reference.gamma, sds_reference.y);
  const Eigen::MatrixXd rep_b_std =
      row_standardize_directions(replicate.b, sds_replicate.x);
  const Eigen::MatrixXd rep_g_std =
      row_standardize_directions(replicate.gamma, sds_replicate.y);

  if (strategy == AlignmentStrategy::kProcrustes) {
    const auto rot_b = procrustes_rotation(ref_b_std, rep_b_std);
    const auto rot_g = procrustes_rotation(ref_g_std, rep_g_std);
    out.transform.t_b = rot_b.rotation;
    out.transform.t_gamma = rot_g.rotation;
    out.transform.rank_deficient = rot_b.rank_deficient || rot_g.rank_deficient;
    out.transform.rho_not_diagonal = true;
    out.solution.rho = replicate.rho;  // left unpermuted; see warning flag
    out.solution.b = replicate.b * rot_b.rotation;
    out.solution.gamma = replicate.gamma * rot_g.rotation;
    return out;
  }

  const Eigen::MatrixXd similarity =
      0.5 * (cosine_similarity_columns(ref_b_std, rep_b_std) +
             cosine_similarity_columns(ref_g_std, rep_g_std));

  if (strategy == AlignmentStrategy::kSignFlip) {
    Eigen::VectorXd signs(k);
    for (Eigen::Index i = 0; i < k; ++i)
      signs(i) = sign_or_plus(similarity(i, i));
    out.transform.h = signs.asDiagonal();
    out.solution.rho = replicate.rho;
    out.solution.b = replicate.b * out.transform.h;
    out.solution.gamma = replicate.gamma * out.transform.h;
    return out;
  }

  // Weighted Hungarian: weight similarities by the square roots of both
  // sets of canonical correlations, assign on absolute values, then read
  // the signs off the matched diagonal.
  const Eigen::MatrixXd weighted =
      reference.rho.array().sqrt().matrix().asDiagonal() * similarity *
      replicate.rho.array().sqrt().matrix().asDiagonal();
  const auto sigma = solve_assignment_map(weighted.cwiseAbs());

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd signs(k);
  Eigen::VectorXd rho(k);
  out.solution.b.resize(replicate.p(), k);
  out.solution.gamma.resize(replicate.q(), k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const Eigen::Index source = sigma[static_cast<std::size_t>(a)];
    p(source, a) = 1.0;
    signs(a) = sign_or_plus(weighted(a, source));
    rho(a) = replicate.rho(source);
    out.solution.b.col(a) = signs(a) * replicate.b.col(source);
    out.solution.gamma.col(a) = signs(a) * replicate.gamma.col(source);
  }
  out.transform.p = std::move(p);
  out.transform.h = signs.asDiagonal();
  out.solution.rho = std::move(rho);
  return out;
}

}  // namespace ccaboot

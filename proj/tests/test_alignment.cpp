#include <doctest.h>

#include <Eigen/Dense>

#include "ccaboot/alignment.hpp"
#include "ccaboot/cca_core.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/stats.hpp"
#include "test_support.hpp"

using namespace ccaboot;
using namespace ccaboot::testing;

namespace {

CcaSolution random_solution(Eigen::Index p, Eigen::Index q, RngStream& rng) {
  CcaSolution s;
  const Eigen::Index k = std::min(p, q);
  s.rho.resize(k);
  for (Eigen::Index i = 0; i < k; ++i)
    s.rho(i) = 0.9 - 0.8 * static_cast<double>(i) / std::max<Eigen::Index>(k, 2);
  s.b = random_matrix(p, k, rng);
  s.gamma = random_matrix(q, k, rng);
  return s;
}

ColumnSds unit_sds(Eigen::Index p, Eigen::Index q) {
  return {Eigen::VectorXd::Ones(p), Eigen::VectorXd::Ones(q)};
}

}  // namespace

TEST_SUITE_BEGIN("alignment");

TEST_CASE("row_standardize_directions basics") {
  Eigen::MatrixXd dir(1, 2);
  dir << 3.0, -1.0;
  Eigen::VectorXd sds(1);
  sds << 2.0;
  const Eigen::MatrixXd doubled = row_standardize_directions(dir, sds);
  CHECK(doubled(0, 0) == 6.0);
  CHECK(doubled(0, 1) == -2.0);

  sds << 1.0;
  CHECK(max_abs_diff(row_standardize_directions(dir, sds), dir) == 0.0);

  sds << 0.0;
  CHECK_THROWS_AS(row_standardize_directions(dir, sds),
                  DegenerateVariableError);
}

TEST_CASE("row standardization equals standardizing the data before CCA") {
  RngStream rng(67);
  DataMatrix x{random_matrix(60, 3, rng), false};
  DataMatrix y{random_matrix(60, 2, rng), false};
  x.values.col(0) *= 4.0;  // give the variables unequal scales
  y.values.col(1) *= 0.25;
  y.values.col(0) += 0.5 * x.values.col(1);

  const Eigen::VectorXd sds_x = column_sds(x.values);
  const Eigen::VectorXd sds_y = column_sds(y.values);
  DataMatrix x_std{(x.values.rowwise() - x.values.colwise().mean()) *
                       sds_x.cwiseInverse().asDiagonal(),
                   false};
  DataMatrix y_std{(y.values.rowwise() - y.values.colwise().mean()) *
                       sds_y.cwiseInverse().asDiagonal(),
                   false};

  const auto raw = estimate_cca(x, y);
  const auto standardized = estimate_cca(x_std, y_std);
  CHECK(max_diff_up_to_column_sign(standardized.b,
                                   row_standardize_directions(raw.b, sds_x)) <
        1e-8);
  CHECK(max_diff_up_to_column_sign(
            standardized.gamma, row_standardize_directions(raw.gamma, sds_y)) <
        1e-8);
}

TEST_CASE("cosine_similarity_columns examples") {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 0, 0, 1;
  b << 1, 0, 0, -1;
  const Eigen::MatrixXd g = cosine_similarity_columns(a, b);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(0, 1) == doctest::Approx(0.0));
  CHECK(g(1, 1) == doctest::Approx(-1.0));

  Eigen::MatrixXd u(2, 1), v(2, 1);
  u << 1, 0;
  v << 1, 1;
  CHECK(cosine_similarity_columns(u, v)(0, 0) ==
        doctest::Approx(0.70711).epsilon(1e-4));

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 1);
  CHECK_THROWS_AS(cosine_similarity_columns(u, zero),
                  DegenerateVariableError);
}

TEST_CASE("solve_assignment: identity and reversal") {
  CHECK(max_abs_diff(solve_assignment(Eigen::MatrixXd::Identity(3, 3)),
                     Eigen::MatrixXd::Identity(3, 3)) == 0.0);
  Eigen::MatrixXd anti = Eigen::MatrixXd::Zero(3, 3);
  anti(0, 2) = anti(1, 1) = anti(2, 0) = 1.0;
  CHECK(max_abs_diff(solve_assignment(anti), anti) == 0.0);
}

TEST_CASE("solve_assignment matches exhaustive search") {
  RngStream rng(71);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng.next_below(5));
    Eigen::MatrixXd score(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) score(i, j) = rng.next_double();
    const Eigen::MatrixXd p = solve_assignment(score);
    const double value = (score * p).trace();
    CHECK(value == doctest::Approx(brute_force_assignment_value(score))
                       .epsilon(1e-12));
    // P is a genuine permutation matrix.
    CHECK((p.colwise().sum().array() == 1.0).all());
    CHECK((p.rowwise().sum().array() == 1.0).all());
  }
}

TEST_CASE("solve_assignment rejects non-finite scores") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_assignment(bad), InvalidInputError);
}

TEST_CASE("procrustes_rotation: identity and exact recovery") {
  RngStream rng(73);
  const Eigen::MatrixXd source = random_matrix(6, 3, rng);
  const auto self = procrustes_rotation(source, source);
  CHECK(max_abs_diff(self.rotation, Eigen::MatrixXd::Identity(3, 3)) < 1e-10);

  const Eigen::MatrixXd q = random_orthogonal(3, rng);
  const auto recovered = procrustes_rotation(source * q, source);
  CHECK(max_abs_diff(recovered.rotation, q) < 1e-8);
  CHECK(max_abs_diff(recovered.rotation.transpose() * recovered.rotation,
                     Eigen::MatrixXd::Identity(3, 3)) < 1e-10);
}

TEST_CASE("procrustes_rotation beats random orthogonal competitors") {
  RngStream rng(79);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd source = random_matrix(8, 3, rng);
    const Eigen::MatrixXd target = random_matrix(8, 3, rng);
    const auto best = procrustes_rotation(target, source);
    const double objective = (target - source * best.rotation).norm();
    for (int candidate = 0; candidate < 100; ++candidate) {
      const Eigen::MatrixXd q = random_orthogonal(3, rng);
      CHECK(objective <= (target - source * q).norm() + 1e-12);
    }
  }
}

TEST_CASE("align: replicate equal to reference is a fixed point") {
  RngStream rng(83);
  const auto reference = random_solution(4, 3, rng);
  const auto sds = unit_sds(4, 3);
  for (const auto strategy :
       {AlignmentStrategy::kIdentity, AlignmentStrategy::kSignFlip,
        AlignmentStrategy::kHungarianWeighted, AlignmentStrategy::kProcrustes}) {
    const auto aligned = align(reference, reference, strategy, sds, sds);
    CHECK(max_abs_diff(aligned.solution.b, reference.b) < 1e-10);
    CHECK(max_abs_diff(aligned.solution.gamma, reference.gamma) < 1e-10);
    CHECK(max_abs_diff(aligned.transform.p,
                       Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
    CHECK(max_abs_diff(aligned.transform.h,
                       Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
  }
}

TEST_CASE("align: sign flip undoes a constructed negation") {
  RngStream rng(89);
  const auto reference = random_solution(5, 4, rng);
  CcaSolution replicate = reference;
  replicate.b.col(0) = -replicate.b.col(0);
  replicate.gamma.col(0) = -replicate.gamma.col(0);
  const auto sds = unit_sds(5, 4);
  const auto aligned =
      align(reference, replicate, AlignmentStrategy::kSignFlip, sds, sds);
  CHECK(aligned.transform.h(0, 0) == -1.0);
  for (Eigen::Index i = 1; i < 4; ++i) CHECK(aligned.transform.h(i, i) == 1.0);
  CHECK(max_abs_diff(aligned.solution.b, reference.b) == 0.0);
  CHECK(max_abs_diff(aligned.solution.gamma, reference.gamma) == 0.0);
}

TEST_CASE("align: hungarian undoes a constructed swap plus flip") {
  RngStream rng(97);
  const auto reference = random_solution(5, 3, rng);
  CcaSolution replicate = reference;
  // Swap columns 0 and 1, negate what lands in column 0.
  replicate.b.col(0) = -reference.b.col(1);
  replicate.b.col(1) = reference.b.col(0);
  replicate.gamma.col(0) = -reference.gamma.col(1);
  replicate.gamma.col(1) = reference.gamma.col(0);
  replicate.rho(0) = reference.rho(1);
  replicate.rho(1) = reference.rho(0);

  const auto sds = unit_sds(5, 3);
  const auto aligned = align(reference, replicate,
                             AlignmentStrategy::kHungarianWeighted, sds, sds);
  CHECK(max_abs_diff(aligned.solution.b, reference.b) < 1e-10);
  CHECK(max_abs_diff(aligned.solution.gamma, reference.gamma) < 1e-10);
  CHECK(max_abs_diff(aligned.solution.rho, reference.rho) < 1e-12);
}

TEST_CASE("align: hungarian is invariant to scrambling the replicate") {
  RngStream rng(101);
  const auto reference = random_solution(6, 4, rng);
  auto replicate = random_solution(6, 4, rng);
  // Nudge the replicate toward the reference so the matching is clear-cut.
  replicate.b = reference.b + 0.05 * replicate.b;
  replicate.gamma = reference.gamma + 0.05 * replicate.gamma;
  replicate.rho = reference.rho;

  const auto sds = unit_sds(6, 4);
  const auto direct = align(reference, replicate,
                            AlignmentStrategy::kHungarianWeighted, sds, sds);

  // Scramble with a random permutation and signs, then align again.
  std::vector<Eigen::Index> perm{2, 0, 3, 1};
  Eigen::VectorXd signs(4);
  signs << -1, 1, -1, 1;
  CcaSolution scrambled = replicate;
  for (Eigen::Index j = 0; j < 4; ++j) {
    scrambled.b.col(j) = signs(j) * replicate.b.col(perm[j]);
    scrambled.gamma.col(j) = signs(j) * replicate.gamma.col(perm[j]);
    scrambled.rho(j) = replicate.rho(perm[j]);
  }
  const auto re_aligned = align(reference, scrambled,
                                AlignmentStrategy::kHungarianWeighted, sds, sds);
  CHECK(max_abs_diff(direct.solution.b, re_aligned.solution.b) < 1e-12);
  CHECK(max_abs_diff(direct.solution.gamma, re_aligned.solution.gamma) < 1e-12);
  CHECK(max_abs_diff(direct.solution.rho, re_aligned.solution.rho) < 1e-12);
}

TEST_CASE("aligned directions preserve the multiset of column norms") {
  RngStream rng(103);
  const auto reference = random_solution(5, 5, rng);
  const auto replicate = random_solution(5, 5, rng);
  const auto sds = unit_sds(5, 5);
  for (const auto strategy :
       {AlignmentStrategy::kSignFlip, AlignmentStrategy::kHungarianWeighted}) {
    const auto aligned = align(reference, replicate, strategy, sds, sds);
    Eigen::VectorXd before = replicate.b.colwise().norm();
    Eigen::VectorXd after = aligned.solution.b.colwise().norm();
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    CHECK(max_abs_diff(before, after) < 1e-12);
  }
}

TEST_CASE("sign-flip sign equals the per-column cosine maximizer") {
  RngStream rng(107);
  const auto reference = random_solution(6, 6, rng);
  const auto replicate = random_solution(6, 6, rng);
  const auto sds = unit_sds(6, 6);
  const auto aligned =
      align(reference, replicate, AlignmentStrategy::kSignFlip, sds, sds);
  const Eigen::MatrixXd g =
      0.5 * (cosine_similarity_columns(reference.b, replicate.b) +
             cosine_similarity_columns(reference.gamma, replicate.gamma));
  for (Eigen::Index k = 0; k < 6; ++k) {
    const double best_sign = g(k, k) >= 0.0 ? 1.0 : -1.0;
    CHECK(aligned.transform.h(k, k) == best_sign);
  }
}

TEST_CASE("procrustes alignment flags the correlation matrix as rotated") {
  RngStream rng(109);
  const auto reference = random_solution(5, 4, rng);
  const auto replicate = random_solution(5, 4, rng);
  const auto sds = unit_sds(5, 4);
  const auto aligned =
      align(reference, replicate, AlignmentStrategy::kProcrustes, sds, sds);
  CHECK(aligned.transform.rho_not_diagonal);
  CHECK(max_abs_diff(aligned.transform.t_b.transpose() * aligned.transform.t_b,
                     Eigen::MatrixXd::Identity(4, 4)) < 1e-10);
  CHECK(max_abs_diff(aligned.solution.rho, replicate.rho) == 0.0);
}

TEST_SUITE_END();

#include "ccaboot/baseline_ci.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ccaboot/cca_core.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/rng.hpp"
#include "ccaboot/stats.hpp"

namespace ccaboot {

namespace {

constexpr double kGapFloor = 1e-8;

// var(D_ij) for one direction matrix given all K estimated correlations.
Eigen::MatrixXd anderson_variances(const Eigen::MatrixXd& directions,
                                   const Eigen::VectorXd& rho,
                                   bool& clamped) {
  const Eigen::Index k = rho.size();
  const Eigen::VectorXd rho2 = rho.array().square();
  Eigen::MatrixXd variances(directions.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < directions.rows(); ++i) {
      double accumulator = 0.5 * directions(i, j) * directions(i, j);
      for (Eigen::Index m = 0; m < k; ++m) {
        if (m == j) continue;
        const double gap = rho2(j) - rho2(m);
        double denom = gap * gap;
        if (std::abs(gap) < kGapFloor) {
          denom = kGapFloor;
          clamped = true;
        }
        const double numer = rho2(m) + rho2(j) - 2.0 * rho2(m) * rho2(j);
        accumulator += (1.0 - rho2(j)) * numer / denom * directions(i, m) *
                       directions(i, m);
      }
      variances(i, j) = accumulator;
    }
  }
  return variances;
}

}  // namespace

Eigen::MatrixXd asymptotic_direction_variances(
    const Eigen::MatrixXd& directions, const Eigen::VectorXd& rho) {
  if (directions.cols() != rho.size())
    throw InvalidInputError(
        "asymptotic_direction_variances: direction columns must match rho");
  bool clamped = false;
  return anderson_variances(directions, rho, clamped);
}

namespace {

CiTable symmetric_table(const Eigen::MatrixXd& point,
                        const Eigen::MatrixXd& half_width) {
  CiTable table;
  table.point = point;
  table.lower = point - half_width;
  table.upper = point + half_width;
  return table;
}

}  // namespace

AsymptoticCiResult asymptotic_ci(const DataMatrix& x, const DataMatrix& y,
                                 double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInputError("asymptotic_ci: alpha must lie in (0, 1)");
  AsymptoticCiResult result;
  const CcaSolution fit = estimate_cca(x, y);
  if (x.cols() != y.cols())
    result.warnings.push_back(
        "asymptotic theory assumes p = q; intervals for the larger block "
        "may have poor coverage");

  bool clamped = false;
  result.variances.var_b = anderson_variances(fit.b, fit.rho, clamped);
  result.variances.var_gamma = anderson_variances(fit.gamma, fit.rho, clamped);
  if (clamped)
    result.warnings.push_back(
        "near-degenerate canonical correlation gap; variance denominator "
        "clamped at 1e-8");

  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double sqrt_n = std::sqrt(static_cast<double>(x.rows()));
  result.b_ci = symmetric_table(
      fit.b, (z / sqrt_n) * result.variances.var_b.cwiseSqrt());
  result.gamma_ci = symmetric_table(
      fit.gamma, (z / sqrt_n) * result.variances.var_gamma.cwiseSqrt());
  return result;
}

namespace {

// OLS of each response column on the predictors, rescaled so the fitted
// variate has unit empirical variance; t-intervals from the rescaled
// standard errors with n - d degrees of freedom.
CiTable regression_block(const Eigen::MatrixXd& predictors,
                         const Eigen::MatrixXd& responses, double alpha,
                         const char* block) {
  const Eigen::Index n = predictors.rows();
  const Eigen::Index d = predictors.cols();
  const Eigen::Index k = responses.cols();
  if (n <= d)
    throw InvalidInputError(std::string("regression_ci: ") + block +
                            " half has too few rows for the regression");

  const Eigen::MatrixXd gram = predictors.transpose() * predictors;
  Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success || !solver.isPositive())
    throw RankDeficiencyError(block, -1,
                              std::string("regression_ci: ") + block +
                                  " half is rank deficient");
  const Eigen::MatrixXd gram_inverse =
      solver.solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::MatrixXd sigma_hat = empirical_covariance(predictors);

  CiTable table;
  table.point.resize(d, k);
  table.lower.resize(d, k);
  table.upper.resize(d, k);
  const double t_critical =
      student_t_quantile(1.0 - alpha / 2.0, static_cast<double>(n - d));

  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::VectorXd response = responses.col(j);
    if (response.squaredNorm() / static_cast<double>(n - 1) < 1e-14)
      throw DegenerateVariableError(
          j, std::string("regression_ci: canonical variate ") +
                 std::to_string(j + 1) + " for " + block +
                 " has (near) zero variance");
    const Eigen::VectorXd coef = solver.solve(predictors.transpose() * response);
    const Eigen::VectorXd residuals = response - predictors * coef;
    const double sigma2 =
        residuals.squaredNorm() / static_cast<double>(n - d);
    const double constraint = coef.dot(sigma_hat * coef);
    if (!(constraint > 0.0))
      throw DegenerateVariableError(
          j, std::string("regression_ci: regression estimate for variate ") +
                 std::to_string(j + 1) + " is degenerate");
    const double rescale = 1.0 / std::sqrt(constraint);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double se = rescale * std::sqrt(sigma2 * gram_inverse(i, i));
      table.point(i, j) = rescale * coef(i);
      table.lower(i, j) = table.point(i, j) - t_critical * se;
      table.upper(i, j) = table.point(i, j) + t_critical * se;
    }
  }
  return table;
}

}  // namespace

RegressionCiResult regression_ci(const DataMatrix& x, const DataMatrix& y,
                                 double alpha, std::uint64_t split_seed) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInputError("regression_ci: alpha must lie in (0, 1)");
  if (x.rows() != y.rows())
    throw InvalidInputError("regression_ci: X and Y row counts differ");
  const Eigen::Index n = x.rows();
  const Eigen::Index needed = 2 * (std::max(x.cols(), y.cols()) + 2);
  if (n < needed)
    throw InvalidInputError("regression_ci: need N >= " +
                            std::to_string(needed) + " rows, got " +
                            std::to_string(n));

  // Uniformly random half split, robust to row ordering.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  RngStream rng(split_seed, {0x5B1u});
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }
  const Eigen::Index n1 = n / 2;

  auto take = [&](const Eigen::MatrixXd& m, Eigen::Index begin,
                  Eigen::Index count) {
    Eigen::MatrixXd out(count, m.cols());
    for (Eigen::Index i = 0; i < count; ++i)
      out.row(i) = m.row(order[static_cast<std::size_t>(begin + i)]);
    return out;
  };

  DataMatrix x1{take(x.values, 0, n1), false};
  DataMatrix y1{take(y.values, 0, n1), false};
  const CcaSolution first_half = estimate_cca(x1, y1);

  // Held-out half, centered so the no-intercept regressions are valid.
  const Eigen::MatrixXd x2 = [&] {
    Eigen::MatrixXd m = take(x.values, n1, n - n1);
    m.rowwise() -= m.colwise().mean().eval();
    return m;
  }();
  const Eigen::MatrixXd y2 = [&] {
    Eigen::MatrixXd m = take(y.values, n1, n - n1);
    m.rowwise() -= m.colwise().mean().eval();
    return m;
  }();

  RegressionCiResult result;
  result.b_ci = regression_block(x2, y2 * first_half.gamma, alpha, "X");
  result.gamma_ci = regression_block(y2, x2 * first_half.b, alpha, "Y");
  return result;
}

}  // namespace ccaboot

#include "ccaboot/stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "ccaboot/errors.hpp"

namespace ccaboot {

Eigen::VectorXd column_means(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) throw InvalidInputError("column_means: empty matrix");
  return m.colwise().mean();
}

Eigen::VectorXd column_sds(const Eigen::MatrixXd& m) {
  if (m.rows() < 2)
    throw InvalidInputError("column_sds: need at least two rows");
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  return (centered.array().square().colwise().sum() /
          static_cast<double>(m.rows() - 1))
      .sqrt()
      .transpose();
}

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& m) {
  if (m.rows() < 2)
    throw InvalidInputError("empirical_covariance: need at least two rows");
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  return (centered.transpose() * centered) /
         static_cast<double>(m.rows() - 1);
}

Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows())
    throw InvalidInputError("cross_covariance: row counts differ");
  if (x.rows() < 2)
    throw InvalidInputError("cross_covariance: need at least two rows");
  const Eigen::MatrixXd cx = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cy = y.rowwise() - y.colwise().mean();
  return (cx.transpose() * cy) / static_cast<double>(x.rows() - 1);
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw InvalidInputError("pearson_correlation: need two equal-length vectors");
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double denom = ca.norm() * cb.norm();
  if (denom == 0.0)
    throw DegenerateVariableError(0, "pearson_correlation: zero-variance input");
  return ca.dot(cb) / denom;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidInputError("normal_quantile: p must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidInputError("student_t_quantile: p must be in (0, 1)");
  if (!(dof > 0.0))
    throw InvalidInputError("student_t_quantile: dof must be positive");
  return boost::math::quantile(
      boost::math::students_t_distribution<double>(dof), p);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidInputError("quantile_sorted: empty sample");
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidInputError("quantile_sorted: p must be in [0, 1]");
  const auto m = sorted.size();
  if (m == 1) return sorted[0];
  const double position = static_cast<double>(m - 1) * p;
  const auto lo = static_cast<std::size_t>(position);
  if (lo + 1 >= m) return sorted[m - 1];
  const double frac = position - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_spd(
    const Eigen::MatrixXd& s, double rel_tol, const char* context) {
  if (s.rows() != s.cols())
    throw InvalidInputError(std::string(context) + ": matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(s);
  if (eigen.info() != Eigen::Success)
    throw SingularCovarianceError(std::string(context) +
                                  ": eigendecomposition failed");
  const double max_eig = eigen.eigenvalues().maxCoeff();
  const double min_eig = eigen.eigenvalues().minCoeff();
  if (!(max_eig > 0.0) || min_eig <= rel_tol * max_eig)
    throw SingularCovarianceError(
        std::string(context) + ": not positive definite (min eigenvalue " +
        std::to_string(min_eig) + ")");
  return eigen;
}

}  // namespace

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& s, double rel_tol,
                                 const char* context) {
  const auto eigen = solve_spd(s, rel_tol, context);
  return eigen.eigenvectors() *
         eigen.eigenvalues().array().rsqrt().matrix().asDiagonal() *
         eigen.eigenvectors().transpose();
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& s, double rel_tol,
                            const char* context) {
  const auto eigen = solve_spd(s, rel_tol, context);
  return eigen.eigenvectors() *
         eigen.eigenvalues().array().inverse().matrix().asDiagonal() *
         eigen.eigenvectors().transpose();
}

}  // namespace ccaboot

#pragma once

#include <Eigen/Dense>
#include <span>

namespace ccaboot {

Eigen::VectorXd column_means(const Eigen::MatrixXd& m);

// Column standard deviations, divisor N-1.
Eigen::VectorXd column_sds(const Eigen::MatrixXd& m);

// Empirical covariance with divisor N-1; centers internally.
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& m);

// Empirical cross-covariance cov(x, y) with divisor N-1.
Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& y);

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Quantile of the standard normal distribution.
double normal_quantile(double p);

// Quantile of Student's t with `dof` degrees of freedom.
double student_t_quantile(double p, double dof);

// Linear-interpolation empirical quantile at order-statistic position
// 1 + (m-1)p. `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

// Inverse square root of a symmetric positive definite matrix via
// eigendecomposition. Throws SingularCovarianceError when the smallest
// eigenvalue is at or below rel_tol times the largest.
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& s,
                                 double rel_tol = 1e-12,
                                 const char* context = "covariance");

// Symmetric positive definite inverse via eigendecomposition, same
// tolerance contract as inverse_sqrt_spd.
Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& s, double rel_tol = 1e-12,
                            const char* context = "matrix");

}  // namespace ccaboot

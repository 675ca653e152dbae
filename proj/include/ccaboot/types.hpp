#pragma once

#include <Eigen/Dense>

namespace ccaboot {

// Observations by rows, variables by columns.
struct DataMatrix {
  Eigen::MatrixXd values;
  bool centered = false;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// A CCA solution: canonical correlations plus paired direction matrices.
// rho has length K, b is p x K, gamma is q x K. Estimator outputs keep rho
// sorted non-increasing; aligned bootstrap replicates may permute it.
struct CcaSolution {
  Eigen::VectorXd rho;
  Eigen::MatrixXd b;
  Eigen::MatrixXd gamma;

  Eigen::Index k() const { return rho.size(); }
  Eigen::Index p() const { return b.rows(); }
  Eigen::Index q() const { return gamma.rows(); }
};

// Canonical variates C = X B and D = Y Gamma.
struct CanonicalVariates {
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;
};

// Generative joint covariance with its blocks stored explicitly.
struct CovarianceModel {
  Eigen::MatrixXd sigma_x;
  Eigen::MatrixXd sigma_y;
  Eigen::MatrixXd sigma_xy;
  Eigen::MatrixXd sigma;  // assembled (p+q) x (p+q) block matrix

  Eigen::Index p() const { return sigma_x.rows(); }
  Eigen::Index q() const { return sigma_y.rows(); }

  static CovarianceModel assemble(Eigen::MatrixXd sigma_x,
                                  Eigen::MatrixXd sigma_y,
                                  Eigen::MatrixXd sigma_xy);
};

// Per-coordinate confidence intervals for one direction matrix.
struct CiTable {
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
  Eigen::MatrixXd point;

  Eigen::Index rows() const { return point.rows(); }
  Eigen::Index cols() const { return point.cols(); }
};

}  // namespace ccaboot

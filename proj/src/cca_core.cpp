#include "ccaboot/cca_core.hpp"

#include <cmath>
#include <string>

#include "ccaboot/errors.hpp"
#include "ccaboot/stats.hpp"

namespace ccaboot {

namespace {

constexpr double kRankRelTol = 1e-10;

void check_data(const DataMatrix& m, const char* name) {
  if (m.rows() == 0 || m.cols() == 0)
    throw InvalidInputError(std::string(name) + ": empty matrix");
  if (m.rows() < 2)
    throw InvalidInputError(std::string(name) + ": need at least two rows");
  if (!m.values.allFinite())
    throw InvalidInputError(std::string(name) + ": non-finite entries");
}

// Thin QR with a scale-relative rank check on the diagonal of R.
struct ThinQr {
  Eigen::MatrixXd q;  // N x d
  Eigen::MatrixXd r;  // d x d upper triangular
};

ThinQr thin_qr_full_rank(const Eigen::MatrixXd& m, const char* block) {
  const Eigen::Index n = m.rows(), d = m.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd r =
      qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  const Eigen::VectorXd diag = r.diagonal().cwiseAbs();
  const double max_diag = diag.maxCoeff();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (diag(i) > kRankRelTol * max_diag) ++rank;
  if (max_diag == 0.0 || rank < d)
    throw RankDeficiencyError(
        block, max_diag == 0.0 ? 0 : rank,
        std::string(block) + " is rank deficient (numerical rank " +
            std::to_string(max_diag == 0.0 ? 0 : rank) + " of " +
            std::to_string(d) + ")");
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
  return {std::move(q), std::move(r)};
}

}  // namespace

void apply_sign_convention(Eigen::MatrixXd& b, Eigen::MatrixXd& gamma) {
  for (Eigen::Index k = 0; k < gamma.cols(); ++k) {
    Eigen::Index which = 0;
    gamma.col(k).cwiseAbs().maxCoeff(&which);
    if (gamma(which, k) < 0.0) {
      gamma.col(k) = -gamma.col(k);
      b.col(k) = -b.col(k);
    }
  }
}

DataMatrix center_columns(const DataMatrix& x) {
  check_data(x, "center_columns");
  DataMatrix out;
  out.values = x.values.rowwise() - x.values.colwise().mean();
  out.centered = true;
  return out;
}

CcaSolution estimate_cca(const DataMatrix& x, const DataMatrix& y) {
  check_data(x, "X");
  check_data(y, "Y");
  if (x.rows() != y.rows())
    throw InvalidInputError("estimate_cca: X and Y row counts differ");
  const Eigen::Index n = x.rows(), p = x.cols(), q = y.cols();
  if (n <= std::max(p, q))
    throw InvalidInputError("estimate_cca: need N > max(p, q)");

  const Eigen::MatrixXd xc =
      x.centered ? x.values
                 : (x.values.rowwise() - x.values.colwise().mean()).eval();
  const Eigen::MatrixXd yc =
      y.centered ? y.values
                 : (y.values.rowwise() - y.values.colwise().mean()).eval();

  const ThinQr qx = thin_qr_full_rank(xc, "X");
  const ThinQr qy = thin_qr_full_rank(yc, "Y");

  const Eigen::MatrixXd cross = qx.q.transpose() * qy.q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      cross, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const Eigen::Index k = std::min(p, q);
  const double scale = std::sqrt(static_cast<double>(n - 1));

  CcaSolution solution;
  solution.rho =
      svd.singularValues().head(k).cwiseMin(1.0).cwiseMax(0.0);
  solution.b = scale * qx.r.triangularView<Eigen::Upper>().solve(
                           svd.matrixU().leftCols(k));
  solution.gamma = scale * qy.r.triangularView<Eigen::Upper>().solve(
                               svd.matrixV().leftCols(k));
  apply_sign_convention(solution.b, solution.gamma);
  return solution;
}

CcaSolution population_cca(const CovarianceModel& model) {
  if (model.sigma_xy.rows() != model.p() || model.sigma_xy.cols() != model.q())
    throw InvalidInputError("population_cca: cross-covariance shape mismatch");

  const Eigen::MatrixXd sx_inv_half =
      inverse_sqrt_spd(model.sigma_x, 1e-12, "SigmaX");
  const Eigen::MatrixXd sy_inv_half =
      inverse_sqrt_spd(model.sigma_y, 1e-12, "SigmaY");

  const Eigen::MatrixXd target = sx_inv_half * model.sigma_xy * sy_inv_half;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      target, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const Eigen::Index k = std::min(model.p(), model.q());
  CcaSolution solution;
  solution.rho =
      svd.singularValues().head(k).cwiseMin(1.0).cwiseMax(0.0);
  solution.b = sx_inv_half * svd.matrixU().leftCols(k);
  solution.gamma = sy_inv_half * svd.matrixV().leftCols(k);
  apply_sign_convention(solution.b, solution.gamma);
  return solution;
}

CanonicalVariates canonical_variates(const DataMatrix& x, const DataMatrix& y,
                                     const CcaSolution& solution) {
  check_data(x, "X");
  check_data(y, "Y");
  if (x.cols() != solution.p() || y.cols() != solution.q())
    throw InvalidInputError("canonical_variates: direction shape mismatch");
  if (x.rows() != y.rows())
    throw InvalidInputError("canonical_variates: X and Y row counts differ");
  return {x.values * solution.b, y.values * solution.gamma};
}

CovarianceModel CovarianceModel::assemble(Eigen::MatrixXd sigma_x,
                                          Eigen::MatrixXd sigma_y,
                                          Eigen::MatrixXd sigma_xy) {
  if (sigma_x.rows() != sigma_x.cols() || sigma_y.rows() != sigma_y.cols())
    throw InvalidInputError("CovarianceModel: covariance blocks must be square");
  if (sigma_xy.rows() != sigma_x.rows() || sigma_xy.cols() != sigma_y.rows())
    throw InvalidInputError("CovarianceModel: cross block shape mismatch");
  CovarianceModel model;
  const Eigen::Index p = sigma_x.rows(), q = sigma_y.rows();
  model.sigma.resize(p + q, p + q);
  model.sigma.topLeftCorner(p, p) = sigma_x;
  model.sigma.topRightCorner(p, q) = sigma_xy;
  model.sigma.bottomLeftCorner(q, p) = sigma_xy.transpose();
  model.sigma.bottomRightCorner(q, q) = sigma_y;
  model.sigma_x = std::move(sigma_x);
  model.sigma_y = std::move(sigma_y);
  model.sigma_xy = std::move(sigma_xy);
  return model;
}

}  // namespace ccaboot

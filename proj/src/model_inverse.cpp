#include "ccaboot/model_inverse.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

#include "ccaboot/csv_io.hpp"
#include "ccaboot/errors.hpp"

namespace ccaboot {

namespace {

constexpr double kPinvRelTol = 1e-12;

// Thin SVD with a rank check; throws RankDeficiencyError on failure.
Eigen::JacobiSVD<Eigen::MatrixXd> full_rank_svd(const Eigen::MatrixXd& m,
                                                const char* block) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double threshold = kPinvRelTol * sv(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++rank;
  if (sv(0) == 0.0 || rank < m.cols())
    throw RankDeficiencyError(
        block, sv(0) == 0.0 ? 0 : rank,
        std::string(block) + " is rank deficient (numerical rank " +
            std::to_string(sv(0) == 0.0 ? 0 : rank) + " of " +
            std::to_string(m.cols()) + ")");
  return svd;
}

}  // namespace

Eigen::MatrixXd inflate_trailing_eigenvalues(const Eigen::MatrixXd& sigma_x,
                                             Eigen::Index k) {
  const Eigen::Index p = sigma_x.rows();
  if (sigma_x.cols() != p)
    throw InvalidInputError("inflate_trailing_eigenvalues: matrix not square");
  if (k >= p) return sigma_x;
  if (k < 1)
    throw InvalidInputError("inflate_trailing_eigenvalues: K must be >= 1");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(sigma_x);
  if (eigen.info() != Eigen::Success)
    throw InvalidInputError(
        "inflate_trailing_eigenvalues: eigendecomposition failed");

  // Eigen reports ascending order; work with a descending view.
  Eigen::VectorXd values = eigen.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eigen.eigenvectors().rowwise().reverse();

  const double lambda_k = values(k - 1);
  if (!(lambda_k > 0.0))
    throw InvalidInputError(
        "inflate_trailing_eigenvalues: Kth eigenvalue is not positive");
  if (values.minCoeff() < -1e-8 * values(0))
    throw InvalidInputError(
        "inflate_trailing_eigenvalues: input has a negative eigenvalue "
        "beyond tolerance");

  const double denom = static_cast<double>(p - k + 1);
  for (Eigen::Index j = 1; j <= p - k; ++j)
    values(k + j - 1) = lambda_k * static_cast<double>(p - k + 1 - j) / denom;

  Eigen::MatrixXd inflated =
      vectors * values.asDiagonal() * vectors.transpose();
  return (inflated + inflated.transpose()) / 2.0;
}

CovarianceModel invert_cca_model(const Eigen::VectorXd& rho,
                                 const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& gamma) {
  const Eigen::Index k = rho.size();
  const Eigen::Index p = b.rows(), q = gamma.rows();
  if (k == 0) throw InvalidInputError("invert_cca_model: empty correlations");
  if (b.cols() != k || gamma.cols() != k)
    throw InvalidInputError(
        "invert_cca_model: direction matrices must have K columns");
  if (q != k)
    throw InvalidInputError("invert_cca_model: requires q = K");
  if (p < q)
    throw InvalidInputError("invert_cca_model: requires p >= q");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(rho(i) > 0.0 && rho(i) < 1.0))
      throw InvalidInputError(
          "invert_cca_model: correlations must lie strictly in (0, 1)");
    if (i > 0 && !(rho(i) < rho(i - 1)))
      throw InvalidInputError(
          "invert_cca_model: correlations must be strictly decreasing");
  }

  // Gamma is square and full rank: SigmaY = (Gamma^{-1})' Gamma^{-1}.
  full_rank_svd(gamma, "Gamma");
  const Eigen::MatrixXd gamma_inv =
      gamma.partialPivLu().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd sigma_y = gamma_inv.transpose() * gamma_inv;
  sigma_y = ((sigma_y + sigma_y.transpose()) / 2.0).eval();

  // SigmaX from the Moore-Penrose inverse of B: (B^+)' B^+ = U S^{-2} U'.
  const auto svd_b = full_rank_svd(b, "B");
  Eigen::MatrixXd sigma_x =
      svd_b.matrixU() *
      svd_b.singularValues().array().square().inverse().matrix().asDiagonal() *
      svd_b.matrixU().transpose();
  sigma_x = ((sigma_x + sigma_x.transpose()) / 2.0).eval();
  if (p > k) sigma_x = inflate_trailing_eigenvalues(sigma_x, k);

  const Eigen::MatrixXd sigma_xy =
      sigma_x * b * rho.asDiagonal() * gamma.transpose() * sigma_y;
  return CovarianceModel::assemble(std::move(sigma_x), std::move(sigma_y),
                                   sigma_xy);
}

void save_covariance_model(const std::filesystem::path& dir,
                           const CovarianceModel& model) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "sigma_x.csv", model.sigma_x);
  write_matrix_csv(dir / "sigma_y.csv", model.sigma_y);
  write_matrix_csv(dir / "sigma_xy.csv", model.sigma_xy);
  nlohmann::json manifest;
  manifest["p"] = model.p();
  manifest["q"] = model.q();
  write_file_atomic(dir / "model.json", manifest.dump(2) + "\n");
}

CovarianceModel load_covariance_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("cannot open " + (dir / "model.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model manifest in " + dir.string() + ": " + e.what());
  }
  auto model = CovarianceModel::assemble(
      read_matrix_csv(dir / "sigma_x.csv"),
      read_matrix_csv(dir / "sigma_y.csv"),
      read_matrix_csv(dir / "sigma_xy.csv"));
  if (model.p() != manifest.at("p").get<Eigen::Index>() ||
      model.q() != manifest.at("q").get<Eigen::Index>())
    throw IoError("model manifest dimensions disagree with CSV blocks in " +
                  dir.string());
  return model;
}

}  // namespace ccaboot

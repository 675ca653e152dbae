#include "ccaboot/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "ccaboot/csv_io.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/rng.hpp"
#include "ccaboot/stats.hpp"

namespace ccaboot {

namespace {

constexpr double kRankRelTol = 1e-10;

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> checked_nuisance_qr(
    const Eigen::MatrixXd& w) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
  qr.setThreshold(kRankRelTol);
  if (qr.rank() < w.cols()) {
    std::string dependent;
    const auto& permutation = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < w.cols(); ++i) {
      if (!dependent.empty()) dependent += ", ";
      dependent += std::to_string(permutation(i));
    }
    throw RankDeficiencyError(
        "W", qr.rank(),
        "residualize_nuisance: nuisance matrix is rank deficient; dependent "
        "column(s): " + dependent);
  }
  // An intercept must lie in the span of W, otherwise residuals are not
  // centered and the downstream PCA contract breaks.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(w.rows());
  const Eigen::VectorXd fitted = w * qr.solve(ones);
  if ((fitted - ones).norm() > 1e-8 * ones.norm())
    throw InvalidInputError(
        "residualize_nuisance: W must span an intercept column");
  return qr;
}

}  // namespace

ResidualizedData residualize_nuisance(const Eigen::MatrixXd& x_train,
                                      const Eigen::MatrixXd& y_train,
                                      const Eigen::MatrixXd& w_train,
                                      const Eigen::MatrixXd& x_test,
                                      const Eigen::MatrixXd& y_test,
                                      const Eigen::MatrixXd& w_test) {
  if (x_train.rows() != w_train.rows() || y_train.rows() != w_train.rows())
    throw InvalidInputError(
        "residualize_nuisance: training blocks have differing row counts");
  if (x_test.rows() != w_test.rows() || y_test.rows() != w_test.rows())
    throw InvalidInputError(
        "residualize_nuisance: test blocks have differing row counts");
  if (x_train.cols() != x_test.cols() || y_train.cols() != y_test.cols() ||
      w_train.cols() != w_test.cols())
    throw InvalidInputError(
        "residualize_nuisance: train/test column counts differ");
  if (w_train.rows() <= w_train.cols())
    throw InvalidInputError(
        "residualize_nuisance: training half has too few rows for W");
  const auto qr = checked_nuisance_qr(w_train);

  ResidualizedData out;
  out.coef_x = qr.solve(x_train);
  out.coef_y = qr.solve(y_train);
  out.x_train = x_train - w_train * out.coef_x;
  out.y_train = y_train - w_train * out.coef_y;
  out.x_test = x_test - w_test * out.coef_x;
  out.y_test = y_test - w_test * out.coef_y;
  return out;
}

PcaReduction pca_reduce(const Eigen::MatrixXd& train_residuals,
                        const Eigen::MatrixXd& test_residuals,
                        Eigen::Index r) {
  if (train_residuals.cols() != test_residuals.cols())
    throw InvalidInputError("pca_reduce: train/test column counts differ");
  if (r < 1) throw InvalidInputError("pca_reduce: r must be >= 1");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(
      train_residuals, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankRelTol * sv(0)) ++rank;
  if (r > rank)
    throw InvalidInputError("pca_reduce: requested r = " + std::to_string(r) +
                            " exceeds the numerical rank " +
                            std::to_string(rank) + " of the training data");

  PcaReduction out;
  out.basis = svd.matrixV().leftCols(r);
  out.train_scores = train_residuals * out.basis;
  out.test_scores = test_residuals * out.basis;
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> standardize_columns(
    const Eigen::MatrixXd& m) {
  if (m.rows() < 2)
    throw InvalidInputError("standardize_columns: need at least two rows");
  Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  Eigen::VectorXd sds =
      (centered.array().square().colwise().sum() /
       static_cast<double>(m.rows() - 1))
          .sqrt()
          .transpose();
  for (Eigen::Index j = 0; j < sds.size(); ++j) {
    if (!(sds(j) > 0.0))
      throw DegenerateVariableError(
          j, "standardize_columns: column " + std::to_string(j) +
             " has zero variance");
    centered.col(j) /= sds(j);
  }
  return {std::move(centered), std::move(sds)};
}

Eigen::MatrixXd map_directions_to_original(const Eigen::MatrixXd& b_hat,
                                           const PreprocessModel& model,
                                           const CiTable* ci_table) {
  if (b_hat.rows() != model.pca_basis.cols() ||
      b_hat.rows() != model.column_variances_x.size())
    throw InvalidInputError(
        "map_directions_to_original: direction rows do not match the model");
  Eigen::MatrixXd thresholded = b_hat;
  if (ci_table != nullptr) {
    if (ci_table->rows() != b_hat.rows() || ci_table->cols() != b_hat.cols())
      throw InvalidInputError(
          "map_directions_to_original: CI table shape mismatch");
    for (Eigen::Index j = 0; j < b_hat.cols(); ++j)
      for (Eigen::Index i = 0; i < b_hat.rows(); ++i)
        if (ci_table->lower(i, j) <= 0.0 && 0.0 <= ci_table->upper(i, j))
          thresholded(i, j) = 0.0;
  }
  return model.pca_basis *
         model.column_variances_x.array().rsqrt().matrix().asDiagonal() *
         thresholded;
}

PreprocessedData run_preprocess(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& y,
                                const Eigen::MatrixXd& w, Eigen::Index r,
                                std::uint64_t split_seed) {
  if (x.rows() != y.rows() || x.rows() != w.rows())
    throw InvalidInputError("run_preprocess: row counts differ");
  const Eigen::Index n = x.rows();
  if (n < 4) throw InvalidInputError("run_preprocess: too few rows");

  // Roughly equal random split; the held-out half is what CCA sees.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  RngStream rng(split_seed, {0x5917u});
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }
  const Eigen::Index n_train = n / 2;
  auto take = [&](const Eigen::MatrixXd& m, Eigen::Index begin,
                  Eigen::Index count) {
    Eigen::MatrixXd out(count, m.cols());
    for (Eigen::Index i = 0; i < count; ++i)
      out.row(i) = m.row(order[static_cast<std::size_t>(begin + i)]);
    return out;
  };

  const auto residuals = residualize_nuisance(
      take(x, 0, n_train), take(y, 0, n_train), take(w, 0, n_train),
      take(x, n_train, n - n_train), take(y, n_train, n - n_train),
      take(w, n_train, n - n_train));
  const auto reduction = pca_reduce(residuals.x_train, residuals.x_test, r);

  PreprocessedData out;
  auto [x_std, x_sds] = standardize_columns(reduction.test_scores);
  auto [y_std, y_sds] = standardize_columns(residuals.y_test);
  out.x = std::move(x_std);
  out.y = std::move(y_std);
  out.model.nuisance_coef_x = residuals.coef_x;
  out.model.nuisance_coef_y = residuals.coef_y;
  out.model.pca_basis = reduction.basis;
  out.model.column_variances_x = x_sds.array().square();
  out.model.column_variances_y = y_sds.array().square();
  out.model.r = r;
  return out;
}

void save_preprocess_model(const std::filesystem::path& dir,
                           const PreprocessModel& model) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "nuisance_coef_x.csv", model.nuisance_coef_x);
  write_matrix_csv(dir / "nuisance_coef_y.csv", model.nuisance_coef_y);
  write_matrix_csv(dir / "pca_basis.csv", model.pca_basis);
  write_matrix_csv(dir / "column_variances_x.csv", model.column_variances_x);
  write_matrix_csv(dir / "column_variances_y.csv", model.column_variances_y);
  nlohmann::json manifest;
  manifest["r"] = model.r;
  write_file_atomic(dir / "preprocess.json", manifest.dump(2) + "\n");
}

PreprocessModel load_preprocess_model(const std::filesystem::path& dir) {
  PreprocessModel model;
  model.nuisance_coef_x = read_matrix_csv(dir / "nuisance_coef_x.csv");
  model.nuisance_coef_y = read_matrix_csv(dir / "nuisance_coef_y.csv");
  model.pca_basis = read_matrix_csv(dir / "pca_basis.csv");
  model.column_variances_x = read_matrix_csv(dir / "column_variances_x.csv");
  model.column_variances_y = read_matrix_csv(dir / "column_variances_y.csv");
  std::ifstream in(dir / "preprocess.json");
  if (!in) throw IoError("cannot open " + (dir / "preprocess.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad preprocess manifest in " + dir.string() + ": " +
                  e.what());
  }
  model.r = manifest.at("r").get<Eigen::Index>();
  if (model.pca_basis.cols() != model.r)
    throw IoError("preprocess manifest r disagrees with basis in " +
                  dir.string());
  return model;
}

}  // namespace ccaboot

#include "ccaboot/simgen.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <string>

#include "ccaboot/cca_core.hpp"
#include "ccaboot/csv_io.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/model_inverse.hpp"
#include "ccaboot/stats.hpp"

namespace ccaboot {

Regime parse_regime(const std::string& name) {
  if (name == "dense") return Regime::kDense;
  if (name == "sparse") return Regime::kSparse;
  throw InvalidInputError("unknown regime '" + name + "' (dense|sparse)");
}

CovarianceKind parse_covariance_kind(const std::string& name) {
  if (name == "sparse-precision") return CovarianceKind::kSparsePrecision;
  if (name == "identity") return CovarianceKind::kIdentity;
  throw InvalidInputError("unknown covariance kind '" + name +
                          "' (sparse-precision|identity)");
}

NuisanceLevel parse_nuisance_level(const std::string& name) {
  if (name == "null") return NuisanceLevel::kNull;
  if (name == "mean-abs") return NuisanceLevel::kMeanAbs;
  if (name == "max-abs") return NuisanceLevel::kMaxAbs;
  throw InvalidInputError("unknown level '" + name +
                          "' (null|mean-abs|max-abs)");
}

Block parse_block(const std::string& name) {
  if (name == "B") return Block::kB;
  if (name == "Gamma") return Block::kGamma;
  throw InvalidInputError("unknown block '" + name + "' (B|Gamma)");
}

std::string regime_name(Regime regime) {
  return regime == Regime::kDense ? "dense" : "sparse";
}
std::string covariance_kind_name(CovarianceKind kind) {
  return kind == CovarianceKind::kSparsePrecision ? "sparse-precision"
                                                  : "identity";
}
std::string nuisance_level_name(NuisanceLevel level) {
  switch (level) {
    case NuisanceLevel::kNull: return "null";
    case NuisanceLevel::kMeanAbs: return "mean-abs";
    case NuisanceLevel::kMaxAbs: return "max-abs";
  }
  throw InvalidInputError("unknown nuisance level value");
}
std::string block_name(Block block) {
  return block == Block::kB ? "B" : "Gamma";
}

Eigen::MatrixXd build_precision(Eigen::Index d, bool break_rows) {
  if (d < 3)
    throw InvalidInputError("build_precision: need dimension >= 3");
  Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (i + 1 < d) omega(i, i + 1) = omega(i + 1, i) = 0.5;
    if (i + 2 < d) omega(i, i + 2) = omega(i + 2, i) = 0.4;
  }
  if (break_rows) {
    // 1-based rows floor(d/2) and floor(d/2)+1.
    const Eigen::Index first = d / 2 - 1;
    for (Eigen::Index row : {first, first + 1}) {
      for (Eigen::Index j = 0; j < d; ++j) {
        if (j == row) continue;
        omega(row, j) = 0.0;
        omega(j, row) = 0.0;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(omega);
  if (eigen.info() != Eigen::Success || eigen.eigenvalues().minCoeff() <= 0.0)
    throw ConstructionError(
        "build_precision: matrix is not positive definite");
  return omega;
}

namespace {

Eigen::MatrixXd covariance_block(Eigen::Index d, CovarianceKind kind) {
  if (kind == CovarianceKind::kIdentity)
    return Eigen::MatrixXd::Identity(d, d);
  return inverse_spd(build_precision(d, true), 1e-12, "precision");
}

// Pattern of ones on `support` leading (offset 0) or trailing coordinates,
// normalized so direction' Sigma direction = 1.
Eigen::VectorXd normalized_direction(Eigen::Index d, Eigen::Index begin,
                                     Eigen::Index count,
                                     const Eigen::MatrixXd& sigma) {
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(d);
  direction.segment(begin, count).setOnes();
  const double scale = direction.dot(sigma * direction);
  return direction / std::sqrt(scale);
}

struct SupportPlan {
  Eigen::Index first_count;   // support of the first direction from index 0
  Eigen::Index second_begin;  // complementary support for the second
};

SupportPlan support_plan(Eigen::Index d, Regime regime) {
  if (regime == Regime::kDense) return {d / 2, d / 2};
  return {2, 2};
}

void append_direction_monitors(std::vector<MonitoredCoordinate>& monitored,
                               const CcaSolution& solution,
                               Eigen::Index direction) {
  const Eigen::Index p = solution.p(), q = solution.q();
  auto add = [&](Block block, Eigen::Index index, double value) {
    monitored.push_back(
        {block, direction, index, value, value == 0.0});
  };
  add(Block::kB, p - 1, solution.b(p - 1, direction));
  add(Block::kGamma, q - 1, solution.gamma(q - 1, direction));
  add(Block::kB, 0, solution.b(0, direction));
  add(Block::kGamma, 0, solution.gamma(0, direction));
}

void check_design_dims(const SimDesign& design) {
  if (design.p < design.q)
    throw InvalidInputError("sim design: requires p >= q");
  if (design.q < 2)
    throw InvalidInputError("sim design: requires q >= 2");
}

}  // namespace

GroundTruth build_sim1_truth(const SimDesign& design) {
  check_design_dims(design);
  if (design.rho.size() != 1)
    throw InvalidInputError("build_sim1_truth: rho must have length 1");
  if (!(design.rho(0) > 0.0 && design.rho(0) < 1.0))
    throw InvalidInputError("build_sim1_truth: rho must lie in (0, 1)");

  const Eigen::MatrixXd sigma_x = covariance_block(design.p, design.covariance);
  const Eigen::MatrixXd sigma_y = covariance_block(design.q, design.covariance);
  const auto plan_x = support_plan(design.p, design.regime);
  const auto plan_y = support_plan(design.q, design.regime);

  GroundTruth truth;
  truth.solution.rho = design.rho;
  truth.solution.b = normalized_direction(design.p, 0, plan_x.first_count, sigma_x);
  truth.solution.gamma =
      normalized_direction(design.q, 0, plan_y.first_count, sigma_y);

  const Eigen::MatrixXd sigma_xy = design.rho(0) * sigma_x * truth.solution.b *
                                   truth.solution.gamma.transpose() * sigma_y;
  truth.model = CovarianceModel::assemble(sigma_x, sigma_y, sigma_xy);
  append_direction_monitors(truth.monitored, truth.solution, 0);
  return truth;
}

GroundTruth build_sim2_truth(const SimDesign& design) {
  check_design_dims(design);
  if (design.rho.size() != 2)
    throw InvalidInputError("build_sim2_truth: rho must have length 2");
  if (!(design.rho(0) > design.rho(1) && design.rho(1) > 0.0 &&
        design.rho(0) < 1.0))
    throw InvalidInputError(
        "build_sim2_truth: rho must be strictly decreasing in (0, 1)");

  const Eigen::MatrixXd sigma_x = covariance_block(design.p, design.covariance);
  const Eigen::MatrixXd sigma_y = covariance_block(design.q, design.covariance);
  const auto plan_x = support_plan(design.p, design.regime);
  const auto plan_y = support_plan(design.q, design.regime);
  if (design.p <= plan_x.second_begin || design.q <= plan_y.second_begin)
    throw InvalidInputError(
        "build_sim2_truth: no coordinates left for the second direction");

  GroundTruth truth;
  truth.solution.rho = design.rho;
  truth.solution.b.resize(design.p, 2);
  truth.solution.gamma.resize(design.q, 2);
  truth.solution.b.col(0) =
      normalized_direction(design.p, 0, plan_x.first_count, sigma_x);
  truth.solution.b.col(1) = normalized_direction(
      design.p, plan_x.second_begin, design.p - plan_x.second_begin, sigma_x);
  truth.solution.gamma.col(0) =
      normalized_direction(design.q, 0, plan_y.first_count, sigma_y);
  truth.solution.gamma.col(1) = normalized_direction(
      design.q, plan_y.second_begin, design.q - plan_y.second_begin, sigma_y);

  const double cross_b =
      truth.solution.b.col(0).dot(sigma_x * truth.solution.b.col(1));
  const double cross_g =
      truth.solution.gamma.col(0).dot(sigma_y * truth.solution.gamma.col(1));
  if (std::abs(cross_b) > 1e-8 || std::abs(cross_g) > 1e-8)
    throw ConstructionError(
        "build_sim2_truth: direction supports are not orthogonal under the "
        "chosen covariance (b1' Sx b2 = " +
        format_double(cross_b) + ", g1' Sy g2 = " + format_double(cross_g) +
        "); use the dense regime or identity covariance");

  const Eigen::MatrixXd sigma_xy = sigma_x * truth.solution.b *
                                   design.rho.asDiagonal() *
                                   truth.solution.gamma.transpose() * sigma_y;
  truth.model = CovarianceModel::assemble(sigma_x, sigma_y, sigma_xy);
  append_direction_monitors(truth.monitored, truth.solution, 0);
  append_direction_monitors(truth.monitored, truth.solution, 1);
  return truth;
}

GroundTruth build_sim3_truth(const CcaSolution& base,
                             const TargetCoordinate& target,
                             NuisanceLevel level) {
  if (base.k() != base.q())
    throw InvalidInputError(
        "build_sim3_truth: base must have K = q directions");

  GroundTruth truth;
  truth.solution = base;
  Eigen::MatrixXd& block = target.block == Block::kB ? truth.solution.b
                                                     : truth.solution.gamma;
  if (target.direction < 0 || target.direction >= base.k())
    throw InvalidInputError("build_sim3_truth: target direction out of range");
  const Eigen::Index row =
      target.index < 0 ? block.rows() - 1 : target.index;
  if (row >= block.rows())
    throw InvalidInputError("build_sim3_truth: target index out of range");

  const double original = block(row, target.direction);
  const double sign = original < 0.0 ? -1.0 : 1.0;
  double magnitude = 0.0;
  if (level != NuisanceLevel::kNull) {
    double sum = 0.0, max_abs = 0.0;
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      if (i == row) continue;
      const double a = std::abs(block(i, target.direction));
      sum += a;
      max_abs = std::max(max_abs, a);
    }
    magnitude = level == NuisanceLevel::kMeanAbs
                    ? sum / static_cast<double>(block.rows() - 1)
                    : max_abs;
  }
  block(row, target.direction) = level == NuisanceLevel::kNull
                                     ? 0.0
                                     : sign * magnitude;

  truth.model = invert_cca_model(truth.solution.rho, truth.solution.b,
                                 truth.solution.gamma);
  truth.monitored.push_back({target.block, target.direction, row,
                             block(row, target.direction),
                             level == NuisanceLevel::kNull});
  return truth;
}

CcaSolution synthetic_sim3_base(Eigen::Index p, Eigen::Index q,
                                std::uint64_t seed) {
  if (p < q || q < 1)
    throw InvalidInputError("synthetic_sim3_base: requires p >= q >= 1");
  RngStream rng(seed, {0x51Du});
  CcaSolution base;
  base.rho.resize(q);
  // Strictly decreasing correlations on [0.2, 0.7].
  for (Eigen::Index i = 0; i < q; ++i)
    base.rho(i) =
        q == 1 ? 0.6 : 0.7 - 0.5 * static_cast<double>(i) / (q - 1);
  base.b.resize(p, q);
  base.gamma.resize(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) base.b(i, j) = rng.next_gaussian();
    for (Eigen::Index i = 0; i < q; ++i) base.gamma(i, j) = rng.next_gaussian();
  }
  // Normalize against the covariance the inverse model induces, so the base
  // is itself a population solution.
  const CovarianceModel model = invert_cca_model(base.rho, base.b, base.gamma);
  return population_cca(model);
}

GroundTruth build_ground_truth(const SimDesign& design) {
  if (design.kind == "sim1") return build_sim1_truth(design);
  if (design.kind == "sim2") return build_sim2_truth(design);
  if (design.kind == "sim3") {
    CcaSolution base;
    if (!design.sim3_base_model_dir.empty()) {
      base = population_cca(load_covariance_model(design.sim3_base_model_dir));
      // The inverse model needs strictly decreasing positive correlations;
      // population solutions of empirical covariances satisfy this almost
      // surely, so just re-validate via invert_cca_model below.
    } else {
      base = synthetic_sim3_base(design.p, design.q, design.sim3_base_seed);
    }
    return build_sim3_truth(base, design.target, design.level);
  }
  throw InvalidInputError("unknown design kind '" + design.kind +
                          "' (sim1|sim2|sim3)");
}

std::pair<DataMatrix, DataMatrix> sample_mvn(const CovarianceModel& model,
                                             Eigen::Index n, RngStream& rng) {
  if (n < 1) throw InvalidInputError("sample_mvn: need N >= 1");
  const Eigen::Index d = model.sigma.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(model.sigma);
  if (eigen.info() != Eigen::Success)
    throw SingularCovarianceError("sample_mvn: eigendecomposition failed");
  Eigen::VectorXd values = eigen.eigenvalues();
  const double max_eig = values.maxCoeff();
  if (values.minCoeff() < -1e-8 * max_eig)
    throw SingularCovarianceError(
        "sample_mvn: covariance has eigenvalue below -1e-8 * max");
  values = values.cwiseMax(0.0);

  const Eigen::MatrixXd transform =
      eigen.eigenvectors() * values.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.next_gaussian();
  const Eigen::MatrixXd draws = z * transform.transpose();

  DataMatrix x{draws.leftCols(model.p()), false};
  DataMatrix y{draws.rightCols(model.q()), false};
  return {std::move(x), std::move(y)};
}

void save_ground_truth(const std::filesystem::path& dir,
                       const GroundTruth& truth) {
  std::filesystem::create_directories(dir);
  save_covariance_model(dir, truth.model);
  write_matrix_csv(dir / "solution_b.csv", truth.solution.b);
  write_matrix_csv(dir / "solution_gamma.csv", truth.solution.gamma);
  write_matrix_csv(dir / "solution_rho.csv", truth.solution.rho);
  nlohmann::json manifest;
  manifest["k"] = truth.solution.k();
  auto& list = manifest["monitored"] = nlohmann::json::array();
  for (const auto& m : truth.monitored) {
    list.push_back({{"block", block_name(m.block)},
                    {"direction", m.direction},
                    {"index", m.index},
                    {"true_value", m.true_value},
                    {"is_null", m.is_null}});
  }
  write_file_atomic(dir / "truth.json", manifest.dump(2) + "\n");
}

GroundTruth load_ground_truth(const std::filesystem::path& dir) {
  GroundTruth truth;
  truth.model = load_covariance_model(dir);
  truth.solution.b = read_matrix_csv(dir / "solution_b.csv");
  truth.solution.gamma = read_matrix_csv(dir / "solution_gamma.csv");
  truth.solution.rho = read_matrix_csv(dir / "solution_rho.csv");
  std::ifstream in(dir / "truth.json");
  if (!in) throw IoError("cannot open " + (dir / "truth.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad truth manifest in " + dir.string() + ": " + e.what());
  }
  for (const auto& entry : manifest.at("monitored")) {
    truth.monitored.push_back(
        {parse_block(entry.at("block").get<std::string>()),
         entry.at("direction").get<Eigen::Index>(),
         entry.at("index").get<Eigen::Index>(),
         entry.at("true_value").get<double>(),
         entry.at("is_null").get<bool>()});
  }
  return truth;
}

}  // namespace ccaboot

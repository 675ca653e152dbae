#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ccaboot/rng.hpp"
#include "ccaboot/types.hpp"

namespace ccaboot {

enum class Regime { kDense, kSparse };
enum class CovarianceKind { kSparsePrecision, kIdentity };
enum class NuisanceLevel { kNull, kMeanAbs, kMaxAbs };
enum class Block { kB, kGamma };

Regime parse_regime(const std::string& name);
CovarianceKind parse_covariance_kind(const std::string& name);
NuisanceLevel parse_nuisance_level(const std::string& name);
Block parse_block(const std::string& name);
std::string regime_name(Regime regime);
std::string covariance_kind_name(CovarianceKind kind);
std::string nuisance_level_name(NuisanceLevel level);
std::string block_name(Block block);

// Which direction entry a data-based simulation modifies. index = -1 means
// the last coordinate of the chosen block.
struct TargetCoordinate {
  Block block = Block::kB;
  Eigen::Index direction = 0;  // 0-based column
  Eigen::Index index = -1;     // 0-based row
};

struct SimDesign {
  std::string id;
  std::string kind = "sim1";  // sim1 | sim2 | sim3
  Eigen::Index p = 10;
  Eigen::Index q = 10;
  Eigen::Index n = 1000;
  Eigen::VectorXd rho;
  Regime regime = Regime::kDense;
  CovarianceKind covariance = CovarianceKind::kSparsePrecision;
  // sim3 only:
  std::uint64_t sim3_base_seed = 1;
  std::string sim3_base_model_dir;  // optional CovarianceModel directory
  TargetCoordinate target;
  NuisanceLevel level = NuisanceLevel::kNull;
};

struct MonitoredCoordinate {
  Block block = Block::kB;
  Eigen::Index direction = 0;
  Eigen::Index index = 0;
  double true_value = 0.0;
  bool is_null = false;
};

struct GroundTruth {
  CovarianceModel model;
  CcaSolution solution;
  std::vector<MonitoredCoordinate> monitored;
};

// Banded precision: 1 on the diagonal, 0.5 on the first off-diagonal, 0.4 on
// the second. break_rows zeroes the off-diagonal entries of rows/columns
// floor(d/2) and floor(d/2)+1 (1-based), which severs the marginal
// dependence between the first and second halves of the coordinates.
Eigen::MatrixXd build_precision(Eigen::Index d, bool break_rows);

// One nonzero canonical correlation; directions supported on the first half
// of coordinates (dense) or the first two (sparse), normalized against the
// generative covariance. Monitors the first (signal) and last (null)
// coordinate of each direction.
GroundTruth build_sim1_truth(const SimDesign& design);

// Two nonzero canonical correlations; second directions live on the
// complementary support. Verifies the cross-direction orthogonality the
// construction relies on and throws ConstructionError when it fails (sparse
// regime with the banded covariance).
GroundTruth build_sim2_truth(const SimDesign& design);

// Data-based simulation: modify one coordinate of a reference solution and
// rebuild the generative covariance around the modified solution. The base
// must satisfy the model-inverse preconditions (K = q <= p).
GroundTruth build_sim3_truth(const CcaSolution& base,
                             const TargetCoordinate& target,
                             NuisanceLevel level);

// Deterministic stand-in base solution for data-based simulations when no
// empirical covariance is supplied.
CcaSolution synthetic_sim3_base(Eigen::Index p, Eigen::Index q,
                                std::uint64_t seed);

// Dispatches on design.kind.
GroundTruth build_ground_truth(const SimDesign& design);

// N i.i.d. draws from N(0, Sigma), split into the X and Y blocks. Sampling
// goes through the symmetric eigendecomposition; eigenvalues in
// [-1e-8 * max, 0) are clamped to zero, anything lower is an error.
std::pair<DataMatrix, DataMatrix> sample_mvn(const CovarianceModel& model,
                                             Eigen::Index n, RngStream& rng);

void save_ground_truth(const std::filesystem::path& dir,
                       const GroundTruth& truth);
GroundTruth load_ground_truth(const std::filesystem::path& dir);

}  // namespace ccaboot

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccaboot/bootstrap_ci.hpp"
#include "ccaboot/simgen.hpp"
#include "ccaboot/types.hpp"

namespace ccaboot {

// One confidence-interval method under evaluation.
struct MethodSpec {
  enum class Kind { kCombootcca, kAsymptotic, kRegression };

  std::string name;  // key used in summaries; must be unique per run
  Kind kind = Kind::kCombootcca;
  double alpha = 0.05;
  BootstrapConfig bootstrap;  // combootcca only (its seed is derived per run)
};

MethodSpec::Kind parse_method_kind(const std::string& name);

// Per-direction joint sign choice: for each direction k the sign s_k is
// applied to the true beta_k and gamma_k together, chosen to maximize the
// number of that direction's monitored coordinates covered by the closed
// intervals; ties go to +1.
struct SignMaximizedCoverage {
  std::vector<bool> covered;  // one flag per monitored coordinate, in order
  Eigen::VectorXd signs;      // chosen s_k per direction
};

SignMaximizedCoverage coverage_with_sign_maximization(
    const CiTable& b_table, const CiTable& gamma_table,
    const GroundTruth& truth);

// True when the closed interval excludes zero.
std::vector<bool> rejection_flags(
    const CiTable& b_table, const CiTable& gamma_table,
    const std::vector<MonitoredCoordinate>& monitored);

// A non-covering interval is conservative when everything it contains is
// smaller in magnitude than the truth. Only defined for a non-null
// coordinate whose interval missed.
bool conservative_flag(double lower, double upper, double true_value);

struct CoordinateSummary {
  MonitoredCoordinate coordinate;
  double coverage_rate = 0.0;
  double mean_length = 0.0;
  double rejection_rate = 0.0;
  // Proportion of non-covering intervals that were conservative; NaN when
  // the coordinate is null or nothing missed.
  double conservative_proportion = 0.0;
  int n_replicates = 0;
};

struct CellSummary {
  std::string method;
  std::string design_id;
  std::vector<CoordinateSummary> coordinates;
  int n_attempted = 0;
  int n_failures = 0;
  bool valid = true;  // false once failures exceed 5% of replicates
};

struct EvalSummary {
  std::vector<CellSummary> cells;
};

// Monte-Carlo evaluation: for each design, build the ground truth once; for
// each replicate, sample one dataset from substream (seed, design,
// replicate) and feed the identical data to every method. Per-replicate
// method failures are counted and excluded from the aggregates. Output is
// deterministic in (designs, methods, n_reps, seed) for any worker count.
EvalSummary run_replicates(const std::vector<SimDesign>& designs,
                           const std::vector<MethodSpec>& methods, int n_reps,
                           std::uint64_t seed, int workers = 1);

// Tidy CSV: method,design_id,block,direction,index,metric,value,n_reps.
// Directions and indices are 1-based. Cell-level rows (failures, valid) use
// block "*".
std::string eval_summary_to_csv(const EvalSummary& summary);

}  // namespace ccaboot

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "ccaboot/alignment.hpp"
#include "ccaboot/rng.hpp"
#include "ccaboot/types.hpp"

namespace ccaboot {

enum class IntervalKind { kPercentile, kNormal };

IntervalKind parse_interval_kind(const std::string& name);
std::string interval_kind_name(IntervalKind kind);

struct BootstrapConfig {
  int n_boots = 10000;
  double alpha = 0.05;
  IntervalKind interval = IntervalKind::kPercentile;
  AlignmentStrategy strategy = AlignmentStrategy::kHungarianWeighted;
  std::uint64_t seed = 0;
  int max_redraws = 100;

  void validate() const;
};

// Draws N row indices with replacement and applies the same indices to both
// blocks, preserving the pairing.
std::pair<DataMatrix, DataMatrix> resample_rows(const DataMatrix& x,
                                                const DataMatrix& y,
                                                RngStream& rng);

// Empirical (Q(alpha/2), Q(1 - alpha/2)) with the linear-interpolation
// quantile at order-statistic position 1 + (m-1)p. alpha = 1 collapses to
// the median.
std::pair<double, double> percentile_interval(std::span<const double> samples,
                                              double alpha);

// point +- z_{1-alpha/2} * sd(samples), sd with divisor m-1.
std::pair<double, double> normal_interval(double point,
                                          std::span<const double> samples,
                                          double alpha);

// Aligned bootstrap draws, one column per replicate; direction coordinates
// are flattened column-major (row + p * direction).
struct ReplicateStore {
  Eigen::MatrixXd b_draws;      // (p*K) x nBoots
  Eigen::MatrixXd gamma_draws;  // (q*K) x nBoots
  Eigen::MatrixXd rho_draws;    // K x nBoots
};

struct CombootccaResult {
  CcaSolution reference;
  CiTable b_ci;
  CiTable gamma_ci;
  ReplicateStore store;
};

// Per-coordinate intervals from a draw matrix; `point` supplies the center
// for normal intervals and the reported point estimates.
CiTable intervals_from_draws(const Eigen::MatrixXd& draws,
                             const Eigen::MatrixXd& point, double alpha,
                             IntervalKind kind);

// Bootstrap confidence intervals for the canonical directions: fit a
// reference solution on the full data, then repeatedly resample rows,
// re-estimate, align each replicate onto the reference, and form
// per-coordinate intervals from the aligned draws. Replicate r consumes the
// random substream (seed, r), so output is identical for any worker count.
// Rank-deficient resamples are redrawn up to max_redraws times per slot.
CombootccaResult combootcca(const DataMatrix& x, const DataMatrix& y,
                            const BootstrapConfig& config, int workers = 1);

}  // namespace ccaboot

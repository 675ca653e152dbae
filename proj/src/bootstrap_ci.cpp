#include "ccaboot/bootstrap_ci.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ccaboot/cca_core.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/stats.hpp"
#include "ccaboot/threading.hpp"

namespace ccaboot {

IntervalKind parse_interval_kind(const std::string& name) {
  if (name == "percentile") return IntervalKind::kPercentile;
  if (name == "normal") return IntervalKind::kNormal;
  throw InvalidInputError("unknown interval kind '" + name +
                          "' (expected percentile|normal)");
}

std::string interval_kind_name(IntervalKind kind) {
  return kind == IntervalKind::kPercentile ? "percentile" : "normal";
}

void BootstrapConfig::validate() const {
  if (n_boots < 2) throw InvalidInputError("nBoots must be at least 2");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInputError("alpha must lie in (0, 1)");
  if (max_redraws < 0) throw InvalidInputError("maxRedraws must be >= 0");
}

std::pair<DataMatrix, DataMatrix> resample_rows(const DataMatrix& x,
                                                const DataMatrix& y,
                                                RngStream& rng) {
  if (x.rows() != y.rows())
    throw InvalidInputError("resample_rows: X and Y row counts differ");
  const Eigen::Index n = x.rows();
  DataMatrix xs, ys;
  xs.values.resize(n, x.cols());
  ys.values.resize(n, y.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto pick = static_cast<Eigen::Index>(
        rng.next_below(static_cast<std::uint64_t>(n)));
    xs.values.row(i) = x.values.row(pick);
    ys.values.row(i) = y.values.row(pick);
  }
  return {std::move(xs), std::move(ys)};
}

namespace {

std::vector<double> sorted_finite(std::span<const double> samples,
                                  const char* who) {
  if (samples.size() < 2)
    throw InvalidInputError(std::string(who) + ": need at least two samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted)
    if (!std::isfinite(v))
      throw InvalidInputError(std::string(who) + ": non-finite sample");
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace

std::pair<double, double> percentile_interval(std::span<const double> samples,
                                              double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw InvalidInputError("percentile_interval: alpha must lie in (0, 1]");
  const auto sorted = sorted_finite(samples, "percentile_interval");
  return {quantile_sorted(sorted, alpha / 2.0),
          quantile_sorted(sorted, 1.0 - alpha / 2.0)};
}

std::pair<double, double> normal_interval(double point,
                                          std::span<const double> samples,
                                          double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInputError("normal_interval: alpha must lie in (0, 1)");
  if (!std::isfinite(point))
    throw InvalidInputError("normal_interval: non-finite point estimate");
  const auto m = samples.size();
  if (m < 2)
    throw InvalidInputError("normal_interval: need at least two samples");
  double mean = 0.0;
  for (double v : samples) {
    if (!std::isfinite(v))
      throw InvalidInputError("normal_interval: non-finite sample");
    mean += v;
  }
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  const double half_width = normal_quantile(1.0 - alpha / 2.0) * sd;
  return {point - half_width, point + half_width};
}

CiTable intervals_from_draws(const Eigen::MatrixXd& draws,
                             const Eigen::MatrixXd& point, double alpha,
                             IntervalKind kind) {
  if (draws.rows() != point.size())
    throw InvalidInputError(
        "intervals_from_draws: draw rows must match point coordinates");
  CiTable table;
  table.point = point;
  table.lower.resizeLike(point);
  table.upper.resizeLike(point);
  std::vector<double> row(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index c = 0; c < draws.rows(); ++c) {
    for (Eigen::Index r = 0; r < draws.cols(); ++r)
      row[static_cast<std::size_t>(r)] = draws(c, r);
    const auto bounds =
        kind == IntervalKind::kPercentile
            ? percentile_interval(row, alpha)
            : normal_interval(point(c), row, alpha);
    table.lower(c) = bounds.first;
    table.upper(c) = bounds.second;
  }
  return table;
}

CombootccaResult combootcca(const DataMatrix& x, const DataMatrix& y,
                            const BootstrapConfig& config, int workers) {
  config.validate();
  const DataMatrix xc = x.centered ? x : center_columns(x);
  const DataMatrix yc = y.centered ? y : center_columns(y);

  CombootccaResult result;
  result.reference = estimate_cca(xc, yc);
  const Eigen::Index p = result.reference.p();
  const Eigen::Index q = result.reference.q();
  const Eigen::Index k = result.reference.k();

  const ColumnSds sds_reference{column_sds(xc.values), column_sds(yc.values)};

  const auto n_boots = static_cast<std::size_t>(config.n_boots);
  result.store.b_draws.resize(p * k, config.n_boots);
  result.store.gamma_draws.resize(q * k, config.n_boots);
  result.store.rho_draws.resize(k, config.n_boots);

  parallel_for(n_boots, workers, [&](std::size_t slot) {
    RngStream rng(config.seed, {static_cast<std::uint64_t>(slot)});
    CcaSolution replicate;
    ColumnSds sds_replicate;
    int attempt = 0;
    for (;; ++attempt) {
      auto [xs, ys] = resample_rows(xc, yc, rng);
      try {
        replicate = estimate_cca(xs, ys);
        sds_replicate.x = column_sds(xs.values);
        sds_replicate.y = column_sds(ys.values);
        break;
      } catch (const RankDeficiencyError&) {
        if (attempt >= config.max_redraws) throw;
      }
    }
    const auto aligned = align(result.reference, replicate, config.strategy,
                               sds_reference, sds_replicate);
    const auto column = static_cast<Eigen::Index>(slot);
    result.store.b_draws.col(column) =
        aligned.solution.b.reshaped(p * k, 1);
    result.store.gamma_draws.col(column) =
        aligned.solution.gamma.reshaped(q * k, 1);
    result.store.rho_draws.col(column) = aligned.solution.rho;
  });

  result.b_ci = intervals_from_draws(result.store.b_draws, result.reference.b,
                                     config.alpha, config.interval);
  result.gamma_ci =
      intervals_from_draws(result.store.gamma_draws, result.reference.gamma,
                           config.alpha, config.interval);
  return result;
}

}  // namespace ccaboot

#include "ccaboot/eval.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "ccaboot/baseline_ci.hpp"
#include "ccaboot/csv_io.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/threading.hpp"

namespace ccaboot {

MethodSpec::Kind parse_method_kind(const std::string& name) {
  if (name == "combootcca") return MethodSpec::Kind::kCombootcca;
  if (name == "asymptotic") return MethodSpec::Kind::kAsymptotic;
  if (name == "regression") return MethodSpec::Kind::kRegression;
  throw InvalidInputError("unknown method '" + name +
                          "' (combootcca|asymptotic|regression)");
}

namespace {

const CiTable& table_for(Block block, const CiTable& b_table,
                         const CiTable& gamma_table) {
  return block == Block::kB ? b_table : gamma_table;
}

bool covers(const CiTable& table, const MonitoredCoordinate& m, double value) {
  return table.lower(m.index, m.direction) <= value &&
         value <= table.upper(m.index, m.direction);
}

}  // namespace

SignMaximizedCoverage coverage_with_sign_maximization(
    const CiTable& b_table, const CiTable& gamma_table,
    const GroundTruth& truth) {
  const Eigen::Index k = truth.solution.k();
  SignMaximizedCoverage result;
  result.covered.resize(truth.monitored.size());
  result.signs = Eigen::VectorXd::Ones(k);

  for (Eigen::Index direction = 0; direction < k; ++direction) {
    int best_count = -1;
    double best_sign = 1.0;
    for (const double sign : {1.0, -1.0}) {
      int count = 0;
      for (const auto& m : truth.monitored) {
        if (m.direction != direction) continue;
        if (covers(table_for(m.block, b_table, gamma_table), m,
                   sign * m.true_value))
          ++count;
      }
      if (count > best_count) {  // strict: ties stay at +1
        best_count = count;
        best_sign = sign;
      }
    }
    result.signs(direction) = best_sign;
  }

  for (std::size_t i = 0; i < truth.monitored.size(); ++i) {
    const auto& m = truth.monitored[i];
    result.covered[i] =
        covers(table_for(m.block, b_table, gamma_table), m,
               result.signs(m.direction) * m.true_value);
  }
  return result;
}

std::vector<bool> rejection_flags(
    const CiTable& b_table, const CiTable& gamma_table,
    const std::vector<MonitoredCoordinate>& monitored) {
  std::vector<bool> rejected(monitored.size());
  for (std::size_t i = 0; i < monitored.size(); ++i) {
    const auto& m = monitored[i];
    const CiTable& table = table_for(m.block, b_table, gamma_table);
    rejected[i] = !(table.lower(m.index, m.direction) <= 0.0 &&
                    0.0 <= table.upper(m.index, m.direction));
  }
  return rejected;
}

bool conservative_flag(double lower, double upper, double true_value) {
  if (true_value == 0.0)
    throw ContractViolationError(
        "conservative_flag: undefined for a null coordinate");
  if (lower <= true_value && true_value <= upper)
    throw ContractViolationError(
        "conservative_flag: interval covers the truth");
  return std::max(std::abs(lower), std::abs(upper)) < std::abs(true_value);
}

namespace {

struct CoordinateRecord {
  bool covered = false;
  double length = 0.0;
  bool rejected = false;
  std::optional<bool> conservative;
};

struct ReplicateOutcome {
  bool failed = false;
  std::vector<CoordinateRecord> records;  // per monitored coordinate
};

ReplicateOutcome evaluate_tables(const CiTable& b_table,
                                 const CiTable& gamma_table,
                                 const GroundTruth& truth) {
  ReplicateOutcome outcome;
  const auto coverage =
      coverage_with_sign_maximization(b_table, gamma_table, truth);
  const auto rejected = rejection_flags(b_table, gamma_table, truth.monitored);
  outcome.records.resize(truth.monitored.size());
  for (std::size_t i = 0; i < truth.monitored.size(); ++i) {
    const auto& m = truth.monitored[i];
    const CiTable& table = table_for(m.block, b_table, gamma_table);
    auto& record = outcome.records[i];
    record.covered = coverage.covered[i];
    record.length = table.upper(m.index, m.direction) -
                    table.lower(m.index, m.direction);
    record.rejected = rejected[i];
    if (!m.is_null && !record.covered)
      record.conservative = conservative_flag(
          table.lower(m.index, m.direction), table.upper(m.index, m.direction),
          coverage.signs(m.direction) * m.true_value);
  }
  return outcome;
}

constexpr std::uint64_t kEvalDataTag = 0xE7A1;
constexpr std::uint64_t kEvalMethodTag = 0xE7A2;

}  // namespace

EvalSummary run_replicates(const std::vector<SimDesign>& designs,
                           const std::vector<MethodSpec>& methods, int n_reps,
                           std::uint64_t seed, int workers) {
  if (n_reps < 1) throw InvalidInputError("run_replicates: need nReps >= 1");
  if (designs.empty() || methods.empty())
    throw InvalidInputError("run_replicates: need at least one design and method");

  EvalSummary summary;
  for (std::size_t d = 0; d < designs.size(); ++d) {
    const SimDesign& design = designs[d];
    const GroundTruth truth = build_ground_truth(design);
    const auto n_coords = truth.monitored.size();

    // outcomes[replicate][method]
    std::vector<std::vector<ReplicateOutcome>> outcomes(
        static_cast<std::size_t>(n_reps));
    parallel_for(static_cast<std::size_t>(n_reps), workers,
                 [&](std::size_t rep) {
      RngStream data_rng(seed, {kEvalDataTag, static_cast<std::uint64_t>(d),
                                static_cast<std::uint64_t>(rep)});
      const auto [x, y] = sample_mvn(truth.model, design.n, data_rng);
      auto& per_method = outcomes[rep];
      per_method.resize(methods.size());
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const MethodSpec& method = methods[m];
        const std::uint64_t method_seed =
            RngStream(seed, {kEvalMethodTag, static_cast<std::uint64_t>(d),
                             static_cast<std::uint64_t>(rep),
                             static_cast<std::uint64_t>(m)})
                .next_u64();
        try {
          CiTable b_table, gamma_table;
          switch (method.kind) {
            case MethodSpec::Kind::kCombootcca: {
              BootstrapConfig config = method.bootstrap;
              config.alpha = method.alpha;
              config.seed = method_seed;
              const auto fit = combootcca(x, y, config);
              b_table = fit.b_ci;
              gamma_table = fit.gamma_ci;
              break;
            }
            case MethodSpec::Kind::kAsymptotic: {
              const auto fit = asymptotic_ci(x, y, method.alpha);
              b_table = fit.b_ci;
              gamma_table = fit.gamma_ci;
              break;
            }
            case MethodSpec::Kind::kRegression: {
              const auto fit = regression_ci(x, y, method.alpha, method_seed);
              b_table = fit.b_ci;
              gamma_table = fit.gamma_ci;
              break;
            }
          }
          per_method[m] = evaluate_tables(b_table, gamma_table, truth);
        } catch (const Error&) {
          per_method[m].failed = true;
        }
      }
    });

    // Aggregate in replicate order so accumulation is worker-independent.
    for (std::size_t m = 0; m < methods.size(); ++m) {
      CellSummary cell;
      cell.method = methods[m].name;
      cell.design_id = design.id;
      cell.n_attempted = n_reps;
      std::vector<CoordinateSummary> coords(n_coords);
      std::vector<int> miss_counts(n_coords, 0);
      std::vector<int> conservative_counts(n_coords, 0);
      for (std::size_t i = 0; i < n_coords; ++i)
        coords[i].coordinate = truth.monitored[i];
      for (int rep = 0; rep < n_reps; ++rep) {
        const auto& outcome = outcomes[static_cast<std::size_t>(rep)][m];
        if (outcome.failed) {
          ++cell.n_failures;
          continue;
        }
        for (std::size_t i = 0; i < n_coords; ++i) {
          const auto& record = outcome.records[i];
          auto& coord = coords[i];
          ++coord.n_replicates;
          coord.coverage_rate += record.covered ? 1.0 : 0.0;
          coord.mean_length += record.length;
          coord.rejection_rate += record.rejected ? 1.0 : 0.0;
          if (record.conservative.has_value()) {
            ++miss_counts[i];
            if (*record.conservative) ++conservative_counts[i];
          }
        }
      }
      for (std::size_t i = 0; i < n_coords; ++i) {
        auto& coord = coords[i];
        const double n = coord.n_replicates;
        if (n > 0) {
          coord.coverage_rate /= n;
          coord.mean_length /= n;
          coord.rejection_rate /= n;
        }
        coord.conservative_proportion =
            miss_counts[i] > 0
                ? static_cast<double>(conservative_counts[i]) / miss_counts[i]
                : std::numeric_limits<double>::quiet_NaN();
      }
      cell.coordinates = std::move(coords);
      cell.valid = cell.n_failures * 20 <= n_reps;  // 5% failure cap
      summary.cells.push_back(std::move(cell));
    }
  }
  return summary;
}

std::string eval_summary_to_csv(const EvalSummary& summary) {
  std::string csv =
      "method,design_id,block,direction,index,metric,value,n_reps\n";
  auto row = [&csv](const std::string& method, const std::string& design,
                    const std::string& block, Eigen::Index direction,
                    Eigen::Index index, const char* metric, double value,
                    int n_reps) {
    csv += method + ',' + design + ',' + block + ',' +
           std::to_string(direction) + ',' + std::to_string(index) + ',' +
           metric + ',' + format_double(value) + ',' +
           std::to_string(n_reps) + '\n';
  };
  for (const auto& cell : summary.cells) {
    for (const auto& coord : cell.coordinates) {
      const auto& m = coord.coordinate;
      const std::string block = block_name(m.block);
      row(cell.method, cell.design_id, block, m.direction + 1, m.index + 1,
          "coverage", coord.coverage_rate, coord.n_replicates);
      row(cell.method, cell.design_id, block, m.direction + 1, m.index + 1,
          "mean_length", coord.mean_length, coord.n_replicates);
      row(cell.method, cell.design_id, block, m.direction + 1, m.index + 1,
          "rejection_rate", coord.rejection_rate, coord.n_replicates);
      row(cell.method, cell.design_id, block, m.direction + 1, m.index + 1,
          "conservative_proportion", coord.conservative_proportion,
          coord.n_replicates);
    }
    row(cell.method, cell.design_id, "*", 0, 0, "failures",
        cell.n_failures, cell.n_attempted);
    row(cell.method, cell.design_id, "*", 0, 0, "valid",
        cell.valid ? 1.0 : 0.0, cell.n_attempted);
  }
  return csv;
}

}  // namespace ccaboot

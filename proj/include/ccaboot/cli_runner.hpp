#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace ccaboot {

// Parsed command line. Flags override config-file fields, which override
// built-in defaults.
struct CliOptions {
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> alpha;
  std::optional<int> n_boots;
  std::optional<std::string> strategy;
  std::optional<std::string> interval;
  std::optional<std::string> out;
};

// Monte-Carlo evaluation runs over configured designs and methods; writes
// summary.csv and manifest.json into the output directory.
void run_simulate(const CliOptions& options, std::ostream& diagnostics);

// Confidence intervals for user-supplied data; writes estimates.csv, one
// ci_<method>.csv per method, back-mapped directions when the preprocessing
// pipeline ran, and manifest.json.
void run_infer(const CliOptions& options, std::ostream& diagnostics);

// Merges evaluation summary CSVs into one long-format table.
void run_report(const CliOptions& options, std::ostream& diagnostics);

}  // namespace ccaboot

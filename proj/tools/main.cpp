#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "ccaboot/cli_runner.hpp"
#include "ccaboot/errors.hpp"

namespace {

void add_common_flags(CLI::App* command, ccaboot::CliOptions& options,
                      std::string& config) {
  command->add_option("--config", config, "JSON run configuration")
      ->required();
  command->add_option("--seed", options.seed, "Random seed (overrides config)");
  command->add_option("--workers", options.workers,
                      "Parallel worker count (overrides config)");
  command->add_option("--out", options.out,
                      "Output directory (overrides config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CCA confidence intervals: bootstrap inference, baseline "
               "methods, and a Monte-Carlo evaluation harness"};
  app.require_subcommand(1);

  ccaboot::CliOptions options;
  std::string config;

  auto* simulate = app.add_subcommand(
      "simulate", "Run Monte-Carlo designs and write an evaluation summary");
  add_common_flags(simulate, options, config);
  simulate->add_option("--alpha", options.alpha, "Interval level override");
  simulate->add_option("--n-boots", options.n_boots,
                       "Bootstrap replicate count override");
  simulate->add_option("--strategy", options.strategy,
                       "Alignment strategy override "
                       "(identity|signflip|hungarian|procrustes)");
  simulate->add_option("--interval", options.interval,
                       "Interval kind override (percentile|normal)");

  auto* infer = app.add_subcommand(
      "infer", "Confidence intervals for X/Y CSV data");
  add_common_flags(infer, options, config);
  infer->add_option("--alpha", options.alpha, "Interval level override");
  infer->add_option("--n-boots", options.n_boots,
                    "Bootstrap replicate count override");
  infer->add_option("--strategy", options.strategy,
                    "Alignment strategy override");
  infer->add_option("--interval", options.interval, "Interval kind override");

  auto* report = app.add_subcommand(
      "report", "Merge evaluation summary CSVs into one table");
  add_common_flags(report, options, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  options.config_path = config;
  try {
    if (simulate->parsed()) ccaboot::run_simulate(options, std::cerr);
    if (infer->parsed()) ccaboot::run_infer(options, std::cerr);
    if (report->parsed()) ccaboot::run_report(options, std::cerr);
    return 0;
  } catch (const ccaboot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

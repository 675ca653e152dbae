#include "ccaboot/cli_runner.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "ccaboot/baseline_ci.hpp"
#include "ccaboot/bootstrap_ci.hpp"
#include "ccaboot/cca_core.hpp"
#include "ccaboot/csv_io.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/eval.hpp"
#include "ccaboot/pipeline.hpp"

namespace ccaboot {

namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "ccaboot 0.1.0";

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!config.is_object())
    throw ConfigError("config " + path.string() + ": top level must be an object");
  return config;
}

template <typename T>
T require_field(const json& j, const std::string& key,
                const std::string& context) {
  if (!j.contains(key))
    throw ConfigError(context + "." + key + ": missing required field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(context + "." + key + ": wrong type");
  }
}

template <typename T>
T field_or(const json& j, const std::string& key, T fallback,
           const std::string& context) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(context + "." + key + ": wrong type");
  }
}

SimDesign parse_design(const json& j, const std::string& context) {
  SimDesign design;
  design.id = require_field<std::string>(j, "id", context);
  design.kind = field_or<std::string>(j, "kind", "sim1", context);
  design.p = require_field<Eigen::Index>(j, "p", context);
  design.q = require_field<Eigen::Index>(j, "q", context);
  design.n = require_field<Eigen::Index>(j, "n", context);
  if (design.p < 1 || design.q < 1 || design.n < 2)
    throw ConfigError(context + ": p, q must be >= 1 and n >= 2");
  if (j.contains("rho")) {
    const auto values = require_field<std::vector<double>>(j, "rho", context);
    design.rho = Eigen::Map<const Eigen::VectorXd>(
        values.data(), static_cast<Eigen::Index>(values.size()));
  }
  try {
    design.regime =
        parse_regime(field_or<std::string>(j, "regime", "dense", context));
    design.covariance = parse_covariance_kind(field_or<std::string>(
        j, "covariance", "sparse-precision", context));
  } catch (const InvalidInputError& e) {
    throw ConfigError(context + ": " + e.what());
  }
  if (j.contains("sim3")) {
    const json& s3 = j.at("sim3");
    const std::string s3_context = context + ".sim3";
    design.sim3_base_seed =
        field_or<std::uint64_t>(s3, "base_seed", 1, s3_context);
    design.sim3_base_model_dir =
        field_or<std::string>(s3, "base_model", "", s3_context);
    try {
      design.target.block = parse_block(
          field_or<std::string>(s3, "target_block", "B", s3_context));
      design.level = parse_nuisance_level(
          field_or<std::string>(s3, "level", "null", s3_context));
    } catch (const InvalidInputError& e) {
      throw ConfigError(s3_context + ": " + e.what());
    }
    // 1-based in the config, matching the CSV outputs; index -1 = last row.
    design.target.direction =
        field_or<Eigen::Index>(s3, "target_direction", 1, s3_context) - 1;
    const auto index =
        field_or<Eigen::Index>(s3, "target_index", -1, s3_context);
    design.target.index = index < 0 ? -1 : index - 1;
  }
  return design;
}

MethodSpec parse_method(const json& j, const std::string& context) {
  MethodSpec method;
  const auto kind_name = require_field<std::string>(j, "name", context);
  try {
    method.kind = parse_method_kind(kind_name);
  } catch (const InvalidInputError& e) {
    throw ConfigError(context + ".name: " + e.what());
  }
  method.name = field_or<std::string>(j, "label", kind_name, context);
  method.alpha = field_or<double>(j, "alpha", 0.05, context);
  if (!(method.alpha > 0.0 && method.alpha < 1.0))
    throw ConfigError(context + ".alpha: must lie in (0, 1)");
  if (method.kind == MethodSpec::Kind::kCombootcca) {
    method.bootstrap.n_boots =
        field_or<int>(j, "n_boots", 10000, context);
    method.bootstrap.max_redraws =
        field_or<int>(j, "max_redraws", 100, context);
    try {
      method.bootstrap.strategy = parse_alignment_strategy(
          field_or<std::string>(j, "strategy", "hungarian", context));
      method.bootstrap.interval = parse_interval_kind(
          field_or<std::string>(j, "interval", "percentile", context));
    } catch (const InvalidInputError& e) {
      throw ConfigError(context + ": " + e.what());
    }
    method.bootstrap.alpha = method.alpha;
    try {
      method.bootstrap.validate();
    } catch (const InvalidInputError& e) {
      throw ConfigError(context + ": " + e.what());
    }
  }
  return method;
}

std::vector<MethodSpec> parse_methods(const json& config,
                                      const CliOptions& options,
                                      const std::string& context) {
  std::vector<MethodSpec> methods;
  if (config.contains("methods")) {
    const json& list = config.at("methods");
    if (!list.is_array() || list.empty())
      throw ConfigError(context + ".methods: must be a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i)
      methods.push_back(parse_method(
          list[i], context + ".methods[" + std::to_string(i) + "]"));
  } else {
    methods.push_back(
        parse_method(json{{"name", "combootcca"}}, context + ".methods"));
  }

  // Flag overrides: alpha everywhere, bootstrap knobs on combootcca entries.
  for (auto& method : methods) {
    if (options.alpha) {
      if (!(*options.alpha > 0.0 && *options.alpha < 1.0))
        throw ConfigError("--alpha: must lie in (0, 1)");
      method.alpha = *options.alpha;
      method.bootstrap.alpha = *options.alpha;
    }
    if (method.kind == MethodSpec::Kind::kCombootcca) {
      if (options.n_boots) method.bootstrap.n_boots = *options.n_boots;
      try {
        if (options.strategy)
          method.bootstrap.strategy = parse_alignment_strategy(*options.strategy);
        if (options.interval)
          method.bootstrap.interval = parse_interval_kind(*options.interval);
        method.bootstrap.validate();
      } catch (const InvalidInputError& e) {
        throw ConfigError(std::string("method overrides: ") + e.what());
      }
    }
  }

  std::set<std::string> labels;
  for (const auto& method : methods)
    if (!labels.insert(method.name).second)
      throw ConfigError(context + ".methods: duplicate label '" + method.name +
                        "' (use \"label\" to distinguish variants)");
  return methods;
}

std::filesystem::path resolve_out_dir(const json& config,
                                      const CliOptions& options,
                                      const std::string& context) {
  std::string out = field_or<std::string>(config, "out", "", context);
  if (options.out) out = *options.out;
  if (out.empty())
    throw ConfigError(context + ".out: missing output directory (or --out)");
  const std::filesystem::path dir(out);
  if (!std::filesystem::is_directory(dir))
    throw ConfigError(context + ".out: directory does not exist: " + out);
  return dir;
}

std::uint64_t resolve_seed(const json& config, const CliOptions& options,
                           const std::string& context) {
  std::uint64_t seed = field_or<std::uint64_t>(config, "seed", 0, context);
  if (options.seed) seed = *options.seed;
  return seed;
}

int resolve_workers(const json& config, const CliOptions& options,
                    const std::string& context) {
  int workers = field_or<int>(config, "workers", 1, context);
  if (options.workers) workers = *options.workers;
  if (workers < 1) throw ConfigError(context + ".workers: must be >= 1");
  return workers;
}

json method_to_json(const MethodSpec& method) {
  json j;
  j["label"] = method.name;
  j["alpha"] = method.alpha;
  switch (method.kind) {
    case MethodSpec::Kind::kCombootcca:
      j["name"] = "combootcca";
      j["n_boots"] = method.bootstrap.n_boots;
      j["max_redraws"] = method.bootstrap.max_redraws;
      j["strategy"] = alignment_strategy_name(method.bootstrap.strategy);
      j["interval"] = interval_kind_name(method.bootstrap.interval);
      break;
    case MethodSpec::Kind::kAsymptotic:
      j["name"] = "asymptotic";
      break;
    case MethodSpec::Kind::kRegression:
      j["name"] = "regression";
      break;
  }
  return j;
}

json design_to_json(const SimDesign& design) {
  json j;
  j["id"] = design.id;
  j["kind"] = design.kind;
  j["p"] = design.p;
  j["q"] = design.q;
  j["n"] = design.n;
  if (design.rho.size() > 0) {
    auto& rho = j["rho"] = json::array();
    for (Eigen::Index i = 0; i < design.rho.size(); ++i)
      rho.push_back(design.rho(i));
  }
  j["regime"] = regime_name(design.regime);
  j["covariance"] = covariance_kind_name(design.covariance);
  if (design.kind == "sim3") {
    json s3;
    s3["base_seed"] = design.sim3_base_seed;
    if (!design.sim3_base_model_dir.empty())
      s3["base_model"] = design.sim3_base_model_dir;
    s3["target_block"] = block_name(design.target.block);
    s3["target_direction"] = design.target.direction + 1;
    s3["target_index"] =
        design.target.index < 0 ? -1 : design.target.index + 1;
    s3["level"] = nuisance_level_name(design.level);
    j["sim3"] = s3;
  }
  return j;
}

// The manifest deliberately omits the worker count: output bytes do not
// depend on it, and a manifest identical across worker counts is part of
// the determinism contract.
void write_manifest(const std::filesystem::path& dir,
                    const std::string& command, const json& resolved_config,
                    const json& inputs, const json& outputs) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = resolved_config;
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  manifest["tool"] = kToolVersion;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string ci_table_to_csv(const CiTable& b, const CiTable& gamma) {
  std::string csv = "block,row,direction,point,lower,upper\n";
  auto emit = [&csv](const char* block, const CiTable& table) {
    for (Eigen::Index i = 0; i < table.rows(); ++i)
      for (Eigen::Index j = 0; j < table.cols(); ++j)
        csv += std::string(block) + ',' + std::to_string(i + 1) + ',' +
               std::to_string(j + 1) + ',' + format_double(table.point(i, j)) +
               ',' + format_double(table.lower(i, j)) + ',' +
               format_double(table.upper(i, j)) + '\n';
  };
  emit("B", b);
  emit("Gamma", gamma);
  return csv;
}

std::string estimates_to_csv(const CcaSolution& solution) {
  std::string csv = "block,row,direction,value\n";
  for (Eigen::Index k = 0; k < solution.k(); ++k)
    csv += "rho," + std::to_string(k + 1) + ',' + std::to_string(k + 1) + ',' +
           format_double(solution.rho(k)) + '\n';
  auto emit = [&csv](const char* block, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        csv += std::string(block) + ',' + std::to_string(i + 1) + ',' +
               std::to_string(j + 1) + ',' + format_double(m(i, j)) + '\n';
  };
  emit("B", solution.b);
  emit("Gamma", solution.gamma);
  return csv;
}

}  // namespace

void run_simulate(const CliOptions& options, std::ostream& diagnostics) {
  const json config = load_config(options.config_path);
  const std::string context = "simulate";
  const auto out_dir = resolve_out_dir(config, options, context);
  const auto seed = resolve_seed(config, options, context);
  const auto workers = resolve_workers(config, options, context);
  const int n_reps = require_field<int>(config, "n_reps", context);
  if (n_reps < 1) throw ConfigError("simulate.n_reps: must be >= 1");

  if (!config.contains("designs") || !config.at("designs").is_array() ||
      config.at("designs").empty())
    throw ConfigError("simulate.designs: must be a non-empty array");
  std::vector<SimDesign> designs;
  const json& design_list = config.at("designs");
  for (std::size_t i = 0; i < design_list.size(); ++i)
    designs.push_back(parse_design(
        design_list[i], context + ".designs[" + std::to_string(i) + "]"));
  std::set<std::string> ids;
  for (const auto& design : designs)
    if (!ids.insert(design.id).second)
      throw ConfigError("simulate.designs: duplicate id '" + design.id + "'");

  const auto methods = parse_methods(config, options, context);

  const EvalSummary summary =
      run_replicates(designs, methods, n_reps, seed, workers);
  write_file_atomic(out_dir / "summary.csv", eval_summary_to_csv(summary));

  json resolved;
  resolved["seed"] = seed;
  resolved["n_reps"] = n_reps;
  auto& design_json = resolved["designs"] = json::array();
  for (const auto& design : designs) design_json.push_back(design_to_json(design));
  auto& method_json = resolved["methods"] = json::array();
  for (const auto& method : methods) method_json.push_back(method_to_json(method));
  write_manifest(out_dir, "simulate", resolved, json::object(),
                 json::array({"summary.csv"}));
  diagnostics << "simulate: wrote " << (out_dir / "summary.csv").string()
              << "\n";
}

void run_infer(const CliOptions& options, std::ostream& diagnostics) {
  const json config = load_config(options.config_path);
  const std::string context = "infer";
  const auto out_dir = resolve_out_dir(config, options, context);
  const auto seed = resolve_seed(config, options, context);
  const auto workers = resolve_workers(config, options, context);
  const bool csv_header =
      field_or<bool>(config, "csv_header", false, context);

  const auto x_path = require_field<std::string>(config, "x", context);
  const auto y_path = require_field<std::string>(config, "y", context);
  const auto w_path = field_or<std::string>(config, "w", "", context);
  for (const auto& path : {x_path, y_path, w_path})
    if (!path.empty() && !std::filesystem::exists(path))
      throw ConfigError(context + ": input file does not exist: " + path);

  DataMatrix x{read_matrix_csv(x_path, csv_header), false};
  DataMatrix y{read_matrix_csv(y_path, csv_header), false};
  if (x.rows() != y.rows())
    throw InvalidInputError("infer: X has " + std::to_string(x.rows()) +
                            " rows but Y has " + std::to_string(y.rows()));

  const auto methods = parse_methods(config, options, context);

  json inputs;
  inputs["x"] = file_digest(x_path);
  inputs["y"] = file_digest(y_path);

  // Optional preprocessing pipeline.
  bool pipeline_enabled = false;
  Eigen::Index pipeline_r = 250;
  std::uint64_t split_seed = seed;
  if (config.contains("pipeline")) {
    const json& pipe = config.at("pipeline");
    pipeline_enabled = field_or<bool>(pipe, "enabled", true, "infer.pipeline");
    pipeline_r = field_or<Eigen::Index>(pipe, "r", 250, "infer.pipeline");
    split_seed =
        field_or<std::uint64_t>(pipe, "split_seed", seed, "infer.pipeline");
  }

  PreprocessModel preprocess_model;
  if (pipeline_enabled) {
    Eigen::MatrixXd w;
    if (!w_path.empty()) {
      w = read_matrix_csv(w_path, csv_header);
      if (w.rows() != x.rows())
        throw InvalidInputError("infer: W row count differs from X");
      inputs["w"] = file_digest(w_path);
    } else {
      // No nuisance covariates given: intercept-only W, i.e. the
      // residualization reduces to centering on train means.
      w = Eigen::MatrixXd::Ones(x.rows(), 1);
    }
    auto processed = run_preprocess(x.values, y.values, w, pipeline_r,
                                    split_seed);
    x = DataMatrix{std::move(processed.x), false};
    y = DataMatrix{std::move(processed.y), false};
    preprocess_model = std::move(processed.model);
    save_preprocess_model(out_dir / "preprocess_model", preprocess_model);
  } else if (!w_path.empty()) {
    diagnostics << "infer: warning: W supplied but pipeline disabled; "
                   "nuisance covariates ignored\n";
  }

  const CcaSolution reference = estimate_cca(x, y);
  write_file_atomic(out_dir / "estimates.csv", estimates_to_csv(reference));
  json outputs = json::array({"estimates.csv"});

  const CiTable* threshold_table = nullptr;
  std::vector<std::pair<std::string, std::pair<CiTable, CiTable>>> tables;
  tables.reserve(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto& method = methods[m];
    CiTable b_table, gamma_table;
    switch (method.kind) {
      case MethodSpec::Kind::kCombootcca: {
        BootstrapConfig bootstrap = method.bootstrap;
        bootstrap.seed =
            RngStream(seed, {0x1FE1u, static_cast<std::uint64_t>(m)})
                .next_u64();
        const auto fit = combootcca(x, y, bootstrap, workers);
        b_table = fit.b_ci;
        gamma_table = fit.gamma_ci;
        break;
      }
      case MethodSpec::Kind::kAsymptotic: {
        const auto fit = asymptotic_ci(x, y, method.alpha);
        for (const auto& warning : fit.warnings)
          diagnostics << "infer: warning: " << method.name << ": " << warning
                      << "\n";
        b_table = fit.b_ci;
        gamma_table = fit.gamma_ci;
        break;
      }
      case MethodSpec::Kind::kRegression: {
        const std::uint64_t split =
            RngStream(seed, {0x2FE2u, static_cast<std::uint64_t>(m)})
                .next_u64();
        const auto fit = regression_ci(x, y, method.alpha, split);
        b_table = fit.b_ci;
        gamma_table = fit.gamma_ci;
        break;
      }
    }
    const std::string file = "ci_" + method.name + ".csv";
    write_file_atomic(out_dir / file, ci_table_to_csv(b_table, gamma_table));
    outputs.push_back(file);
    tables.emplace_back(method.name,
                        std::make_pair(std::move(b_table), std::move(gamma_table)));
  }
  if (!tables.empty()) threshold_table = &tables.front().second.first;

  if (pipeline_enabled) {
    write_matrix_csv(out_dir / "b_original_space.csv",
                     map_directions_to_original(reference.b, preprocess_model));
    outputs.push_back("b_original_space.csv");
    if (threshold_table != nullptr) {
      write_matrix_csv(
          out_dir / "b_original_space_thresholded.csv",
          map_directions_to_original(reference.b, preprocess_model,
                                     threshold_table));
      outputs.push_back("b_original_space_thresholded.csv");
    }
    outputs.push_back("preprocess_model");
  }

  json resolved;
  resolved["seed"] = seed;
  resolved["x"] = x_path;
  resolved["y"] = y_path;
  if (!w_path.empty()) resolved["w"] = w_path;
  resolved["csv_header"] = csv_header;
  if (pipeline_enabled) {
    json pipe;
    pipe["enabled"] = true;
    pipe["r"] = pipeline_r;
    pipe["split_seed"] = split_seed;
    resolved["pipeline"] = pipe;
  }
  auto& method_json = resolved["methods"] = json::array();
  for (const auto& method : methods) method_json.push_back(method_to_json(method));
  write_manifest(out_dir, "infer", resolved, inputs, outputs);
  diagnostics << "infer: wrote " << outputs.size() << " output file(s) to "
              << out_dir.string() << "\n";
}

namespace {

struct SummaryRow {
  std::string key;    // method,design,block,direction,index,metric
  std::string value;  // value,n_reps
  std::string line;
};

constexpr const char* kSummaryHeader =
    "method,design_id,block,direction,index,metric,value,n_reps";

std::vector<SummaryRow> read_summary_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSummaryHeader)
    throw IoError(path.string() + ": schema mismatch (header '" + line +
                  "' does not match '" + kSummaryHeader + "')");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    // Key = first six fields.
    std::size_t position = 0;
    for (int field = 0; field < 6; ++field) {
      position = line.find(',', position);
      if (position == std::string::npos)
        throw IoError(path.string() + ": schema mismatch (short row '" + line +
                      "')");
      ++position;
    }
    rows.push_back(
        {line.substr(0, position - 1), line.substr(position), line});
  }
  return rows;
}

}  // namespace

void run_report(const CliOptions& options, std::ostream& diagnostics) {
  const json config = load_config(options.config_path);
  const std::string context = "report";
  const auto out_dir = resolve_out_dir(config, options, context);
  const auto input_paths =
      require_field<std::vector<std::string>>(config, "inputs", context);
  if (input_paths.empty())
    throw ConfigError("report.inputs: must list at least one summary CSV");

  std::map<std::string, std::pair<std::string, std::string>> seen;  // key -> (value, file)
  std::vector<std::string> merged;
  json inputs;
  for (const auto& path : input_paths) {
    if (!std::filesystem::exists(path))
      throw ConfigError("report.inputs: file does not exist: " + path);
    inputs[path] = file_digest(path);
    for (auto& row : read_summary_rows(path)) {
      const auto [it, inserted] =
          seen.emplace(row.key, std::make_pair(row.value, path));
      if (inserted) {
        merged.push_back(std::move(row.line));
      } else if (it->second.first != row.value) {
        throw IoError("report: conflicting values for key '" + row.key +
                      "' between " + it->second.second + " and " + path);
      }  // exact duplicates collapse
    }
  }

  std::string csv = std::string(kSummaryHeader) + "\n";
  for (const auto& line : merged) csv += line + "\n";
  write_file_atomic(out_dir / "merged.csv", csv);

  json resolved;
  resolved["inputs"] = input_paths;
  write_manifest(out_dir, "report", resolved, inputs,
                 json::array({"merged.csv"}));
  diagnostics << "report: merged " << merged.size() << " row(s) from "
              << input_paths.size() << " file(s)\n";
}

}  // namespace ccaboot

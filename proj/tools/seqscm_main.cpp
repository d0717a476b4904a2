// seqscm: sample, benchmark, estimate, evaluate, and audit sequence-driven
// causal models from the command line.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqscm/benchmark.hpp"
#include "seqscm/estimators.hpp"
#include "seqscm/metrics.hpp"
#include "seqscm/parallel.hpp"
#include "seqscm/remote_scorer.hpp"
#include "seqscm/spec_format.hpp"

using namespace seqscm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;

struct ScorerOptions {
  std::string model;
  int timeout_seconds = 30;
  int retries = 2;
  int in_flight = 4;
};

// Scorer descriptors: "tabular:<path>" (or a bare .json path), "uniform[:V]",
// "remote[:<url>]". Remote scorers honor SEQSCM_SCORER_URL / _TOKEN and get a
// cache wrapper, since candidate scoring repeats contexts heavily.
ScorerPtr make_scorer(const std::string& descriptor, const ScorerOptions& options,
                      const std::string& label) {
  std::string kind = descriptor;
  std::string argument;
  if (const std::size_t colon = descriptor.find(':'); colon != std::string::npos) {
    kind = descriptor.substr(0, colon);
    argument = descriptor.substr(colon + 1);
  }
  if (kind == "tabular") {
    return std::make_shared<TabularScorer>(TabularScoreTable::from_json_file(argument),
                                           label.empty() ? "tabular" : label);
  }
  if (kind == "uniform") {
    const std::size_t vocabulary = argument.empty() ? 1000 : std::stoull(argument);
    return std::make_shared<UniformTokenScorer>(vocabulary, label.empty() ? "uniform" : label);
  }
  if (kind == "remote") {
    RemoteScorerConfig config;
    config.url = argument;
    config.model = options.model;
    config.timeout_seconds = options.timeout_seconds;
    config.max_retries = options.retries;
    config.max_in_flight = options.in_flight;
    config.label = label.empty() ? "remote" : label;
    return cached(std::make_shared<RemoteScorer>(config.with_environment_overrides()));
  }
  // A bare table path is the common case.
  if (descriptor.size() > 5 && descriptor.substr(descriptor.size() - 5) == ".json") {
    return std::make_shared<TabularScorer>(TabularScoreTable::from_json_file(descriptor),
                                           label.empty() ? "tabular" : label);
  }
  throw Error("unknown scorer '" + descriptor + "' (expected tabular:<path>, uniform[:V], or remote[:url])");
}

Intervention parse_set_flag(const std::string& text, const ScmSpecDocument& spec) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos) {
    throw Error("--set expects var=index, got '" + text + "'");
  }
  Intervention intervention;
  intervention.variable = text.substr(0, eq);
  intervention.value = std::stoull(text.substr(eq + 1));
  if (!spec.has_variable(intervention.variable)) {
    throw Error("--set names unknown variable '" + intervention.variable + "'");
  }
  return intervention;
}

VariationId parse_variation_flag(const std::string& text, const ScmSpecDocument& spec) {
  VariationId variation;
  if (text.empty()) {
    variation.indices.assign(spec.variables.size(), 0);
    return variation;
  }
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    variation.indices.push_back(std::stoull(item));
  }
  return variation;
}

std::string command_echo(int argc, char** argv) {
  std::string echo;
  for (int i = 0; i < argc; ++i) {
    if (i) echo.push_back(' ');
    echo.append(argv[i]);
  }
  return echo;
}

nlohmann::ordered_json unit_to_json(const SdScm& scm, const Unit& unit) {
  nlohmann::ordered_json doc;
  doc["unit"] = unit.provenance.unit_index;
  doc["mode"] = to_string(unit.provenance.mode);
  doc["master_seed"] = unit.provenance.master_seed;
  doc["variation"] = unit.provenance.variation.indices;
  if (unit.provenance.intervention) {
    doc["intervention"] = {{"variable", unit.provenance.intervention->variable},
                           {"value", unit.provenance.intervention->value}};
  } else {
    doc["intervention"] = nullptr;
  }
  doc["order"] = scm.order();
  doc["values"] = unit.values;
  doc["phrases"] = unit.phrases;
  auto dists = nlohmann::ordered_json::array();
  for (const auto& d : unit.distributions) {
    if (d) {
      dists.push_back(d->probabilities);
    } else {
      dists.push_back(nullptr);
    }
  }
  doc["distributions"] = std::move(dists);
  return doc;
}

Unit unit_from_json(const SdScm& scm, const nlohmann::json& doc) {
  Unit unit;
  unit.provenance.unit_index = doc.at("unit").get<std::uint64_t>();
  unit.provenance.mode = sample_mode_from_string(doc.at("mode").get<std::string>());
  unit.provenance.master_seed = doc.at("master_seed").get<std::uint64_t>();
  unit.provenance.variation.indices = doc.at("variation").get<std::vector<std::size_t>>();
  if (doc.contains("intervention") && !doc.at("intervention").is_null()) {
    unit.provenance.intervention =
        Intervention{doc.at("intervention").at("variable").get<std::string>(),
                     doc.at("intervention").at("value").get<std::size_t>()};
  }
  unit.values = doc.at("values").get<std::vector<std::size_t>>();
  unit.phrases = doc.at("phrases").get<std::vector<std::string>>();
  const auto& dists = doc.at("distributions");
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (dists[i].is_null()) {
      unit.distributions.emplace_back(std::nullopt);
    } else {
      RestrictedDistribution dist;
      dist.probabilities = dists[i].get<std::vector<double>>();
      dist.candidates = scm.variable_at(i).rendered;
      unit.distributions.emplace_back(std::move(dist));
    }
  }
  return unit;
}

void emit(const std::filesystem::path& output, const std::string& content) {
  if (output.empty() || output == "-") {
    std::cout << content;
    return;
  }
  if (output.has_parent_path()) {
    std::filesystem::create_directories(output.parent_path());
  }
  write_file_atomic(output, content);
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int cmd_validate(const std::string& spec_path) {
  const ScmSpecDocument spec = load_spec_file(spec_path);
  std::printf("%s: valid (%zu variables, %zu edges, treatment '%s', outcome '%s')\n",
              spec_path.c_str(), spec.variables.size(), spec.edges.size(),
              spec.treatment.c_str(), spec.outcome.c_str());
  for (const std::string& warning : lint_spec(spec)) {
    std::printf("warning: %s\n", warning.c_str());
  }
  return kExitOk;
}

int cmd_sample(const ScmSpecDocument& spec, const ScorerPtr& scorer, const std::string& mode,
               const std::string& set_flag, const std::string& variation_flag, std::size_t n,
               std::uint64_t seed, std::size_t workers, const std::filesystem::path& output) {
  const VariationId variation = parse_variation_flag(variation_flag, spec);
  const SdScm scm = instantiate_variation(spec, variation, scorer, seed);

  std::optional<Intervention> intervention;
  if (mode == "do") {
    if (set_flag.empty()) {
      throw Error("--mode do requires --set var=index");
    }
    intervention = parse_set_flag(set_flag, spec);
  } else if (mode != "obs") {
    throw Error("--mode must be obs or do");
  }

  std::vector<Unit> units(n);
  parallel_for(n, workers, [&](std::size_t i) {
    units[i] = intervention ? interventional_unit(scm, *intervention, seed, i)
                            : observational_unit(scm, seed, i);
  });

  std::ostringstream lines;
  for (const Unit& unit : units) {
    lines << unit_to_json(scm, unit).dump() << '\n';
  }
  emit(output, lines.str());
  return kExitOk;
}

int cmd_counterfactual(const ScmSpecDocument& spec, const ScorerPtr& scorer,
                       const std::string& from_path, const std::string& set_flag,
                       std::size_t workers, const std::filesystem::path& output) {
  const Intervention intervention = parse_set_flag(set_flag, spec);

  std::ifstream in(from_path);
  if (!in) {
    throw Error("cannot open unit file: " + from_path);
  }
  std::vector<nlohmann::json> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      docs.push_back(nlohmann::json::parse(line));
    }
  }
  if (docs.empty()) {
    throw Error("unit file is empty: " + from_path);
  }

  // All units must come from one variation; the model is rebuilt from it.
  VariationId variation;
  variation.indices = docs.front().at("variation").get<std::vector<std::size_t>>();
  const SdScm scm = instantiate_variation(spec, variation, scorer,
                                          docs.front().at("master_seed").get<std::uint64_t>());

  std::vector<Unit> factuals;
  factuals.reserve(docs.size());
  for (const auto& doc : docs) {
    factuals.push_back(unit_from_json(scm, doc));
  }
  std::vector<Unit> counterfactuals(factuals.size());
  parallel_for(factuals.size(), workers, [&](std::size_t i) {
    counterfactuals[i] = counterfactual_unit(scm, factuals[i], intervention);
  });

  std::ostringstream lines;
  for (const Unit& unit : counterfactuals) {
    lines << unit_to_json(scm, unit).dump() << '\n';
  }
  emit(output, lines.str());
  return kExitOk;
}

int cmd_benchmark(const ScmSpecDocument& spec, const ScorerPtr& scorer,
                  const BenchmarkRunConfig& config) {
  run_benchmark(spec, scorer, config);
  std::printf("wrote %zu datasets under %s\n", config.variations * config.datasets_per_variation,
              config.output_dir.string().c_str());
  return kExitOk;
}

int cmd_project(const std::string& dataset_path, std::string metadata_path,
                const std::filesystem::path& output, const std::string& echo) {
  if (metadata_path.empty()) {
    metadata_path = dataset_path;
    const std::size_t dot = metadata_path.rfind(".csv");
    if (dot != std::string::npos) {
      metadata_path = metadata_path.substr(0, dot);
    }
    metadata_path += ".meta.json";
  }
  const BenchmarkDataset dataset = read_dataset_files(dataset_path, metadata_path);
  const BenchmarkDataset projected = hidden_projection(dataset);

  std::filesystem::path csv_out = output;
  if (csv_out.empty()) {
    throw Error("project needs --output");
  }
  std::filesystem::path meta_out = csv_out;
  meta_out.replace_extension();
  meta_out += ".meta.json";
  write_dataset_files(projected, csv_out, meta_out, echo);
  std::printf("hid %zu exogenous columns (%zu remain)\n", projected.hidden.size(),
              projected.covariates.size());
  return kExitOk;
}

int cmd_estimate(const std::string& dataset_path, std::string metadata_path,
                 const std::string& method, const std::string& target_text,
                 std::size_t control_arm, std::size_t treated_arm,
                 const std::filesystem::path& output) {
  if (metadata_path.empty()) {
    metadata_path = dataset_path;
    const std::size_t dot = metadata_path.rfind(".csv");
    if (dot != std::string::npos) {
      metadata_path = metadata_path.substr(0, dot);
    }
    metadata_path += ".meta.json";
  }
  const BenchmarkDataset dataset = read_dataset_files(dataset_path, metadata_path);
  const OutcomeTarget target = parse_target(target_text);
  const ArmPair arms{control_arm, treated_arm};
  const EstimatorOutput fit = fit_estimator(method, dataset, target, arms);

  std::ostringstream csv;
  write_cate_csv(dataset, fit, csv);
  emit(output, csv.str());
  std::fprintf(stderr, "%s: ate=%.6g%s\n", fit.method.c_str(), fit.ate,
               fit.diagnostics.ridge_engaged ? " (ridge fallback engaged)" : "");
  return kExitOk;
}

int cmd_evaluate(const std::string& dataset_path, std::string metadata_path,
                 const std::string& methods_text, const std::string& target_text,
                 std::size_t control_arm, std::size_t treated_arm,
                 const std::filesystem::path& output_prefix) {
  if (metadata_path.empty()) {
    metadata_path = dataset_path;
    const std::size_t dot = metadata_path.rfind(".csv");
    if (dot != std::string::npos) {
      metadata_path = metadata_path.substr(0, dot);
    }
    metadata_path += ".meta.json";
  }
  const BenchmarkDataset dataset = read_dataset_files(dataset_path, metadata_path);
  const OutcomeTarget target = parse_target(target_text);
  const ArmPair arms{control_arm, treated_arm};

  std::vector<std::string> methods;
  {
    std::stringstream stream(methods_text);
    std::string item;
    while (std::getline(stream, item, ',')) {
      methods.push_back(item);
    }
  }
  std::vector<MetricReport> reports;
  for (const std::string& method : methods) {
    const EstimatorOutput fit = fit_estimator(method, dataset, target, arms);
    reports.push_back(evaluate_estimator(dataset, fit, target, arms,
                                         std::filesystem::path(dataset_path).stem().string()));
  }

  std::ostringstream csv;
  write_metric_csv(reports, csv);
  if (output_prefix.empty() || output_prefix == "-") {
    std::cout << csv.str();
  } else {
    write_file_atomic(output_prefix.string() + ".csv", csv.str());
    write_file_atomic(output_prefix.string() + ".json", metric_summary_json(reports));
  }
  return kExitOk;
}

int cmd_audit(const ScmSpecDocument& spec, const std::string& scorers_flag,
              const ScorerOptions& scorer_options, std::size_t variations, std::size_t datasets,
              std::size_t size, std::uint64_t seed, std::size_t workers,
              const std::filesystem::path& output_dir) {
  std::vector<ScorerPtr> scorers;
  {
    std::stringstream stream(scorers_flag);
    std::string item;
    while (std::getline(stream, item, ',')) {
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos) {
        throw Error("--scorers expects label=config pairs, got '" + item + "'");
      }
      scorers.push_back(
          make_scorer(item.substr(eq + 1), scorer_options, item.substr(0, eq)));
    }
  }
  if (scorers.empty()) {
    throw Error("audit needs at least one scorer");
  }
  if (scorers.size() == 1) {
    std::fprintf(stderr,
                 "note: single scorer, emitting a distribution-only report (comparison mode "
                 "needs two or more)\n");
  }

  const AuditReport report =
      audit_sate(spec, scorers, variations, datasets, size, seed, workers);

  std::filesystem::create_directories(output_dir);
  std::ostringstream csv;
  write_audit_csv(report, csv);
  write_file_atomic(output_dir / "audit.csv", csv.str());
  write_file_atomic(output_dir / "audit.json", audit_summary_json(report));
  std::printf("wrote %s and %s\n", (output_dir / "audit.csv").string().c_str(),
              (output_dir / "audit.json").string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequence-driven causal model sampler and benchmark generator"};
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds the pieces it uses.
  std::string spec_path;
  std::string scorer_flag = "uniform";
  ScorerOptions scorer_options;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string output;
  std::string mode = "obs";
  std::string set_flag;
  std::string variation_flag;
  std::size_t n = 1;
  std::string from_path;
  std::size_t variations = 1;
  std::size_t datasets = 1;
  std::size_t dataset_size = 1;
  bool hide_exogenous = false;
  std::string dataset_path;
  std::string metadata_path;
  std::string method = "t_only_ols";
  std::string target_text = "p:0";
  std::size_t control_arm = 0;
  std::size_t treated_arm = 1;
  std::string scorers_flag;

  auto add_scorer_options = [&](CLI::App* cmd) {
    cmd->add_option("--scorer", scorer_flag, "scorer backend: tabular:<path> | uniform[:V] | remote[:url]");
    cmd->add_option("--scorer-model", scorer_options.model, "model name for the remote backend");
    cmd->add_option("--scorer-timeout", scorer_options.timeout_seconds, "remote timeout seconds");
    cmd->add_option("--scorer-retries", scorer_options.retries, "remote retry count");
    cmd->add_option("--scorer-inflight", scorer_options.in_flight, "remote in-flight request cap");
  };

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a spec document");
  validate->add_option("spec", spec_path, "path to .scm.json")->required();

  CLI::App* sample = app.add_subcommand("sample", "draw observational or interventional units");
  sample->add_option("--spec", spec_path)->required();
  sample->add_option("--mode", mode, "obs | do");
  sample->add_option("--set", set_flag, "intervention var=index (do mode)");
  sample->add_option("--variation", variation_flag, "comma-separated phrasing indices");
  sample->add_option("--n", n, "number of units");
  sample->add_option("--seed", seed)->required();
  sample->add_option("--workers", workers);
  sample->add_option("--output", output, "output path (.jsonl), '-' for stdout");
  add_scorer_options(sample);

  CLI::App* counterfactual =
      app.add_subcommand("counterfactual", "counterfactuals of previously sampled units");
  counterfactual->add_option("--spec", spec_path)->required();
  counterfactual->add_option("--from", from_path, "unit .jsonl produced by sample")->required();
  counterfactual->add_option("--set", set_flag, "intervention var=index")->required();
  counterfactual->add_option("--workers", workers);
  counterfactual->add_option("--output", output);
  add_scorer_options(counterfactual);

  CLI::App* benchmark = app.add_subcommand("benchmark", "generate potential-outcome datasets");
  benchmark->add_option("--spec", spec_path)->required();
  benchmark->add_option("--variations", variations);
  benchmark->add_option("--datasets", datasets, "datasets per variation");
  benchmark->add_option("--size", dataset_size, "records per dataset");
  benchmark->add_option("--seed", seed)->required();
  benchmark->add_option("--workers", workers);
  benchmark->add_flag("--hide-exogenous", hide_exogenous, "project exogenous covariates out");
  benchmark->add_option("--output", output, "output directory")->required();
  add_scorer_options(benchmark);

  CLI::App* project = app.add_subcommand("project", "hide exogenous covariates in a dataset");
  project->add_option("--dataset", dataset_path)->required();
  project->add_option("--metadata", metadata_path, "sidecar (default: <dataset>.meta.json)");
  bool hide_flag = false;
  project->add_flag("--hide-exogenous", hide_flag)->required();
  project->add_option("--output", output)->required();

  CLI::App* estimate = app.add_subcommand("estimate", "fit an estimator, export CATE predictions");
  estimate->add_option("--dataset", dataset_path)->required();
  estimate->add_option("--metadata", metadata_path);
  estimate->add_option("--method", method, "t_only_ols | adjusted_ols | linear_s | linear_t");
  estimate->add_option("--target", target_text, "p:K | logp:K | cat:K");
  estimate->add_option("--control", control_arm);
  estimate->add_option("--treated", treated_arm);
  estimate->add_option("--output", output);

  CLI::App* evaluate = app.add_subcommand("evaluate", "fit and score estimators against ground truth");
  evaluate->add_option("--dataset", dataset_path)->required();
  evaluate->add_option("--metadata", metadata_path);
  evaluate->add_option("--method", method, "comma-separated method list");
  evaluate->add_option("--target", target_text);
  evaluate->add_option("--control", control_arm);
  evaluate->add_option("--treated", treated_arm);
  evaluate->add_option("--output", output, "output prefix (writes .csv and .json)");

  CLI::App* audit = app.add_subcommand("audit", "compare encoded effects across scorers");
  audit->add_option("--spec", spec_path)->required();
  audit->add_option("--scorers", scorers_flag, "label=config[,label=config...]")->required();
  audit->add_option("--variations", variations);
  audit->add_option("--datasets", datasets);
  audit->add_option("--size", dataset_size);
  audit->add_option("--seed", seed)->required();
  audit->add_option("--workers", workers);
  audit->add_option("--output", output, "output directory")->required();
  add_scorer_options(audit);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      return cmd_validate(spec_path);
    }
    if (sample->parsed()) {
      const ScmSpecDocument spec = load_spec_file(spec_path);
      return cmd_sample(spec, make_scorer(scorer_flag, scorer_options, ""), mode, set_flag,
                        variation_flag, n, seed, workers, output);
    }
    if (counterfactual->parsed()) {
      const ScmSpecDocument spec = load_spec_file(spec_path);
      return cmd_counterfactual(spec, make_scorer(scorer_flag, scorer_options, ""), from_path,
                                set_flag, workers, output);
    }
    if (benchmark->parsed()) {
      const ScmSpecDocument spec = load_spec_file(spec_path);
      BenchmarkRunConfig config;
      config.variations = variations;
      config.datasets_per_variation = datasets;
      config.dataset_size = dataset_size;
      config.seed = seed;
      config.workers = workers;
      config.hide_exogenous = hide_exogenous;
      config.output_dir = output;
      config.command_echo = command_echo(argc, argv);
      return cmd_benchmark(spec, make_scorer(scorer_flag, scorer_options, ""), config);
    }
    if (project->parsed()) {
      return cmd_project(dataset_path, metadata_path, output, command_echo(argc, argv));
    }
    if (estimate->parsed()) {
      return cmd_estimate(dataset_path, metadata_path, method, target_text, control_arm,
                          treated_arm, output);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(dataset_path, metadata_path, method, target_text, control_arm,
                          treated_arm, output);
    }
    if (audit->parsed()) {
      const ScmSpecDocument spec = load_spec_file(spec_path);
      return cmd_audit(spec, scorers_flag, scorer_options, variations, datasets, dataset_size,
                       seed, workers, output);
    }
  } catch (const ScorerError& e) {
    std::fprintf(stderr, "scorer error: %s\n", e.what());
    return kExitBackend;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}

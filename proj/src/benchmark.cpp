#include "seqscm/benchmark.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "seqscm/parallel.hpp"
#include "seqscm/rng.hpp"

namespace seqscm {

namespace {

// Shortest round-trip decimal representation, deterministic across runs.
std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string format_index(std::size_t value) { return std::to_string(value); }

double percentile(std::vector<double> sorted_values, double q) {
  if (sorted_values.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double position = q * static_cast<double>(sorted_values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(position);
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = position - static_cast<double>(lo);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

double standard_deviation(const std::vector<double>& values) {
  if (values.empty()) {
    return 0.0;
  }
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace

OutcomeTarget parse_target(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error("target must look like p:K, logp:K, or cat:K; got '" + text + "'");
  }
  const std::string kind = text.substr(0, colon);
  const std::string index_text = text.substr(colon + 1);
  OutcomeTarget target;
  if (kind == "p") {
    target.kind = TargetKind::Probability;
  } else if (kind == "logp") {
    target.kind = TargetKind::LogProbability;
  } else if (kind == "cat") {
    target.kind = TargetKind::Categorical;
  } else {
    throw Error("unknown target kind '" + kind + "' (expected p|logp|cat)");
  }
  std::size_t value = 0;
  const auto result =
      std::from_chars(index_text.data(), index_text.data() + index_text.size(), value);
  if (result.ec != std::errc() || result.ptr != index_text.data() + index_text.size()) {
    throw Error("bad target value index '" + index_text + "'");
  }
  target.value = value;
  return target;
}

std::string target_name(const OutcomeTarget& target) {
  switch (target.kind) {
    case TargetKind::Probability: return "p:" + std::to_string(target.value);
    case TargetKind::LogProbability: return "logp:" + std::to_string(target.value);
    case TargetKind::Categorical: return "cat:" + std::to_string(target.value);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Record and dataset generation

PotentialOutcomeRecord generate_record(const SdScm& scm, const std::string& treatment,
                                       const std::string& outcome, std::uint64_t seed,
                                       std::uint64_t unit_index) {
  const std::size_t t_pos = scm.order_index(treatment);
  const std::size_t y_pos = scm.order_index(outcome);
  const SequenceVariable& t_var = scm.variable(treatment);
  if (t_var.cardinality() < 2) {
    throw SamplingError("treatment '" + treatment + "' needs at least 2 values");
  }

  const Unit factual = observational_unit(scm, seed, unit_index);

  PotentialOutcomeRecord record;
  record.unit_index = unit_index;
  record.master_seed = seed;
  record.treatment = factual.values[t_pos];
  record.outcome = factual.values[y_pos];
  record.factual_outcome_dist = factual.distributions[y_pos]->probabilities;
  record.covariates.reserve(scm.variable_count() - 2);
  for (std::size_t position = 0; position < scm.variable_count(); ++position) {
    if (position != t_pos && position != y_pos) {
      record.covariates.push_back(factual.values[position]);
    }
  }

  record.arm_outcome.resize(t_var.cardinality());
  record.arm_outcome_dist.resize(t_var.cardinality());
  for (std::size_t arm = 0; arm < t_var.cardinality(); ++arm) {
    if (arm == record.treatment) {
      // Consistency: the factual arm reuses the observed outcome.
      record.arm_outcome[arm] = record.outcome;
      record.arm_outcome_dist[arm] = record.factual_outcome_dist;
      continue;
    }
    const Unit cf = counterfactual_unit(scm, factual, Intervention{treatment, arm});
    record.arm_outcome[arm] = cf.values[y_pos];
    // When the outcome is not a descendant of the treatment it was copied,
    // so its distribution is the factual one.
    record.arm_outcome_dist[arm] = cf.distributions[y_pos]
                                       ? cf.distributions[y_pos]->probabilities
                                       : record.factual_outcome_dist;
  }
  return record;
}

BenchmarkDataset generate_dataset(const SdScm& scm, const std::string& treatment,
                                  const std::string& outcome, std::size_t n, std::uint64_t seed,
                                  std::size_t workers) {
  if (n == 0) {
    throw SamplingError("dataset size must be >= 1");
  }
  BenchmarkDataset dataset;
  dataset.variation = scm.variation();
  dataset.scorer_label = scm.scorer()->label();
  dataset.treatment_name = treatment;
  dataset.outcome_name = outcome;
  dataset.treatment_arms = scm.variable(treatment).cardinality();
  dataset.outcome_values = scm.variable(outcome).cardinality();
  dataset.seed = seed;
  const std::size_t t_pos = scm.order_index(treatment);
  const std::size_t y_pos = scm.order_index(outcome);
  for (std::size_t position = 0; position < scm.variable_count(); ++position) {
    if (position == t_pos || position == y_pos) {
      continue;
    }
    const SequenceVariable& v = scm.variable_at(position);
    dataset.covariates.push_back({v.name, v.kind, v.cardinality()});
  }

  dataset.records.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    dataset.records[i] = generate_record(scm, treatment, outcome, seed, i);
  });
  return dataset;
}

// ---------------------------------------------------------------------------
// Effects

double ite(const PotentialOutcomeRecord& record, const OutcomeTarget& target, const ArmPair& arms,
           std::size_t* floored) {
  if (arms.control >= record.arm_outcome.size() || arms.treated >= record.arm_outcome.size()) {
    throw Error("arm index out of range");
  }
  if (target.value >= record.factual_outcome_dist.size()) {
    throw Error("target value index out of range");
  }
  switch (target.kind) {
    case TargetKind::Probability:
      return record.arm_outcome_dist[arms.treated][target.value] -
             record.arm_outcome_dist[arms.control][target.value];
    case TargetKind::LogProbability: {
      double p1 = record.arm_outcome_dist[arms.treated][target.value];
      double p0 = record.arm_outcome_dist[arms.control][target.value];
      if (p1 < kLogFloor) {
        p1 = kLogFloor;
        if (floored) ++*floored;
      }
      if (p0 < kLogFloor) {
        p0 = kLogFloor;
        if (floored) ++*floored;
      }
      return std::log(p1) - std::log(p0);
    }
    case TargetKind::Categorical:
      return (record.arm_outcome[arms.treated] == target.value ? 1.0 : 0.0) -
             (record.arm_outcome[arms.control] == target.value ? 1.0 : 0.0);
  }
  return 0.0;
}

std::vector<double> true_ites(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                              const ArmPair& arms, std::size_t* floored) {
  std::vector<double> out;
  out.reserve(dataset.records.size());
  for (const PotentialOutcomeRecord& record : dataset.records) {
    out.push_back(ite(record, target, arms, floored));
  }
  return out;
}

double sate(const BenchmarkDataset& dataset, const OutcomeTarget& target, const ArmPair& arms) {
  if (dataset.records.empty()) {
    throw Error("sate: empty dataset");
  }
  double sum = 0.0;
  for (const PotentialOutcomeRecord& record : dataset.records) {
    sum += ite(record, target, arms);
  }
  return sum / static_cast<double>(dataset.records.size());
}

double observed_outcome(const PotentialOutcomeRecord& record, const OutcomeTarget& target) {
  if (target.value >= record.factual_outcome_dist.size()) {
    throw Error("target value index out of range");
  }
  switch (target.kind) {
    case TargetKind::Probability:
      return record.factual_outcome_dist[target.value];
    case TargetKind::LogProbability:
      return std::log(std::max(record.factual_outcome_dist[target.value], kLogFloor));
    case TargetKind::Categorical:
      return record.outcome == target.value ? 1.0 : 0.0;
  }
  return 0.0;
}

std::vector<double> observed_outcomes(const BenchmarkDataset& dataset,
                                      const OutcomeTarget& target) {
  std::vector<double> out;
  out.reserve(dataset.records.size());
  for (const PotentialOutcomeRecord& record : dataset.records) {
    out.push_back(observed_outcome(record, target));
  }
  return out;
}

BenchmarkDataset hidden_projection(const BenchmarkDataset& dataset) {
  BenchmarkDataset out = dataset;
  out.covariates.clear();
  std::vector<std::size_t> kept_columns;
  for (std::size_t j = 0; j < dataset.covariates.size(); ++j) {
    if (dataset.covariates[j].kind == VariableKind::Exogenous) {
      out.hidden.push_back(dataset.covariates[j].name);
    } else {
      out.covariates.push_back(dataset.covariates[j]);
      kept_columns.push_back(j);
    }
  }
  for (PotentialOutcomeRecord& record : out.records) {
    std::vector<std::size_t> kept;
    kept.reserve(kept_columns.size());
    for (std::size_t j : kept_columns) {
      kept.push_back(record.covariates[j]);
    }
    record.covariates = std::move(kept);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset files

namespace {

std::vector<std::string> dataset_columns(const BenchmarkDataset& dataset) {
  std::vector<std::string> columns;
  columns.push_back("unit_id");
  for (const CovariateInfo& c : dataset.covariates) {
    columns.push_back(c.name);
  }
  columns.push_back("t");
  columns.push_back("y");
  for (std::size_t arm = 0; arm < dataset.treatment_arms; ++arm) {
    columns.push_back("y_arm_" + std::to_string(arm));
  }
  for (std::size_t arm = 0; arm < dataset.treatment_arms; ++arm) {
    for (std::size_t k = 0; k < dataset.outcome_values; ++k) {
      columns.push_back("p_arm_" + std::to_string(arm) + "_" + std::to_string(k));
    }
  }
  return columns;
}

}  // namespace

void write_dataset_csv(const BenchmarkDataset& dataset, std::ostream& out) {
  const std::vector<std::string> columns = dataset_columns(dataset);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out << ',';
    out << columns[i];
  }
  out << '\n';
  for (const PotentialOutcomeRecord& record : dataset.records) {
    out << record.unit_index;
    for (std::size_t value : record.covariates) {
      out << ',' << format_index(value);
    }
    out << ',' << format_index(record.treatment) << ',' << format_index(record.outcome);
    for (std::size_t arm = 0; arm < dataset.treatment_arms; ++arm) {
      out << ',' << format_index(record.arm_outcome[arm]);
    }
    for (std::size_t arm = 0; arm < dataset.treatment_arms; ++arm) {
      for (std::size_t k = 0; k < dataset.outcome_values; ++k) {
        out << ',' << format_double(record.arm_outcome_dist[arm][k]);
      }
    }
    out << '\n';
  }
}

std::string dataset_metadata_json(const BenchmarkDataset& dataset,
                                  const std::string& command_echo) {
  nlohmann::ordered_json doc;
  doc["kind"] = "seqscm-dataset";
  doc["spec"] = dataset.spec_name;
  doc["variation"] = dataset.variation.indices;
  doc["scorer"] = dataset.scorer_label;
  doc["seed"] = dataset.seed;
  doc["treatment"] = {{"name", dataset.treatment_name}, {"arms", dataset.treatment_arms}};
  doc["outcome"] = {{"name", dataset.outcome_name}, {"values", dataset.outcome_values}};
  auto covariates = nlohmann::ordered_json::array();
  for (const CovariateInfo& c : dataset.covariates) {
    covariates.push_back({{"name", c.name}, {"kind", to_string(c.kind)},
                          {"cardinality", c.cardinality}});
  }
  doc["covariates"] = std::move(covariates);
  doc["hidden"] = dataset.hidden;
  doc["records"] = dataset.records.size();
  doc["columns"] = dataset_columns(dataset);
  doc["command"] = command_echo;
  return doc.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path temp = path.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write file: " + temp.string());
    }
    out << content;
    out.flush();
    if (!out) {
      throw Error("short write: " + temp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    throw Error("cannot rename " + temp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_dataset_files(const BenchmarkDataset& dataset, const std::filesystem::path& csv_path,
                         const std::filesystem::path& meta_path,
                         const std::string& command_echo) {
  std::ostringstream csv;
  write_dataset_csv(dataset, csv);
  write_file_atomic(csv_path, csv.str());
  write_file_atomic(meta_path, dataset_metadata_json(dataset, command_echo));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double_field(const std::string& field) {
  double value = 0.0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc()) {
    throw Error("bad numeric field in dataset CSV: '" + field + "'");
  }
  return value;
}

std::size_t parse_index_field(const std::string& field) {
  std::size_t value = 0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc()) {
    throw Error("bad index field in dataset CSV: '" + field + "'");
  }
  return value;
}

}  // namespace

BenchmarkDataset read_dataset_files(const std::filesystem::path& csv_path,
                                    const std::filesystem::path& meta_path) {
  std::ifstream meta_in(meta_path, std::ios::binary);
  if (!meta_in) {
    throw Error("cannot open dataset metadata: " + meta_path.string());
  }
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("bad dataset metadata: " + std::string(e.what()));
  }

  BenchmarkDataset dataset;
  dataset.spec_name = meta.value("spec", "");
  dataset.variation.indices = meta.value("variation", std::vector<std::size_t>{});
  dataset.scorer_label = meta.value("scorer", "");
  dataset.seed = meta.value("seed", std::uint64_t{0});
  dataset.treatment_name = meta.at("treatment").at("name").get<std::string>();
  dataset.treatment_arms = meta.at("treatment").at("arms").get<std::size_t>();
  dataset.outcome_name = meta.at("outcome").at("name").get<std::string>();
  dataset.outcome_values = meta.at("outcome").at("values").get<std::size_t>();
  for (const auto& c : meta.at("covariates")) {
    dataset.covariates.push_back({c.at("name").get<std::string>(),
                                  variable_kind_from_string(c.at("kind").get<std::string>()),
                                  c.at("cardinality").get<std::size_t>()});
  }
  dataset.hidden = meta.value("hidden", std::vector<std::string>{});

  std::ifstream csv_in(csv_path, std::ios::binary);
  if (!csv_in) {
    throw Error("cannot open dataset CSV: " + csv_path.string());
  }
  std::string line;
  if (!std::getline(csv_in, line)) {
    throw Error("dataset CSV is empty: " + csv_path.string());
  }
  const std::size_t n_cov = dataset.covariates.size();
  const std::size_t n_arms = dataset.treatment_arms;
  const std::size_t n_out = dataset.outcome_values;
  const std::size_t expected_fields = 1 + n_cov + 2 + n_arms + n_arms * n_out;
  while (std::getline(csv_in, line)) {
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != expected_fields) {
      throw Error("dataset CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(expected_fields));
    }
    PotentialOutcomeRecord record;
    std::size_t f = 0;
    record.unit_index = parse_index_field(fields[f++]);
    record.covariates.reserve(n_cov);
    for (std::size_t j = 0; j < n_cov; ++j) {
      record.covariates.push_back(parse_index_field(fields[f++]));
    }
    record.treatment = parse_index_field(fields[f++]);
    record.outcome = parse_index_field(fields[f++]);
    record.arm_outcome.reserve(n_arms);
    for (std::size_t arm = 0; arm < n_arms; ++arm) {
      record.arm_outcome.push_back(parse_index_field(fields[f++]));
    }
    record.arm_outcome_dist.assign(n_arms, std::vector<double>(n_out, 0.0));
    for (std::size_t arm = 0; arm < n_arms; ++arm) {
      for (std::size_t k = 0; k < n_out; ++k) {
        record.arm_outcome_dist[arm][k] = parse_double_field(fields[f++]);
      }
    }
    record.factual_outcome_dist = record.arm_outcome_dist[record.treatment];
    record.master_seed = dataset.seed;
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

// ---------------------------------------------------------------------------
// Audit

namespace {

std::vector<OutcomeTarget> all_targets(std::size_t outcome_values) {
  std::vector<OutcomeTarget> targets;
  for (std::size_t k = 0; k < outcome_values; ++k) {
    targets.push_back({TargetKind::Categorical, k});
  }
  for (std::size_t k = 0; k < outcome_values; ++k) {
    targets.push_back({TargetKind::Probability, k});
  }
  for (std::size_t k = 0; k < outcome_values; ++k) {
    targets.push_back({TargetKind::LogProbability, k});
  }
  return targets;
}

}  // namespace

std::uint64_t dataset_seed(std::uint64_t run_seed, std::size_t variation_index,
                           std::size_t dataset_index) {
  return derive_seed({run_seed, fnv1a64("dataset"), variation_index, dataset_index});
}

AuditReport audit_sate(const ScmSpecDocument& spec, const std::vector<ScorerPtr>& scorers,
                       std::size_t variation_count, std::size_t datasets_per_variation,
                       std::size_t dataset_size, std::uint64_t seed, std::size_t workers) {
  if (scorers.empty()) {
    throw Error("audit needs at least one scorer");
  }
  if (variation_count == 0 || datasets_per_variation == 0 || dataset_size == 0) {
    throw Error("audit counts must be >= 1");
  }
  {
    std::set<std::string> labels;
    for (const ScorerPtr& s : scorers) {
      if (!s || s->label().empty()) {
        throw Error("audit scorers need nonempty labels");
      }
      if (!labels.insert(s->label()).second) {
        throw Error("duplicate scorer label in audit: " + s->label());
      }
    }
  }

  AuditReport report;
  report.spec_name = spec.name;
  report.datasets_per_variation = datasets_per_variation;
  report.dataset_size = dataset_size;
  report.seed = seed;
  report.variations = sample_variations(spec, variation_count, seed);

  const std::size_t outcome_values = spec.variable(spec.outcome).fill_values.size();
  const std::size_t treatment_arms = spec.variable(spec.treatment).fill_values.size();
  if (treatment_arms < 2) {
    throw Error("audit treatment needs at least 2 values");
  }
  const std::vector<OutcomeTarget> targets = all_targets(outcome_values);
  const ArmPair arms{0, treatment_arms - 1};

  struct CellBlock {
    std::vector<AuditCell> cells;
  };
  std::vector<CellBlock> blocks(scorers.size() * variation_count);

  parallel_for(blocks.size(), workers, [&](std::size_t block_index) {
    const std::size_t scorer_index = block_index / variation_count;
    const std::size_t variation_index = block_index % variation_count;
    const ScorerPtr& scorer = scorers[scorer_index];
    CellBlock& block = blocks[block_index];
    try {
      const SdScm scm = instantiate_variation(spec, report.variations[variation_index], scorer,
                                              derive_seed({seed, fnv1a64("audit-scm"),
                                                           variation_index}));
      // Pool records across this variation's datasets; identical dataset
      // seeds are reused for every scorer so comparisons are paired.
      std::vector<PotentialOutcomeRecord> pooled;
      pooled.reserve(datasets_per_variation * dataset_size);
      BenchmarkDataset pool;
      for (std::size_t d = 0; d < datasets_per_variation; ++d) {
        BenchmarkDataset dataset =
            generate_dataset(scm, spec.treatment, spec.outcome, dataset_size,
                             dataset_seed(seed, variation_index, d));
        if (d == 0) {
          pool = dataset;
          pool.records.clear();
          pool.spec_name = spec.name;
        }
        for (PotentialOutcomeRecord& r : dataset.records) {
          pool.records.push_back(std::move(r));
        }
      }
      for (const OutcomeTarget& target : targets) {
        AuditCell cell;
        cell.scorer_label = scorer->label();
        cell.variation_index = variation_index;
        cell.target = target;
        cell.sate = sate(pool, target, arms);
        const double sd = standard_deviation(observed_outcomes(pool, target));
        if (sd > 0.0) {
          cell.sate_sd_units = cell.sate / sd;
        } else {
          // Degenerate outcome column: a zero effect over constant outcomes
          // reports as 0, anything else as infinity.
          cell.sate_sd_units =
              cell.sate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        }
        block.cells.push_back(std::move(cell));
      }
    } catch (const Error& e) {
      block.cells.clear();
      for (const OutcomeTarget& target : targets) {
        AuditCell cell;
        cell.scorer_label = scorer->label();
        cell.variation_index = variation_index;
        cell.target = target;
        cell.failed = true;
        cell.error = e.what();
        block.cells.push_back(std::move(cell));
      }
    }
  });

  for (CellBlock& block : blocks) {
    for (AuditCell& cell : block.cells) {
      report.cells.push_back(std::move(cell));
    }
  }

  // Per (scorer, target) summaries over non-failed cells.
  for (const ScorerPtr& scorer : scorers) {
    for (const OutcomeTarget& target : targets) {
      std::vector<double> values;
      for (const AuditCell& cell : report.cells) {
        if (!cell.failed && cell.scorer_label == scorer->label() && cell.target == target) {
          values.push_back(cell.sate);
        }
      }
      if (values.empty()) {
        continue;
      }
      std::sort(values.begin(), values.end());
      AuditSummary summary;
      summary.scorer_label = scorer->label();
      summary.target = target;
      summary.cells = values.size();
      double sum = 0.0;
      for (double v : values) {
        sum += v;
      }
      summary.mean = sum / static_cast<double>(values.size());
      summary.min = values.front();
      summary.max = values.back();
      summary.q25 = percentile(values, 0.25);
      summary.median = percentile(values, 0.5);
      summary.q75 = percentile(values, 0.75);
      report.summaries.push_back(std::move(summary));
    }
  }
  return report;
}

void write_audit_csv(const AuditReport& report, std::ostream& out) {
  out << "scorer,variation,target,sate,sate_sd_units,failed,error\n";
  for (const AuditCell& cell : report.cells) {
    out << cell.scorer_label << ',' << cell.variation_index << ',' << target_name(cell.target)
        << ',';
    if (cell.failed) {
      std::string message = cell.error;
      std::replace(message.begin(), message.end(), ',', ';');
      std::replace(message.begin(), message.end(), '\n', ' ');
      out << ",,1," << message << '\n';
    } else {
      out << format_double(cell.sate) << ',' << format_double(cell.sate_sd_units) << ",0,\n";
    }
  }
}

std::string audit_summary_json(const AuditReport& report) {
  nlohmann::ordered_json doc;
  doc["kind"] = "seqscm-audit";
  doc["spec"] = report.spec_name;
  doc["seed"] = report.seed;
  doc["variations"] = report.variations.size();
  doc["datasets_per_variation"] = report.datasets_per_variation;
  doc["dataset_size"] = report.dataset_size;
  auto variations = nlohmann::ordered_json::array();
  for (const VariationId& v : report.variations) {
    variations.push_back(v.indices);
  }
  doc["variation_ids"] = std::move(variations);
  auto summaries = nlohmann::ordered_json::array();
  for (const AuditSummary& s : report.summaries) {
    summaries.push_back({{"scorer", s.scorer_label},
                         {"target", target_name(s.target)},
                         {"cells", s.cells},
                         {"mean", s.mean},
                         {"min", s.min},
                         {"q25", s.q25},
                         {"median", s.median},
                         {"q75", s.q75},
                         {"max", s.max}});
  }
  doc["summaries"] = std::move(summaries);
  std::size_t failed = 0;
  for (const AuditCell& cell : report.cells) {
    failed += cell.failed ? 1 : 0;
  }
  doc["failed_cells"] = failed;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Full pipeline

void run_benchmark(const ScmSpecDocument& spec, const ScorerPtr& scorer,
                   const BenchmarkRunConfig& config) {
  if (!scorer) {
    throw Error("run_benchmark: no scorer");
  }
  std::filesystem::create_directories(config.output_dir);

  const std::vector<VariationId> variations =
      sample_variations(spec, config.variations, config.seed);

  std::vector<SdScm> models;
  models.reserve(variations.size());
  for (std::size_t v = 0; v < variations.size(); ++v) {
    models.push_back(instantiate_variation(
        spec, variations[v], scorer, derive_seed({config.seed, fnv1a64("scm"), v})));
  }

  const std::size_t total = config.variations * config.datasets_per_variation;
  parallel_for(total, config.workers, [&](std::size_t cell) {
    const std::size_t v = cell / config.datasets_per_variation;
    const std::size_t d = cell % config.datasets_per_variation;
    BenchmarkDataset dataset =
        generate_dataset(models[v], spec.treatment, spec.outcome, config.dataset_size,
                         dataset_seed(config.seed, v, d));
    dataset.spec_name = spec.name;
    if (config.hide_exogenous) {
      dataset = hidden_projection(dataset);
    }
    char name[64];
    std::snprintf(name, sizeof(name), "dataset_v%03zu_d%03zu", v, d);
    write_dataset_files(dataset, config.output_dir / (std::string(name) + ".csv"),
                        config.output_dir / (std::string(name) + ".meta.json"),
                        config.command_echo);
  });
}

}  // namespace seqscm

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seqscm/sampling.hpp"
#include "seqscm/spec_format.hpp"

namespace seqscm {

// Probabilities below this are floored before taking logs, with a warning
// counted at the dataset level, so log-probability targets stay finite.
inline constexpr double kLogFloor = 1e-12;

enum class TargetKind { Categorical, Probability, LogProbability };

// Which scalar is read off a unit's outcome: the indicator of value k, the
// recorded probability of value k, or its log.
struct OutcomeTarget {
  TargetKind kind = TargetKind::Probability;
  std::size_t value = 0;

  bool operator==(const OutcomeTarget&) const = default;
};

// "p:K", "logp:K", "cat:K".
OutcomeTarget parse_target(const std::string& text);
std::string target_name(const OutcomeTarget& target);

// Ordered pair of treatment value indices for effect contrasts: effect =
// outcome under `treated` minus outcome under `control`.
struct ArmPair {
  std::size_t control = 0;
  std::size_t treated = 1;
};

// One benchmark row: covariates, factual treatment/outcome, and the full
// per-arm potential outcome data (counterfactual draws plus outcome
// distributions).
struct PotentialOutcomeRecord {
  std::uint64_t unit_index = 0;
  std::vector<std::size_t> covariates;  // non-treatment/outcome values, model order
  std::size_t treatment = 0;
  std::size_t outcome = 0;
  std::vector<double> factual_outcome_dist;
  std::vector<std::size_t> arm_outcome;            // indexed by arm value
  std::vector<std::vector<double>> arm_outcome_dist;
  std::uint64_t master_seed = 0;
};

struct CovariateInfo {
  std::string name;
  VariableKind kind = VariableKind::Endogenous;
  std::size_t cardinality = 0;
};

struct BenchmarkDataset {
  std::string spec_name;
  VariationId variation;
  std::string scorer_label;
  std::string treatment_name;
  std::string outcome_name;
  std::size_t treatment_arms = 0;
  std::size_t outcome_values = 0;
  std::vector<CovariateInfo> covariates;  // schema of the records' covariate columns
  std::vector<std::string> hidden;        // covariates removed by projection
  std::uint64_t seed = 0;
  std::vector<PotentialOutcomeRecord> records;
};

// Draws one observational unit and fills in every treatment arm: the factual
// arm reuses the factual outcome (consistency), each other arm comes from a
// counterfactual sample under do(treatment = arm).
PotentialOutcomeRecord generate_record(const SdScm& scm, const std::string& treatment,
                                       const std::string& outcome, std::uint64_t seed,
                                       std::uint64_t unit_index);

// n records with unit indices 0..n-1, deterministic in `seed` and
// order-independent across workers.
BenchmarkDataset generate_dataset(const SdScm& scm, const std::string& treatment,
                                  const std::string& outcome, std::size_t n, std::uint64_t seed,
                                  std::size_t workers = 1);

// Individual effect of moving from arms.control to arms.treated under the
// target. Log targets floor probabilities at kLogFloor; when `floored` is
// given it is incremented per floored probability.
double ite(const PotentialOutcomeRecord& record, const OutcomeTarget& target, const ArmPair& arms,
           std::size_t* floored = nullptr);

std::vector<double> true_ites(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                              const ArmPair& arms, std::size_t* floored = nullptr);

// Mean ITE over the dataset.
double sate(const BenchmarkDataset& dataset, const OutcomeTarget& target, const ArmPair& arms);

// The factual value of the target for one record (what an estimator observes).
double observed_outcome(const PotentialOutcomeRecord& record, const OutcomeTarget& target);
std::vector<double> observed_outcomes(const BenchmarkDataset& dataset,
                                      const OutcomeTarget& target);

// Removes exogenous covariate columns; ground-truth arm data is untouched.
// Idempotent.
BenchmarkDataset hidden_projection(const BenchmarkDataset& dataset);

// ---------------------------------------------------------------------------
// Dataset files

// CSV layout: unit_id, one column per covariate (value index), t, y, then
// y_arm_<a> for each arm, then p_arm_<a>_<k> for each arm and outcome value.
void write_dataset_csv(const BenchmarkDataset& dataset, std::ostream& out);

// Sidecar metadata. `command_echo` may be empty.
std::string dataset_metadata_json(const BenchmarkDataset& dataset,
                                  const std::string& command_echo);

// Atomic (temp file + rename) writes.
void write_dataset_files(const BenchmarkDataset& dataset, const std::filesystem::path& csv_path,
                         const std::filesystem::path& meta_path,
                         const std::string& command_echo);

BenchmarkDataset read_dataset_files(const std::filesystem::path& csv_path,
                                    const std::filesystem::path& meta_path);

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// ---------------------------------------------------------------------------
// Audit

struct AuditCell {
  std::string scorer_label;
  std::size_t variation_index = 0;
  OutcomeTarget target;
  double sate = 0.0;
  double sate_sd_units = 0.0;
  bool failed = false;
  std::string error;
};

struct AuditSummary {
  std::string scorer_label;
  OutcomeTarget target;
  std::size_t cells = 0;
  double mean = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

struct AuditReport {
  std::string spec_name;
  std::vector<VariationId> variations;  // shared across scorers
  std::size_t datasets_per_variation = 0;
  std::size_t dataset_size = 0;
  std::uint64_t seed = 0;
  std::vector<AuditCell> cells;
  std::vector<AuditSummary> summaries;
};

// For each scorer and each sampled variation, generates datasets and records
// the pooled SATE per outcome target, raw and in outcome-standard-deviation
// units. Variation ids are identical across scorers so distributions compare
// pairwise. Scorer failures mark their cells and leave the rest intact.
AuditReport audit_sate(const ScmSpecDocument& spec, const std::vector<ScorerPtr>& scorers,
                       std::size_t variation_count, std::size_t datasets_per_variation,
                       std::size_t dataset_size, std::uint64_t seed, std::size_t workers = 1);

void write_audit_csv(const AuditReport& report, std::ostream& out);
std::string audit_summary_json(const AuditReport& report);

// ---------------------------------------------------------------------------
// Full benchmark pipeline (spec -> variations -> datasets on disk)

struct BenchmarkRunConfig {
  std::size_t variations = 1;
  std::size_t datasets_per_variation = 1;
  std::size_t dataset_size = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool hide_exogenous = false;
  std::filesystem::path output_dir;
  std::string command_echo;
};

// Writes variations x datasets_per_variation dataset files (CSV + metadata)
// under output_dir. File contents depend only on the spec, scorer, and seed,
// never on the worker count.
void run_benchmark(const ScmSpecDocument& spec, const ScorerPtr& scorer,
                   const BenchmarkRunConfig& config);

// Seed helpers shared by the pipeline and its tests.
std::uint64_t dataset_seed(std::uint64_t run_seed, std::size_t variation_index,
                           std::size_t dataset_index);

}  // namespace seqscm

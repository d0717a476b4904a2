#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seqscm/benchmark.hpp"
#include "seqscm/estimators.hpp"

namespace seqscm {

// Root mean squared error of per-unit effect predictions against the true
// individual effects.
double pehe(const std::vector<double>& predictions, const std::vector<double>& truths);

enum class PeheDenominator { OutcomeSd, IteSd };

// pehe divided by the empirical (population) standard deviation of either the
// observed outcomes or the true individual effects. Throws MetricError when
// the chosen denominator is zero.
double standardized_pehe(const std::vector<double>& predictions,
                         const std::vector<double>& truths, PeheDenominator denominator,
                         const std::vector<double>& observed_outcomes);

// 1 - SSE/SST with SST about the truth mean. Requires at least two points and
// positive truth variance.
double r2(const std::vector<double>& predictions, const std::vector<double>& truths);
double r2_clipped(const std::vector<double>& predictions, const std::vector<double>& truths);

struct IntervalSet {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct CoverageResult {
  double coverage = 0.0;    // fraction of truths inside their interval
  double mean_width = 0.0;  // raw units
  std::optional<double> mean_width_sd_units;  // set when outcomes are supplied
};

CoverageResult coverage(const IntervalSet& intervals, const std::vector<double>& truths,
                        double alpha = 0.05,
                        const std::vector<double>* observed_outcomes = nullptr);

// (estimate - truth) / sd(observed outcomes).
double sate_error_sd_units(double estimated_sate, double true_sate,
                           const std::vector<double>& observed_outcomes);

// Population standard deviation (1/n).
double population_sd(const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Stratified correlation diagnostic

struct StratumCorrelation {
  std::size_t stratum = 0;
  std::size_t count = 0;
  std::optional<double> rho;  // absent when the stratum was skipped
  std::string skip_reason;
};

struct StratifiedCorrelationResult {
  double pooled = 0.0;
  std::vector<StratumCorrelation> strata;
  double mean_abs_stratum_rho = 0.0;  // over usable strata
  std::size_t usable_strata = 0;
};

// Pearson correlation of two per-unit series, pooled and within each stratum.
// Strata with fewer than 3 units or zero variance are skipped with a marker.
// Throws MetricError when fewer than 3 usable units exist overall.
StratifiedCorrelationResult stratified_correlation(const std::vector<double>& a,
                                                   const std::vector<double>& b,
                                                   const std::vector<std::size_t>& strata);

// How a unit is turned into a number for the correlation diagnostic: the
// recorded probability of `value`, or the 0/1 indicator of it.
struct UnitSeries {
  std::string variable;
  std::size_t value = 0;
  bool use_probability = true;
};

// Extracts the two series and the stratifier's sampled values from units of
// one model and runs the diagnostic.
StratifiedCorrelationResult stratified_correlation(const SdScm& scm,
                                                   const std::vector<Unit>& units,
                                                   const UnitSeries& a, const UnitSeries& b,
                                                   const std::string& stratifier);

// ---------------------------------------------------------------------------
// Reports

struct MetricReport {
  std::string method;
  std::string dataset_id;
  OutcomeTarget target;
  double sate_error_sd_units = 0.0;
  double rmse = 0.0;  // absolute ATE error for this dataset
  double r2 = 0.0;
  double r2_clipped = 0.0;
  double pehe = 0.0;
  double pehe_std_outcome = 0.0;
  double pehe_std_ite = 0.0;  // NaN when the true effects are constant
  std::optional<double> coverage;
  std::optional<double> mean_width_sd_units;
};

// Scores one estimator's output against the dataset's ground-truth effects.
MetricReport evaluate_estimator(const BenchmarkDataset& dataset, const EstimatorOutput& output,
                                const OutcomeTarget& target, const ArmPair& arms,
                                const std::string& dataset_id,
                                const IntervalSet* intervals = nullptr);

void write_metric_csv(const std::vector<MetricReport>& reports, std::ostream& out);

// Per-method aggregates (mean and quartiles of each metric).
std::string metric_summary_json(const std::vector<MetricReport>& reports);

}  // namespace seqscm

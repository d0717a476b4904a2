#include "seqscm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

namespace seqscm {

namespace {

void check_equal_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw MetricError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  return sum / static_cast<double>(values.size());
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  const double mean_a = mean_of(a);
  const double mean_b = mean_of(b);
  double ss_a = 0.0;
  double ss_b = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    ss_a += da * da;
    ss_b += db * db;
    cross += da * db;
  }
  if (ss_a <= 0.0 || ss_b <= 0.0) {
    return std::nullopt;
  }
  return cross / std::sqrt(ss_a * ss_b);
}

std::string format_double_or_empty(double value) {
  if (std::isnan(value)) {
    return "";
  }
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace

double population_sd(const std::vector<double>& values) {
  if (values.empty()) {
    return 0.0;
  }
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double pehe(const std::vector<double>& predictions, const std::vector<double>& truths) {
  check_equal_lengths(predictions.size(), truths.size(), "pehe");
  if (predictions.empty()) {
    throw MetricError("pehe: needs at least one unit");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truths[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(predictions.size()));
}

double standardized_pehe(const std::vector<double>& predictions,
                         const std::vector<double>& truths, PeheDenominator denominator,
                         const std::vector<double>& observed_outcomes) {
  const double value = pehe(predictions, truths);
  const double sd = denominator == PeheDenominator::OutcomeSd ? population_sd(observed_outcomes)
                                                              : population_sd(truths);
  if (!(sd > 0.0)) {
    throw MetricError(denominator == PeheDenominator::OutcomeSd
                          ? "standardized pehe: outcome standard deviation is zero"
                          : "standardized pehe: ite standard deviation is zero");
  }
  return value / sd;
}

double r2(const std::vector<double>& predictions, const std::vector<double>& truths) {
  check_equal_lengths(predictions.size(), truths.size(), "r2");
  if (predictions.size() < 2) {
    throw MetricError("r2: needs at least two units");
  }
  const double mean_truth = mean_of(truths);
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    sse += (predictions[i] - truths[i]) * (predictions[i] - truths[i]);
    sst += (truths[i] - mean_truth) * (truths[i] - mean_truth);
  }
  if (!(sst > 0.0)) {
    throw MetricError("r2: truths have zero variance");
  }
  return 1.0 - sse / sst;
}

double r2_clipped(const std::vector<double>& predictions, const std::vector<double>& truths) {
  return std::max(r2(predictions, truths), 0.0);
}

CoverageResult coverage(const IntervalSet& intervals, const std::vector<double>& truths,
                        double /*alpha*/, const std::vector<double>* observed_outcomes) {
  check_equal_lengths(intervals.lower.size(), intervals.upper.size(), "coverage");
  check_equal_lengths(intervals.lower.size(), truths.size(), "coverage");
  if (truths.empty()) {
    throw MetricError("coverage: needs at least one unit");
  }
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (intervals.lower[i] > intervals.upper[i]) {
      throw MetricError("coverage: interval " + std::to_string(i) + " has lower > upper");
    }
  }
  CoverageResult result;
  std::size_t covered = 0;
  double width_sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (intervals.lower[i] <= truths[i] && truths[i] <= intervals.upper[i]) {
      ++covered;
    }
    width_sum += intervals.upper[i] - intervals.lower[i];
  }
  result.coverage = static_cast<double>(covered) / static_cast<double>(truths.size());
  result.mean_width = width_sum / static_cast<double>(truths.size());
  if (observed_outcomes) {
    const double sd = population_sd(*observed_outcomes);
    if (!(sd > 0.0)) {
      throw MetricError("coverage: outcome standard deviation is zero");
    }
    result.mean_width_sd_units = result.mean_width / sd;
  }
  return result;
}

double sate_error_sd_units(double estimated_sate, double true_sate,
                           const std::vector<double>& observed_outcomes) {
  const double sd = population_sd(observed_outcomes);
  if (!(sd > 0.0)) {
    throw MetricError("sate error: outcome standard deviation is zero");
  }
  return (estimated_sate - true_sate) / sd;
}

StratifiedCorrelationResult stratified_correlation(const std::vector<double>& a,
                                                   const std::vector<double>& b,
                                                   const std::vector<std::size_t>& strata) {
  check_equal_lengths(a.size(), b.size(), "stratified correlation");
  check_equal_lengths(a.size(), strata.size(), "stratified correlation");
  if (a.size() < 3) {
    throw MetricError("stratified correlation: needs at least 3 units");
  }
  const std::optional<double> pooled = pearson(a, b);
  if (!pooled) {
    throw MetricError("stratified correlation: pooled series has zero variance");
  }

  StratifiedCorrelationResult result;
  result.pooled = *pooled;

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    groups[strata[i]].push_back(i);
  }
  double abs_sum = 0.0;
  for (const auto& [stratum, rows] : groups) {
    StratumCorrelation entry;
    entry.stratum = stratum;
    entry.count = rows.size();
    if (rows.size() < 3) {
      entry.skip_reason = "fewer than 3 units";
    } else {
      std::vector<double> sub_a;
      std::vector<double> sub_b;
      sub_a.reserve(rows.size());
      sub_b.reserve(rows.size());
      for (std::size_t i : rows) {
        sub_a.push_back(a[i]);
        sub_b.push_back(b[i]);
      }
      const std::optional<double> rho = pearson(sub_a, sub_b);
      if (!rho) {
        entry.skip_reason = "zero variance within stratum";
      } else {
        entry.rho = *rho;
        abs_sum += std::abs(*rho);
        ++result.usable_strata;
      }
    }
    result.strata.push_back(std::move(entry));
  }
  result.mean_abs_stratum_rho =
      result.usable_strata > 0 ? abs_sum / static_cast<double>(result.usable_strata) : 0.0;
  return result;
}

StratifiedCorrelationResult stratified_correlation(const SdScm& scm,
                                                   const std::vector<Unit>& units,
                                                   const UnitSeries& a, const UnitSeries& b,
                                                   const std::string& stratifier) {
  const std::size_t a_pos = scm.order_index(a.variable);
  const std::size_t b_pos = scm.order_index(b.variable);
  const std::size_t w_pos = scm.order_index(stratifier);

  auto extract = [](const Unit& unit, const UnitSeries& series, std::size_t position) {
    if (series.use_probability) {
      if (!unit.distributions[position]) {
        throw MetricError("unit has no recorded distribution for '" + series.variable + "'");
      }
      return unit.distributions[position]->probabilities.at(series.value);
    }
    return unit.values[position] == series.value ? 1.0 : 0.0;
  };

  std::vector<double> series_a;
  std::vector<double> series_b;
  std::vector<std::size_t> strata;
  series_a.reserve(units.size());
  series_b.reserve(units.size());
  strata.reserve(units.size());
  for (const Unit& unit : units) {
    series_a.push_back(extract(unit, a, a_pos));
    series_b.push_back(extract(unit, b, b_pos));
    strata.push_back(unit.values[w_pos]);
  }
  return stratified_correlation(series_a, series_b, strata);
}

// ---------------------------------------------------------------------------
// Reports

MetricReport evaluate_estimator(const BenchmarkDataset& dataset, const EstimatorOutput& output,
                                const OutcomeTarget& target, const ArmPair& arms,
                                const std::string& dataset_id, const IntervalSet* intervals) {
  const std::vector<double> truths = true_ites(dataset, target, arms);
  const std::vector<double> outcomes = observed_outcomes(dataset, target);
  const double true_sate_value = sate(dataset, target, arms);

  MetricReport report;
  report.method = output.method;
  report.dataset_id = dataset_id;
  report.target = target;
  report.rmse = std::abs(output.ate - true_sate_value);
  report.sate_error_sd_units = sate_error_sd_units(output.ate, true_sate_value, outcomes);
  report.pehe = pehe(output.cate, truths);
  report.pehe_std_outcome =
      standardized_pehe(output.cate, truths, PeheDenominator::OutcomeSd, outcomes);
  if (population_sd(truths) > 0.0) {
    report.pehe_std_ite =
        standardized_pehe(output.cate, truths, PeheDenominator::IteSd, outcomes);
    report.r2 = r2(output.cate, truths);
    report.r2_clipped = std::max(report.r2, 0.0);
  } else {
    // Constant true effects: R2 and the ITE-standardized PEHE are undefined.
    report.pehe_std_ite = std::numeric_limits<double>::quiet_NaN();
    report.r2 = std::numeric_limits<double>::quiet_NaN();
    report.r2_clipped = std::numeric_limits<double>::quiet_NaN();
  }
  if (intervals) {
    const CoverageResult c = coverage(*intervals, truths, 0.05, &outcomes);
    report.coverage = c.coverage;
    report.mean_width_sd_units = c.mean_width_sd_units;
  }
  return report;
}

void write_metric_csv(const std::vector<MetricReport>& reports, std::ostream& out) {
  out << "method,dataset,target,sate_error_sd_units,rmse,r2,r2_clipped,pehe,pehe_std_outcome,"
         "pehe_std_ite,coverage,mean_width_sd_units\n";
  for (const MetricReport& r : reports) {
    out << r.method << ',' << r.dataset_id << ',' << target_name(r.target) << ','
        << format_double_or_empty(r.sate_error_sd_units) << ',' << format_double_or_empty(r.rmse)
        << ',' << format_double_or_empty(r.r2) << ',' << format_double_or_empty(r.r2_clipped)
        << ',' << format_double_or_empty(r.pehe) << ','
        << format_double_or_empty(r.pehe_std_outcome) << ','
        << format_double_or_empty(r.pehe_std_ite) << ','
        << (r.coverage ? format_double_or_empty(*r.coverage) : "") << ','
        << (r.mean_width_sd_units ? format_double_or_empty(*r.mean_width_sd_units) : "") << '\n';
  }
}

std::string metric_summary_json(const std::vector<MetricReport>& reports) {
  auto quartiles = [](std::vector<double> values) {
    nlohmann::ordered_json out;
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return std::isnan(v); }),
                 values.end());
    if (values.empty()) {
      return out;
    }
    std::sort(values.begin(), values.end());
    auto pct = [&](double q) {
      const double position = q * static_cast<double>(values.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(position);
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      const double frac = position - static_cast<double>(lo);
      return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    double sum = 0.0;
    for (double v : values) {
      sum += v;
    }
    out["count"] = values.size();
    out["mean"] = sum / static_cast<double>(values.size());
    out["min"] = values.front();
    out["q25"] = pct(0.25);
    out["median"] = pct(0.5);
    out["q75"] = pct(0.75);
    out["max"] = values.back();
    return out;
  };

  std::map<std::string, std::vector<const MetricReport*>> by_method;
  for (const MetricReport& r : reports) {
    by_method[r.method].push_back(&r);
  }
  nlohmann::ordered_json doc;
  doc["kind"] = "seqscm-metrics";
  auto methods = nlohmann::ordered_json::array();
  for (const auto& [method, rows] : by_method) {
    nlohmann::ordered_json entry;
    entry["method"] = method;
    entry["datasets"] = rows.size();
    auto collect = [&](auto getter) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (const MetricReport* r : rows) {
        values.push_back(getter(*r));
      }
      return values;
    };
    entry["sate_error_sd_units"] =
        quartiles(collect([](const MetricReport& r) { return r.sate_error_sd_units; }));
    entry["rmse"] = quartiles(collect([](const MetricReport& r) { return r.rmse; }));
    entry["r2_clipped"] = quartiles(collect([](const MetricReport& r) { return r.r2_clipped; }));
    entry["pehe"] = quartiles(collect([](const MetricReport& r) { return r.pehe; }));
    entry["pehe_std_outcome"] =
        quartiles(collect([](const MetricReport& r) { return r.pehe_std_outcome; }));
    entry["pehe_std_ite"] =
        quartiles(collect([](const MetricReport& r) { return r.pehe_std_ite; }));
    methods.push_back(std::move(entry));
  }
  doc["methods"] = std::move(methods);
  return doc.dump(2) + "\n";
}

}  // namespace seqscm

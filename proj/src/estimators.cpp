#include "seqscm/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>

namespace seqscm {

namespace {

constexpr double kRidgeLambda = 1e-8;
constexpr double kRankTolerance = 1e-12;

// Least squares by normal equations with a condition-number check; falls back
// to ridge (lambda = 1e-8) when the Gram matrix is rank deficient or there
// are fewer rows than columns.
Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    EstimatorDiagnostics& diagnostics) {
  const Eigen::MatrixXd gram = X.transpose() * X;
  const Eigen::VectorXd moment = X.transpose() * y;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(gram);
  const double max_eigen = eigen.eigenvalues().maxCoeff();
  const double min_eigen = eigen.eigenvalues().minCoeff();
  diagnostics.condition_number =
      min_eigen > 0.0 ? max_eigen / min_eigen : std::numeric_limits<double>::infinity();

  const bool deficient = X.rows() < X.cols() || min_eigen <= max_eigen * kRankTolerance;
  if (!deficient) {
    return gram.ldlt().solve(moment);
  }
  diagnostics.ridge_engaged = true;
  Eigen::MatrixXd ridged = gram;
  ridged.diagonal().array() += kRidgeLambda;
  return ridged.ldlt().solve(moment);
}

// One-hot encoding with the first level dropped; covariates with one level
// contribute no columns.
std::size_t one_hot_width(const BenchmarkDataset& dataset) {
  std::size_t width = 0;
  for (const CovariateInfo& c : dataset.covariates) {
    width += c.cardinality > 0 ? c.cardinality - 1 : 0;
  }
  return width;
}

void fill_one_hot(const PotentialOutcomeRecord& record, const BenchmarkDataset& dataset,
                  Eigen::MatrixXd& X, Eigen::Index row, Eigen::Index first_column) {
  Eigen::Index column = first_column;
  for (std::size_t j = 0; j < dataset.covariates.size(); ++j) {
    const std::size_t levels = dataset.covariates[j].cardinality;
    if (levels <= 1) {
      continue;
    }
    const std::size_t value = record.covariates[j];
    if (value >= 1) {
      X(row, column + static_cast<Eigen::Index>(value) - 1) = 1.0;
    }
    column += static_cast<Eigen::Index>(levels - 1);
  }
}

void check_binary_treatment(const BenchmarkDataset& dataset, const ArmPair& arms) {
  if (dataset.records.empty()) {
    throw EstimatorError("empty dataset");
  }
  if (arms.control >= dataset.treatment_arms || arms.treated >= dataset.treatment_arms ||
      arms.control == arms.treated) {
    throw EstimatorError("bad arm pair (" + std::to_string(arms.control) + ", " +
                         std::to_string(arms.treated) + ") for " +
                         std::to_string(dataset.treatment_arms) + " arms");
  }
  bool has_control = false;
  bool has_treated = false;
  for (const PotentialOutcomeRecord& record : dataset.records) {
    has_control = has_control || record.treatment == arms.control;
    has_treated = has_treated || record.treatment == arms.treated;
  }
  if (!has_control || !has_treated) {
    throw EstimatorError("dataset has records in only one treatment arm");
  }
}

// Fits OLS on {1, t} or {1, t, covariates} and reads the coefficient on t.
EstimatorOutput fit_linear_regression(const BenchmarkDataset& dataset,
                                      const OutcomeTarget& target, const ArmPair& arms,
                                      bool with_covariates, std::string method) {
  check_binary_treatment(dataset, arms);
  const std::size_t n = dataset.records.size();
  const std::size_t d = 2 + (with_covariates ? one_hot_width(dataset) : 0);

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const PotentialOutcomeRecord& record = dataset.records[i];
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    X(row, 0) = 1.0;
    X(row, 1) = record.treatment == arms.treated ? 1.0 : 0.0;
    if (with_covariates) {
      fill_one_hot(record, dataset, X, row, 2);
    }
    y(row) = observed_outcome(record, target);
  }

  EstimatorOutput output;
  output.method = std::move(method);
  const Eigen::VectorXd beta = solve_least_squares(X, y, output.diagnostics);
  output.ate = beta(1);
  output.cate.assign(n, output.ate);
  return output;
}

}  // namespace

EstimatorOutput fit_t_only_ols(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                               const ArmPair& arms) {
  return fit_linear_regression(dataset, target, arms, /*with_covariates=*/false, "t_only_ols");
}

EstimatorOutput fit_adjusted_ols(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                                 const ArmPair& arms) {
  return fit_linear_regression(dataset, target, arms, /*with_covariates=*/true, "adjusted_ols");
}

EstimatorOutput fit_linear_s(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                             const ArmPair& arms) {
  EstimatorOutput output =
      fit_linear_regression(dataset, target, arms, /*with_covariates=*/true, "linear_s");
  return output;
}

EstimatorOutput fit_linear_t(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                             const ArmPair& arms) {
  check_binary_treatment(dataset, arms);
  const std::size_t n = dataset.records.size();
  const std::size_t d = 1 + one_hot_width(dataset);

  EstimatorOutput output;
  output.method = "linear_t";

  // Separate fit per arm on {1, covariates}.
  Eigen::VectorXd beta_by_arm[2];
  for (int which = 0; which < 2; ++which) {
    const std::size_t arm = which == 0 ? arms.control : arms.treated;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (dataset.records[i].treatment == arm) {
        rows.push_back(i);
      }
    }
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const PotentialOutcomeRecord& record = dataset.records[rows[r]];
      const Eigen::Index row = static_cast<Eigen::Index>(r);
      X(row, 0) = 1.0;
      fill_one_hot(record, dataset, X, row, 1);
      y(row) = observed_outcome(record, target);
    }
    EstimatorDiagnostics arm_diagnostics;
    beta_by_arm[which] = solve_least_squares(X, y, arm_diagnostics);
    output.diagnostics.ridge_engaged |= arm_diagnostics.ridge_engaged;
    output.diagnostics.condition_number =
        std::max(output.diagnostics.condition_number, arm_diagnostics.condition_number);
  }

  output.cate.resize(n);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    X(row, 0) = 1.0;
    fill_one_hot(dataset.records[i], dataset, X, row, 1);
  }
  const Eigen::VectorXd f0 = X * beta_by_arm[0];
  const Eigen::VectorXd f1 = X * beta_by_arm[1];
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    output.cate[i] = f1(static_cast<Eigen::Index>(i)) - f0(static_cast<Eigen::Index>(i));
    sum += output.cate[i];
  }
  output.ate = sum / static_cast<double>(n);
  return output;
}

EstimatorOutput fit_estimator(const std::string& method, const BenchmarkDataset& dataset,
                              const OutcomeTarget& target, const ArmPair& arms) {
  if (method == "t_only_ols") return fit_t_only_ols(dataset, target, arms);
  if (method == "adjusted_ols" || method == "linreg") return fit_adjusted_ols(dataset, target, arms);
  if (method == "linear_s") return fit_linear_s(dataset, target, arms);
  if (method == "linear_t") return fit_linear_t(dataset, target, arms);
  throw EstimatorError("unknown estimator '" + method + "'");
}

std::vector<std::string> estimator_names() {
  return {"t_only_ols", "adjusted_ols", "linear_s", "linear_t"};
}

void write_cate_csv(const BenchmarkDataset& dataset, const EstimatorOutput& output,
                    std::ostream& out) {
  out << "unit_id,cate_hat\n";
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), output.cate[i]);
    out << dataset.records[i].unit_index << ',' << std::string_view(buffer, result.ptr - buffer)
        << '\n';
  }
}

}  // namespace seqscm

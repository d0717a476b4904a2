#pragma once

#include <string>
#include <vector>

#include "seqscm/benchmark.hpp"

namespace seqscm {

struct EstimatorDiagnostics {
  double condition_number = 0.0;
  bool ridge_engaged = false;
};

// ATE estimate plus per-unit CATE predictions for one method on one dataset.
struct EstimatorOutput {
  std::string method;
  double ate = 0.0;
  std::vector<double> cate;  // one prediction per record, dataset order
  EstimatorDiagnostics diagnostics;
};

// OLS of the observed outcome on {1, t}. The coefficient on t equals the
// treated-minus-control mean difference.
EstimatorOutput fit_t_only_ols(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                               const ArmPair& arms);

// OLS on {1, t, one-hot covariates (first level dropped)}; ATE and the
// constant CATE are the coefficient on t.
EstimatorOutput fit_adjusted_ols(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                                 const ArmPair& arms);

// S-learner with a linear base model and no interactions: the same fit as
// adjusted OLS, read as f(x,1) - f(x,0). Predicts a constant CATE.
EstimatorOutput fit_linear_s(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                             const ArmPair& arms);

// T-learner with linear base models: separate OLS per arm on {1, covariates};
// CATE_i = f1(x_i) - f0(x_i), ATE = mean CATE.
EstimatorOutput fit_linear_t(const BenchmarkDataset& dataset, const OutcomeTarget& target,
                             const ArmPair& arms);

// Dispatch by method name: t_only_ols | adjusted_ols | linear_s | linear_t.
EstimatorOutput fit_estimator(const std::string& method, const BenchmarkDataset& dataset,
                              const OutcomeTarget& target, const ArmPair& arms);

std::vector<std::string> estimator_names();

// Predictions export: unit_id, cate_hat.
void write_cate_csv(const BenchmarkDataset& dataset, const EstimatorOutput& output,
                    std::ostream& out);

}  // namespace seqscm

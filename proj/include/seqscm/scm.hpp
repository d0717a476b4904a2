#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqscm/graph.hpp"
#include "seqscm/scorer.hpp"
#include "seqscm/variable.hpp"

namespace seqscm {

// One phrasing choice per variable, aligned to the spec's declaration order.
struct VariationId {
  std::vector<std::size_t> indices;

  bool operator==(const VariationId&) const = default;
};

// A sequence-driven structural causal model: variables with finite phrase
// spaces, a DAG over them, a scorer supplying every conditional mechanism,
// and a fixed topological order. Immutable after construction; safe to share
// across threads.
class SdScm {
 public:
  SdScm() = default;
  SdScm(CausalGraph graph, std::vector<SequenceVariable> variables, ScorerPtr scorer,
        VariationId variation, std::uint64_t master_seed);

  const CausalGraph& graph() const { return graph_; }
  const ScorerPtr& scorer() const { return scorer_; }
  const std::vector<std::string>& order() const { return order_; }
  const VariationId& variation() const { return variation_; }
  std::uint64_t master_seed() const { return master_seed_; }

  const SequenceVariable& variable(const std::string& name) const;
  const SequenceVariable& variable_at(std::size_t order_position) const;

  bool has_variable(const std::string& name) const;
  std::size_t order_index(const std::string& name) const;  // position in the topological order

  // Positions (in the topological order) of the parents of the variable at
  // `order_position`, sorted ascending, i.e. parents in topological order.
  const std::vector<std::size_t>& parent_positions(std::size_t order_position) const;

  std::size_t variable_count() const { return order_.size(); }

 private:
  CausalGraph graph_;
  std::unordered_map<std::string, SequenceVariable> variables_;
  ScorerPtr scorer_;
  std::vector<std::string> order_;
  VariationId variation_;
  std::uint64_t master_seed_ = 0;

  std::unordered_map<std::string, std::size_t> order_index_;
  std::vector<std::vector<std::size_t>> parent_positions_;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

// Checks every model invariant: graph structure, acyclicity, the
// endogenous-into-exogenous prohibition, variable/node agreement, per-variable
// invariants, and consistency of the stored topological order. Violations are
// data, not failures.
ValidationReport validate(const SdScm& scm);

}  // namespace seqscm

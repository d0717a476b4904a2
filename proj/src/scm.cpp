#include "seqscm/scm.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace seqscm {

SdScm::SdScm(CausalGraph graph, std::vector<SequenceVariable> variables, ScorerPtr scorer,
             VariationId variation, std::uint64_t master_seed)
    : graph_(std::move(graph)),
      scorer_(std::move(scorer)),
      variation_(std::move(variation)),
      master_seed_(master_seed) {
  for (SequenceVariable& v : variables) {
    std::string name = v.name;
    variables_.emplace(std::move(name), std::move(v));
  }
  try {
    order_ = topological_order(graph_);
  } catch (const GraphError&) {
    // Leave the order empty; validate() reports the cycle as a violation.
    order_.clear();
  }
  for (std::size_t i = 0; i < order_.size(); ++i) {
    order_index_.emplace(order_[i], i);
  }
  parent_positions_.resize(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) {
    for (const Edge& e : graph_.edges()) {
      if (e.child == order_[i] && order_index_.count(e.parent)) {
        parent_positions_[i].push_back(order_index_.at(e.parent));
      }
    }
    std::sort(parent_positions_[i].begin(), parent_positions_[i].end());
  }
}

const SequenceVariable& SdScm::variable(const std::string& name) const {
  const auto it = variables_.find(name);
  if (it == variables_.end()) {
    throw GraphError("unknown variable: " + name);
  }
  return it->second;
}

const SequenceVariable& SdScm::variable_at(std::size_t order_position) const {
  return variable(order_.at(order_position));
}

bool SdScm::has_variable(const std::string& name) const { return variables_.count(name) > 0; }

std::size_t SdScm::order_index(const std::string& name) const {
  const auto it = order_index_.find(name);
  if (it == order_index_.end()) {
    throw GraphError("unknown variable: " + name);
  }
  return it->second;
}

const std::vector<std::size_t>& SdScm::parent_positions(std::size_t order_position) const {
  return parent_positions_.at(order_position);
}

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const std::string& v : violations) {
    out << v << "\n";
  }
  return out.str();
}

ValidationReport validate(const SdScm& scm) {
  ValidationReport report;
  auto& out = report.violations;

  const CausalGraph& graph = scm.graph();
  for (std::string& v : graph.structural_violations()) {
    out.push_back(std::move(v));
  }

  bool acyclic = true;
  try {
    topological_order(graph);
  } catch (const GraphError& e) {
    acyclic = false;
    out.push_back(e.what());
  }

  // Node set and variable set must agree.
  std::set<std::string> node_set(graph.nodes().begin(), graph.nodes().end());
  for (const std::string& node : graph.nodes()) {
    if (!scm.has_variable(node)) {
      out.push_back("node '" + node + "' has no variable definition");
    }
  }
  for (const std::string& name : scm.order()) {
    if (!node_set.count(name)) {
      out.push_back("variable '" + name + "' is not a declared node");
    }
  }

  // Abduction fixes all exogenous values, so an endogenous variable may not
  // feed an exogenous one.
  for (const Edge& e : graph.edges()) {
    if (!scm.has_variable(e.parent) || !scm.has_variable(e.child)) {
      continue;
    }
    if (scm.variable(e.parent).kind == VariableKind::Endogenous &&
        scm.variable(e.child).kind == VariableKind::Exogenous) {
      out.push_back("edge from endogenous '" + e.parent + "' into exogenous '" + e.child +
                    "' is not allowed");
    }
  }

  for (const std::string& node : graph.nodes()) {
    if (!scm.has_variable(node)) {
      continue;
    }
    for (std::string& v : scm.variable(node).violations()) {
      out.push_back(std::move(v));
    }
  }

  if (!scm.scorer()) {
    out.push_back("model has no scorer bound");
  }

  // Stored order must be a permutation of the nodes consistent with the graph.
  if (acyclic) {
    std::set<std::string> order_set(scm.order().begin(), scm.order().end());
    if (order_set != node_set || scm.order().size() != graph.nodes().size()) {
      out.push_back("topological order is not a permutation of the nodes");
    } else {
      for (const Edge& e : graph.edges()) {
        if (!order_set.count(e.parent) || !order_set.count(e.child)) {
          continue;  // already reported as a structural violation
        }
        if (scm.order_index(e.parent) >= scm.order_index(e.child)) {
          out.push_back("topological order places '" + e.child + "' before its parent '" +
                        e.parent + "'");
        }
      }
    }
  }

  return report;
}

}  // namespace seqscm

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "seqscm/error.hpp"

namespace seqscm {

struct Edge {
  std::string parent;
  std::string child;

  bool operator==(const Edge&) const = default;
};

// Directed graph over named nodes. Node declaration order is part of the
// model: it breaks ties in the topological order.
class CausalGraph {
 public:
  CausalGraph() = default;
  CausalGraph(std::vector<std::string> nodes, std::vector<Edge> edges);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_node(const std::string& name) const;
  std::size_t node_index(const std::string& name) const;  // throws GraphError if unknown

  // Parents/children in declaration order.
  std::vector<std::string> parents(const std::string& name) const;
  std::vector<std::string> children(const std::string& name) const;

  // Structural problems: unknown edge endpoints, self-loops, duplicate edges.
  // Cycles are reported by topological_order. Empty means structurally sound.
  std::vector<std::string> structural_violations() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Kahn's algorithm with ties broken by node declaration order. Deterministic.
// Throws GraphError naming the smallest strongly connected set on a cycle.
std::vector<std::string> topological_order(const CausalGraph& graph);

// Nodes reachable from `node` via directed paths, excluding `node`.
// Declaration order.
std::vector<std::string> descendants(const CausalGraph& graph, const std::string& node);

// All nodes not reachable from `node`, excluding `node` itself.
// Declaration order.
std::vector<std::string> non_descendants(const CausalGraph& graph, const std::string& node);

}  // namespace seqscm

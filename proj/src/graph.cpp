#include "seqscm/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

namespace seqscm {

CausalGraph::CausalGraph(std::vector<std::string> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    index_.emplace(nodes_[i], i);
  }
}

bool CausalGraph::has_node(const std::string& name) const { return index_.count(name) > 0; }

std::size_t CausalGraph::node_index(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw GraphError("unknown node: " + name);
  }
  return it->second;
}

std::vector<std::string> CausalGraph::parents(const std::string& name) const {
  node_index(name);
  std::vector<std::string> out;
  for (const std::string& node : nodes_) {
    for (const Edge& e : edges_) {
      if (e.child == name && e.parent == node) {
        out.push_back(node);
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> CausalGraph::children(const std::string& name) const {
  node_index(name);
  std::vector<std::string> out;
  for (const std::string& node : nodes_) {
    for (const Edge& e : edges_) {
      if (e.parent == name && e.child == node) {
        out.push_back(node);
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> CausalGraph::structural_violations() const {
  std::vector<std::string> out;
  {
    std::set<std::string> seen;
    for (const std::string& node : nodes_) {
      if (!seen.insert(node).second) {
        out.push_back("duplicate node declaration: " + node);
      }
    }
  }
  std::set<std::pair<std::string, std::string>> seen_edges;
  for (const Edge& e : edges_) {
    if (!has_node(e.parent)) {
      out.push_back("edge references undeclared parent: " + e.parent);
    }
    if (!has_node(e.child)) {
      out.push_back("edge references undeclared child: " + e.child);
    }
    if (e.parent == e.child) {
      out.push_back("self-loop on node: " + e.parent);
    }
    if (!seen_edges.insert({e.parent, e.child}).second) {
      out.push_back("duplicate edge: " + e.parent + " -> " + e.child);
    }
  }
  return out;
}

namespace {

// Tarjan's strongly connected components, used only to give a useful cycle
// message.
class SccFinder {
 public:
  explicit SccFinder(const CausalGraph& graph) : graph_(graph) {
    const std::size_t n = graph.nodes().size();
    adjacency_.resize(n);
    for (const Edge& e : graph.edges()) {
      if (graph.has_node(e.parent) && graph.has_node(e.child)) {
        adjacency_[graph.node_index(e.parent)].push_back(graph.node_index(e.child));
      }
    }
    index_.assign(n, kUnvisited);
    low_.assign(n, 0);
    on_stack_.assign(n, false);
  }

  std::vector<std::vector<std::size_t>> cyclic_components() {
    for (std::size_t v = 0; v < adjacency_.size(); ++v) {
      if (index_[v] == kUnvisited) {
        visit(v);
      }
    }
    return cyclic_;
  }

 private:
  static constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);

  void visit(std::size_t v) {
    index_[v] = low_[v] = counter_++;
    stack_.push_back(v);
    on_stack_[v] = true;
    for (std::size_t w : adjacency_[v]) {
      if (index_[w] == kUnvisited) {
        visit(w);
        low_[v] = std::min(low_[v], low_[w]);
      } else if (on_stack_[w]) {
        low_[v] = std::min(low_[v], index_[w]);
      }
    }
    if (low_[v] == index_[v]) {
      std::vector<std::size_t> component;
      std::size_t w;
      do {
        w = stack_.back();
        stack_.pop_back();
        on_stack_[w] = false;
        component.push_back(w);
      } while (w != v);
      const bool self_loop =
          component.size() == 1 &&
          std::find(adjacency_[v].begin(), adjacency_[v].end(), v) != adjacency_[v].end();
      if (component.size() > 1 || self_loop) {
        std::sort(component.begin(), component.end());
        cyclic_.push_back(std::move(component));
      }
    }
  }

  const CausalGraph& graph_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::size_t> index_;
  std::vector<std::size_t> low_;
  std::vector<bool> on_stack_;
  std::vector<std::size_t> stack_;
  std::size_t counter_ = 0;
  std::vector<std::vector<std::size_t>> cyclic_;
};

}  // namespace

std::vector<std::string> topological_order(const CausalGraph& graph) {
  const std::vector<std::string>& nodes = graph.nodes();
  const std::size_t n = nodes.size();

  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> children_of(n);
  for (const Edge& e : graph.edges()) {
    const std::size_t p = graph.node_index(e.parent);
    const std::size_t c = graph.node_index(e.child);
    children_of[p].push_back(c);
    ++indegree[c];
  }

  std::vector<std::string> order;
  order.reserve(n);
  std::vector<bool> emitted(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t chosen = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!emitted[v] && indegree[v] == 0) {
        chosen = v;
        break;
      }
    }
    if (chosen == n) {
      break;
    }
    emitted[chosen] = true;
    order.push_back(nodes[chosen]);
    for (std::size_t c : children_of[chosen]) {
      --indegree[c];
    }
  }

  if (order.size() != n) {
    SccFinder finder(graph);
    std::ostringstream message;
    message << "graph contains a cycle";
    const auto components = finder.cyclic_components();
    if (!components.empty()) {
      message << " among {";
      for (std::size_t i = 0; i < components[0].size(); ++i) {
        if (i) message << ", ";
        message << nodes[components[0][i]];
      }
      message << "}";
    }
    throw GraphError(message.str());
  }
  return order;
}

std::vector<std::string> descendants(const CausalGraph& graph, const std::string& node) {
  const std::size_t start = graph.node_index(node);
  const std::size_t n = graph.nodes().size();
  std::vector<std::vector<std::size_t>> children_of(n);
  for (const Edge& e : graph.edges()) {
    children_of[graph.node_index(e.parent)].push_back(graph.node_index(e.child));
  }
  std::vector<bool> reached(n, false);
  std::vector<std::size_t> stack{start};
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t c : children_of[v]) {
      if (!reached[c]) {
        reached[c] = true;
        stack.push_back(c);
      }
    }
  }
  std::vector<std::string> out;
  for (std::size_t v = 0; v < n; ++v) {
    if (reached[v] && v != start) {
      out.push_back(graph.nodes()[v]);
    }
  }
  return out;
}

std::vector<std::string> non_descendants(const CausalGraph& graph, const std::string& node) {
  const std::vector<std::string> desc = descendants(graph, node);
  std::set<std::string> excluded(desc.begin(), desc.end());
  excluded.insert(node);
  std::vector<std::string> out;
  for (const std::string& v : graph.nodes()) {
    if (!excluded.count(v)) {
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace seqscm

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace agvq {

using NodeId = std::uint32_t;
using AgvId = std::uint32_t;

struct PlantNode {
  NodeId id = 0;
  double x = 0.0;  // meters
  double y = 0.0;  // meters
};

struct PlantEdge {
  NodeId a = 0;
  NodeId b = 0;
  double length_m = 0.0;
};

inline std::pair<NodeId, NodeId> ordered_pair(NodeId a, NodeId b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

/// Undirected roadmap the AGVs move on. Immutable once built; adjacency lists
/// are kept sorted by node id so that path tie-breaking is reproducible.
class PlantGraph {
 public:
  PlantGraph() = default;
  PlantGraph(std::vector<PlantNode> nodes, std::vector<PlantEdge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    std::sort(nodes_.begin(), nodes_.end(),
              [](const PlantNode& l, const PlantNode& r) { return l.id < r.id; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) node_index_[nodes_[i].id] = i;
    for (const PlantEdge& e : edges_) {
      if (!has_node(e.a) || !has_node(e.b) || e.a == e.b) continue;  // validated elsewhere
      adjacency_[e.a].push_back(e.b);
      adjacency_[e.b].push_back(e.a);
      edge_length_[ordered_pair(e.a, e.b)] = e.length_m;
    }
    for (auto& [id, nbrs] : adjacency_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
  }

  const std::vector<PlantNode>& nodes() const { return nodes_; }
  const std::vector<PlantEdge>& edges() const { return edges_; }

  bool has_node(NodeId id) const { return node_index_.count(id) != 0; }
  const PlantNode& node(NodeId id) const { return nodes_.at(node_index_.at(id)); }

  bool has_edge(NodeId a, NodeId b) const { return edge_length_.count(ordered_pair(a, b)) != 0; }
  double edge_length(NodeId a, NodeId b) const { return edge_length_.at(ordered_pair(a, b)); }

  /// Neighbors sorted ascending by id; empty for isolated/unknown nodes.
  const std::vector<NodeId>& neighbors(NodeId id) const {
    static const std::vector<NodeId> kEmpty;
    auto it = adjacency_.find(id);
    return it == adjacency_.end() ? kEmpty : it->second;
  }

  std::size_t degree(NodeId id) const { return neighbors(id).size(); }

 private:
  std::vector<PlantNode> nodes_;
  std::vector<PlantEdge> edges_;
  std::unordered_map<NodeId, std::size_t> node_index_;
  std::unordered_map<NodeId, std::vector<NodeId>> adjacency_;
  std::map<std::pair<NodeId, NodeId>, double> edge_length_;
};

struct Task {
  NodeId origin = 0;
  NodeId destination = 0;
  friend bool operator==(const Task&, const Task&) = default;
  friend auto operator<=>(const Task&, const Task&) = default;
};

/// One vehicle. task_queue is consumed cyclically: arriving at the current
/// task's destination makes the next task active in the same step.
struct AgvState {
  AgvId id = 0;
  NodeId node = 0;
  double speed_mps = 0.5;
  std::vector<Task> task_queue;
  std::size_t task_cursor = 0;

  const Task& current_task() const { return task_queue.at(task_cursor % task_queue.size()); }
  void advance_task() { task_cursor = (task_cursor + 1) % task_queue.size(); }
};

struct ControlParams {
  int period_steps = 1;    // steps committed per planning round (houses T)
  int horizon_steps = 2;   // planning lookahead (houses H)
  double lambda1 = 0.0;    // one-route penalty weight; 0 means "use default"
  double lambda2 = 0.0;    // collision penalty weight; 0 means "use default"
  bool lambdas_set = false;
  int samples = 1000;      // solver reads per planning round
  std::uint64_t seed = 42;
  int sim_duration_steps = 1000;
};

struct Scenario {
  PlantGraph graph;
  std::vector<AgvState> agvs;
  ControlParams params;
  /// Edges with baseline right-of-way at intersections (the plant's outer loop).
  std::set<std::pair<NodeId, NodeId>> circumference;
};

/// Default penalty weight 2*horizon*N + 1: exceeds any achievable route
/// reward, so constraint violations can never pay off.
inline double default_penalty_weight(int horizon_steps, std::size_t agv_count) {
  return 2.0 * static_cast<double>(horizon_steps) * static_cast<double>(agv_count) + 1.0;
}

struct Violation {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string code;
  std::string message;
};

/// Scenario parsing failure; `where` names the offending section or field.
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(const std::string& where, const std::string& what)
      : std::runtime_error("scenario parse error at '" + where + "': " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

Scenario load_scenario(const std::string& text);
std::string save_scenario(const Scenario& s);
std::vector<Violation> validate_scenario(const Scenario& s);

inline bool is_valid(const std::vector<Violation>& violations) {
  return std::none_of(violations.begin(), violations.end(), [](const Violation& v) {
    return v.severity == Violation::Severity::error;
  });
}

}  // namespace agvq

#include "agvq/detail/plant_io.hpp"

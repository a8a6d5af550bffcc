#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "agvq/plant.hpp"

namespace agvq {

struct Path {
  std::vector<NodeId> nodes;
  std::size_t hop_count() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

/// A time-indexed resource: either an undirected edge (so head-on swaps
/// conflict) or a single node (occupied by a stationary or arriving AGV).
struct Resource {
  enum class Kind : std::uint8_t { node, edge };
  Kind kind = Kind::node;
  NodeId a = 0;
  NodeId b = 0;  // == a for node resources

  static Resource node_at(NodeId n) { return {Kind::node, n, n}; }
  static Resource edge_between(NodeId x, NodeId y) {
    auto [lo, hi] = ordered_pair(x, y);
    return {Kind::edge, lo, hi};
  }

  friend bool operator==(const Resource&, const Resource&) = default;
  friend auto operator<=>(const Resource&, const Resource&) = default;
};

/// (step, resource) pair; steps are 1-based within the planning horizon.
struct StepMark {
  int t = 0;
  Resource resource;
  friend bool operator==(const StepMark&, const StepMark&) = default;
  friend auto operator<=>(const StepMark&, const StepMark&) = default;
};

/// One selectable route for one AGV in one planning round: a prefix of the
/// task's shortest path, plus its resource usage over the horizon.
///
/// `occupancy` is the paper-style tensor F: exactly one mark per step (the
/// traversed edge while moving, the final node afterwards). It is what the
/// QUBO collision term and the solver-level feasibility notion see.
///
/// `claims` additionally marks the node the AGV stands on at every step, so
/// that a route entering a node where another AGV parks is recognized as a
/// physical conflict. Plan filtering and the simulation safety checks use
/// claims, never occupancy alone.
struct RouteCandidate {
  std::uint32_t mu = 0;
  AgvId agv = 0;
  std::vector<NodeId> nodes;
  int d = 0;  // hop length in steps
  std::vector<StepMark> occupancy;
  std::vector<StepMark> claims;

  /// Node occupied at integer step t (0 = start of the round).
  NodeId position_at(int t) const {
    const int idx = t < d ? t : d;
    return nodes.at(static_cast<std::size_t>(idx < 0 ? 0 : idx));
  }
};

/// Minimum-hop path with a deterministic tie-break: among equal-hop paths the
/// lexicographically smallest node sequence is returned.
inline Path shortest_path(const PlantGraph& g, NodeId origin, NodeId dest) {
  if (!g.has_node(origin) || !g.has_node(dest))
    throw std::invalid_argument("shortest_path: unknown node " +
                                std::to_string(g.has_node(origin) ? dest : origin));
  // Hop distances to `dest`, then a greedy forward walk picking the smallest
  // neighbor id that still lies on some shortest path.
  std::map<NodeId, std::size_t> dist;
  dist[dest] = 0;
  std::deque<NodeId> queue{dest};
  while (!queue.empty()) {
    NodeId cur = queue.front();
    queue.pop_front();
    for (NodeId nb : g.neighbors(cur)) {
      if (!dist.count(nb)) {
        dist[nb] = dist[cur] + 1;
        queue.push_back(nb);
      }
    }
  }
  auto it = dist.find(origin);
  if (it == dist.end())
    throw std::invalid_argument("shortest_path: destination " + std::to_string(dest) +
                                " unreachable from origin " + std::to_string(origin));
  Path path;
  path.nodes.push_back(origin);
  NodeId cur = origin;
  std::size_t remaining = it->second;
  while (remaining > 0) {
    for (NodeId nb : g.neighbors(cur)) {  // neighbors are sorted ascending
      auto d_nb = dist.find(nb);
      if (d_nb != dist.end() && d_nb->second == remaining - 1) {
        cur = nb;
        break;
      }
    }
    path.nodes.push_back(cur);
    --remaining;
  }
  return path;
}

/// Occupancy tensor F for a route prefix: step t in 1..d marks the traversed
/// edge {nodes[t-1], nodes[t]}; steps d+1..horizon mark the final node.
inline std::vector<StepMark> occupancy(const std::vector<NodeId>& nodes, int horizon) {
  const int d = static_cast<int>(nodes.size()) - 1;
  std::vector<StepMark> marks;
  marks.reserve(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    if (t <= d)
      marks.push_back({t, Resource::edge_between(nodes[t - 1], nodes[t])});
    else
      marks.push_back({t, Resource::node_at(nodes.back())});
  }
  return marks;
}

inline std::vector<StepMark> occupancy(const RouteCandidate& c, int horizon) {
  return occupancy(c.nodes, horizon);
}

/// Collision-check view: occupancy plus a node mark for every step the AGV
/// stands on a node it just entered. Guarantees a mover cannot pass through
/// or stop on a node another AGV occupies at the same step.
inline std::vector<StepMark> claim_marks(const std::vector<NodeId>& nodes, int horizon) {
  const int d = static_cast<int>(nodes.size()) - 1;
  std::vector<StepMark> marks = occupancy(nodes, horizon);
  for (int t = 1; t <= d && t <= horizon; ++t)
    marks.push_back({t, Resource::node_at(nodes[static_cast<std::size_t>(t)])});
  std::sort(marks.begin(), marks.end());
  return marks;
}

struct RouteDbKey {
  NodeId node = 0;
  Task task;
  friend bool operator==(const RouteDbKey&, const RouteDbKey&) = default;
  friend auto operator<=>(const RouteDbKey&, const RouteDbKey&) = default;
};

/// Precomputed route prefixes per (current node, task). For every node on a
/// task's stored shortest path the database holds the stop template plus one
/// template per prefix length 1..min(remaining hops, horizon).
class RouteDatabase {
 public:
  RouteDatabase() = default;
  RouteDatabase(const PlantGraph& g, const std::vector<Task>& tasks, int horizon)
      : horizon_(horizon) {
    for (const Task& task : tasks) {
      Path path = shortest_path(g, task.origin, task.destination);
      for (std::size_t j = 0; j < path.nodes.size(); ++j) {
        RouteDbKey key{path.nodes[j], task};
        if (entries_.count(key)) continue;  // duplicate task in the list
        const std::size_t remaining = path.nodes.size() - 1 - j;
        const std::size_t max_len = std::min<std::size_t>(remaining, static_cast<std::size_t>(horizon));
        std::vector<std::vector<NodeId>> templates;
        for (std::size_t len = 0; len <= max_len; ++len)
          templates.emplace_back(path.nodes.begin() + static_cast<std::ptrdiff_t>(j),
                                 path.nodes.begin() + static_cast<std::ptrdiff_t>(j + len + 1));
        entries_.emplace(std::move(key), std::move(templates));
      }
    }
  }

  int horizon() const { return horizon_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(NodeId node, const Task& task) const { return entries_.count({node, task}) != 0; }

  const std::vector<std::vector<NodeId>>& templates(NodeId node, const Task& task) const {
    auto it = entries_.find({node, task});
    if (it == entries_.end())
      throw std::out_of_range("route database has no entry for node " + std::to_string(node) +
                              ", task " + std::to_string(task.origin) + "->" +
                              std::to_string(task.destination) +
                              " (rebuild the database when tasks change)");
    return it->second;
  }

  /// Next hop along the stored path, or the node itself when already there.
  NodeId next_hop(NodeId node, const Task& task) const {
    const auto& tpl = templates(node, task);
    return tpl.size() > 1 ? tpl[1][1] : node;
  }

  const std::map<RouteDbKey, std::vector<std::vector<NodeId>>>& entries() const { return entries_; }

 private:
  int horizon_ = 0;
  std::map<RouteDbKey, std::vector<std::vector<NodeId>>> entries_;
};

inline RouteDatabase build_route_db(const PlantGraph& g, const std::vector<Task>& tasks,
                                    int horizon) {
  return RouteDatabase(g, tasks, horizon);
}

/// Candidates for one AGV in the current round, mu = 0 (stop) upward.
inline std::vector<RouteCandidate> candidate_routes(const RouteDatabase& db, const AgvState& a,
                                                    int horizon) {
  const auto& templates = db.templates(a.node, a.current_task());
  std::vector<RouteCandidate> out;
  out.reserve(templates.size());
  for (std::size_t i = 0; i < templates.size(); ++i) {
    RouteCandidate c;
    c.mu = static_cast<std::uint32_t>(i);
    c.agv = a.id;
    c.nodes = templates[i];
    c.d = static_cast<int>(c.nodes.size()) - 1;
    c.occupancy = occupancy(c.nodes, horizon);
    c.claims = claim_marks(c.nodes, horizon);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace agvq

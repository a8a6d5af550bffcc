#pragma once

// Shared generators and independent oracles for the unit and acceptance
// suites. Everything here is deliberately written from first principles
// (adjacency fiddling, explicit BFS, direct constraint counting) so it stays
// independent of the library's own code paths.

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "agvq/control.hpp"
#include "agvq/plant.hpp"
#include "agvq/qubo.hpp"
#include "agvq/rng.hpp"
#include "agvq/routing.hpp"
#include "agvq/solvers.hpp"

namespace testutil {

using namespace agvq;

/// Random connected graph: a random spanning tree plus a few extra edges.
inline PlantGraph random_connected_graph(Rng& rng, std::size_t node_count, double extra_edges = 0.3) {
  std::vector<PlantNode> nodes;
  for (std::size_t i = 0; i < node_count; ++i)
    nodes.push_back({static_cast<NodeId>(i), static_cast<double>(i), 0.0});
  std::set<std::pair<NodeId, NodeId>> edge_set;
  std::vector<PlantEdge> edges;
  for (std::size_t i = 1; i < node_count; ++i) {
    const NodeId parent = static_cast<NodeId>(rng.next_below(i));
    edge_set.insert(ordered_pair(static_cast<NodeId>(i), parent));
  }
  const auto extra = static_cast<std::size_t>(extra_edges * static_cast<double>(node_count));
  for (std::size_t k = 0; k < extra; ++k) {
    const NodeId a = static_cast<NodeId>(rng.next_below(node_count));
    const NodeId b = static_cast<NodeId>(rng.next_below(node_count));
    if (a != b) edge_set.insert(ordered_pair(a, b));
  }
  for (const auto& [a, b] : edge_set) edges.push_back({a, b, 10.0});
  return PlantGraph(std::move(nodes), std::move(edges));
}

/// Breadth-first hop distance; the oracle for shortest_path optimality.
inline std::size_t bfs_distance(const PlantGraph& g, NodeId from, NodeId to) {
  std::map<NodeId, std::size_t> dist{{from, 0}};
  std::deque<NodeId> queue{from};
  while (!queue.empty()) {
    NodeId cur = queue.front();
    queue.pop_front();
    if (cur == to) return dist[cur];
    for (NodeId nb : g.neighbors(cur))
      if (!dist.count(nb)) {
        dist[nb] = dist[cur] + 1;
        queue.push_back(nb);
      }
  }
  return static_cast<std::size_t>(-1);
}

/// All minimum-hop paths between two nodes, by exhaustive DFS (small graphs).
inline std::vector<std::vector<NodeId>> all_shortest_paths(const PlantGraph& g, NodeId from,
                                                           NodeId to) {
  const std::size_t target = bfs_distance(g, from, to);
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> cur{from};
  std::set<NodeId> visited{from};
  auto dfs = [&](auto&& self, NodeId at) -> void {
    if (cur.size() - 1 > target) return;
    if (at == to) {
      if (cur.size() - 1 == target) out.push_back(cur);
      return;
    }
    for (NodeId nb : g.neighbors(at)) {
      if (visited.count(nb)) continue;
      visited.insert(nb);
      cur.push_back(nb);
      self(self, nb);
      cur.pop_back();
      visited.erase(nb);
    }
  };
  dfs(dfs, from);
  return out;
}

/// A random planning round generated through the real pipeline: random
/// graph, random distinct AGV placements, random reachable tasks.
struct RandomRound {
  PlantGraph graph;
  std::vector<AgvState> agvs;
  std::vector<std::vector<RouteCandidate>> candidates;
  int horizon = 2;
};

inline RandomRound random_round(Rng& rng, std::size_t min_agvs = 2, std::size_t max_agvs = 8,
                                int horizon = 2) {
  RandomRound round;
  round.horizon = horizon;
  const std::size_t node_count = 8 + rng.next_below(10);
  round.graph = random_connected_graph(rng, node_count);
  const std::size_t agv_count = min_agvs + rng.next_below(max_agvs - min_agvs + 1);
  std::vector<NodeId> starts;
  for (const PlantNode& n : round.graph.nodes()) starts.push_back(n.id);
  // Fisher-Yates prefix shuffle for distinct start nodes.
  for (std::size_t i = 0; i < std::min(agv_count, starts.size()); ++i) {
    const std::size_t j = i + rng.next_below(starts.size() - i);
    std::swap(starts[i], starts[j]);
  }
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < std::min(agv_count, starts.size()); ++i) {
    const NodeId origin = starts[i];
    NodeId dest = origin;
    for (int attempt = 0; attempt < 50 && dest == origin; ++attempt)
      dest = starts[(i + 1 + rng.next_below(starts.size() - 1)) % starts.size()];
    AgvState a;
    a.id = static_cast<AgvId>(i);
    a.node = origin;
    a.task_queue = {{origin, dest}, {dest, origin}};
    tasks.push_back(a.task_queue[0]);
    tasks.push_back(a.task_queue[1]);
    round.agvs.push_back(std::move(a));
  }
  const RouteDatabase db(round.graph, tasks, horizon);
  for (const AgvState& a : round.agvs) round.candidates.push_back(candidate_routes(db, a, horizon));
  return round;
}

inline Assignment random_assignment(Rng& rng, std::size_t n) {
  Assignment a;
  a.bits.resize(n);
  for (auto& b : a.bits) b = rng.next_bool() ? 1 : 0;
  return a;
}

/// Direct constraint check on the occupancy (F) level: one-hot per AGV and
/// no (step, resource) pair claimed twice. Counted from scratch.
inline bool f_level_feasible(const std::vector<std::vector<RouteCandidate>>& candidates,
                             const Assignment& a) {
  std::size_t k = 0;
  std::map<StepMark, int> usage;
  for (const auto& list : candidates) {
    int selected = 0;
    for (const auto& c : list) {
      if (a.bits.at(k)) {
        ++selected;
        for (const StepMark& m : c.occupancy) ++usage[m];
      }
      ++k;
    }
    if (selected != 1) return false;
  }
  for (const auto& [mark, count] : usage)
    if (count > 1) return false;
  return true;
}

/// Same check on the claims level (what plan filtering must enforce).
inline bool claims_level_feasible(const std::vector<std::vector<RouteCandidate>>& candidates,
                                  const Assignment& a) {
  std::size_t k = 0;
  std::map<StepMark, int> usage;
  for (const auto& list : candidates) {
    int selected = 0;
    for (const auto& c : list) {
      if (a.bits.at(k)) {
        ++selected;
        for (const StepMark& m : c.claims) ++usage[m];
      }
      ++k;
    }
    if (selected != 1) return false;
  }
  for (const auto& [mark, count] : usage)
    if (count > 1) return false;
  return true;
}

inline std::size_t total_variables(const std::vector<std::vector<RouteCandidate>>& candidates) {
  std::size_t n = 0;
  for (const auto& list : candidates) n += list.size();
  return n;
}

inline std::string scenario_dir() { return AGVQ_SCENARIO_DIR; }

}  // namespace testutil

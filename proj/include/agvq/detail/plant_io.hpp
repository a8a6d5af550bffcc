#pragma once

// Scenario document I/O and validation. Kept out of plant.hpp so the type
// definitions stay readable; include via plant.hpp only.

#include <deque>
#include <sstream>

#include "json.hpp"

namespace agvq {
namespace detail {

using nlohmann::json;

inline const json& require(const json& parent, const char* key, const std::string& where) {
  auto it = parent.find(key);
  if (it == parent.end()) throw ScenarioParseError(where, "missing required section");
  return *it;
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioParseError(where + "." + key, "missing required field");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ScenarioParseError(where + "." + key, e.what());
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : it->get<T>();
}

}  // namespace detail

inline Scenario load_scenario(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioParseError("document", e.what());
  }

  const json& graph = detail::require(doc, "graph", "graph");
  const json& nodes_json = detail::require(graph, "nodes", "graph.nodes");
  const json& edges_json = detail::require(graph, "edges", "graph.edges");

  std::vector<PlantNode> nodes;
  for (std::size_t i = 0; i < nodes_json.size(); ++i) {
    const std::string where = "graph.nodes[" + std::to_string(i) + "]";
    const json& n = nodes_json.at(i);
    nodes.push_back({detail::field<NodeId>(n, "id", where), detail::field<double>(n, "x", where),
                     detail::field<double>(n, "y", where)});
  }
  std::vector<PlantEdge> edges;
  for (std::size_t i = 0; i < edges_json.size(); ++i) {
    const std::string where = "graph.edges[" + std::to_string(i) + "]";
    const json& e = edges_json.at(i);
    edges.push_back({detail::field<NodeId>(e, "a", where), detail::field<NodeId>(e, "b", where),
                     detail::field<double>(e, "length_m", where)});
  }

  Scenario s;
  s.graph = PlantGraph(std::move(nodes), std::move(edges));

  if (graph.contains("circumference")) {
    for (const auto& pair : graph.at("circumference")) {
      if (!pair.is_array() || pair.size() != 2)
        throw ScenarioParseError("graph.circumference", "entries must be [a, b] node pairs");
      s.circumference.insert(ordered_pair(pair.at(0).get<NodeId>(), pair.at(1).get<NodeId>()));
    }
  }

  const json& agvs_json = detail::require(doc, "agvs", "agvs");
  for (std::size_t i = 0; i < agvs_json.size(); ++i) {
    const std::string where = "agvs[" + std::to_string(i) + "]";
    const json& a = agvs_json.at(i);
    AgvState agv;
    agv.id = detail::field<AgvId>(a, "id", where);
    agv.node = detail::field<NodeId>(a, "start_node", where);
    agv.speed_mps = detail::field_or<double>(a, "speed_mps", 0.5);
    const json& tasks = detail::require(a, "tasks", where + ".tasks");
    for (const auto& t : tasks) {
      if (!t.is_array() || t.size() != 2)
        throw ScenarioParseError(where + ".tasks", "tasks must be [origin, destination] pairs");
      agv.task_queue.push_back({t.at(0).get<NodeId>(), t.at(1).get<NodeId>()});
    }
    s.agvs.push_back(std::move(agv));
  }

  ControlParams p;
  if (doc.contains("params")) {
    const json& pj = doc.at("params");
    p.period_steps = detail::field_or<int>(pj, "period_steps", 1);
    p.horizon_steps = detail::field_or<int>(pj, "horizon_steps", 2);
    p.samples = detail::field_or<int>(pj, "samples", 1000);
    p.seed = detail::field_or<std::uint64_t>(pj, "seed", 42);
    p.sim_duration_steps = detail::field_or<int>(pj, "sim_duration_steps", 1000);
    if (pj.contains("lambda1") || pj.contains("lambda2")) {
      const double fallback = default_penalty_weight(p.horizon_steps, s.agvs.size());
      p.lambda1 = detail::field_or<double>(pj, "lambda1", fallback);
      p.lambda2 = detail::field_or<double>(pj, "lambda2", fallback);
      p.lambdas_set = true;
    }
  }
  if (!p.lambdas_set) {
    p.lambda1 = p.lambda2 = default_penalty_weight(p.horizon_steps, s.agvs.size());
    p.lambdas_set = true;
  }
  s.params = p;
  return s;
}

inline std::string save_scenario(const Scenario& s) {
  using detail::json;
  json doc;
  json nodes = json::array();
  for (const PlantNode& n : s.graph.nodes()) nodes.push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}});
  json edges = json::array();
  for (const PlantEdge& e : s.graph.edges())
    edges.push_back({{"a", e.a}, {"b", e.b}, {"length_m", e.length_m}});
  doc["graph"]["nodes"] = std::move(nodes);
  doc["graph"]["edges"] = std::move(edges);
  if (!s.circumference.empty()) {
    json circ = json::array();
    for (const auto& [a, b] : s.circumference) circ.push_back({a, b});
    doc["graph"]["circumference"] = std::move(circ);
  }
  json agvs = json::array();
  for (const AgvState& a : s.agvs) {
    json tasks = json::array();
    for (const Task& t : a.task_queue) tasks.push_back({t.origin, t.destination});
    agvs.push_back({{"id", a.id},
                    {"start_node", a.node},
                    {"speed_mps", a.speed_mps},
                    {"tasks", std::move(tasks)}});
  }
  doc["agvs"] = std::move(agvs);
  doc["params"] = {{"period_steps", s.params.period_steps},
                   {"horizon_steps", s.params.horizon_steps},
                   {"lambda1", s.params.lambda1},
                   {"lambda2", s.params.lambda2},
                   {"samples", s.params.samples},
                   {"seed", s.params.seed},
                   {"sim_duration_steps", s.params.sim_duration_steps}};
  return doc.dump(2) + "\n";
}

inline std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  auto error = [&out](const std::string& code, const std::string& msg) {
    out.push_back({Violation::Severity::error, code, msg});
  };
  auto warning = [&out](const std::string& code, const std::string& msg) {
    out.push_back({Violation::Severity::warning, code, msg});
  };

  std::set<NodeId> seen_nodes;
  for (const PlantNode& n : s.graph.nodes()) {
    if (!seen_nodes.insert(n.id).second)
      error("duplicate-node", "node id " + std::to_string(n.id) + " appears more than once");
  }
  double min_len = 0.0, max_len = 0.0;
  bool first_edge = true;
  for (const PlantEdge& e : s.graph.edges()) {
    for (NodeId end : {e.a, e.b}) {
      if (!seen_nodes.count(end))
        error("dangling-endpoint",
              "edge {" + std::to_string(e.a) + "," + std::to_string(e.b) +
                  "} references unknown node " + std::to_string(end));
    }
    if (e.a == e.b)
      error("self-loop", "self-loop edge at node " + std::to_string(e.a));
    if (e.length_m <= 0.0)
      error("nonpositive-length", "edge {" + std::to_string(e.a) + "," + std::to_string(e.b) +
                                      "} has nonpositive length");
    if (first_edge) {
      min_len = max_len = e.length_m;
      first_edge = false;
    } else {
      min_len = std::min(min_len, e.length_m);
      max_len = std::max(max_len, e.length_m);
    }
  }
  // Planning assumes one edge traversal per discrete step; uneven lengths
  // break that unit-step time model.
  if (!first_edge && min_len > 0.0 && (max_len - min_len) / min_len > 0.01)
    warning("nonuniform-lengths", "edge lengths differ by more than 1%; the unit-step time model "
                                  "treats every edge as one step");

  if (s.agvs.empty()) error("no-agvs", "scenario must contain at least one AGV");

  // Undirected BFS reachability from `from`.
  auto reachable = [&s](NodeId from, NodeId to) {
    if (!s.graph.has_node(from) || !s.graph.has_node(to)) return false;
    std::set<NodeId> visited{from};
    std::deque<NodeId> queue{from};
    while (!queue.empty()) {
      NodeId cur = queue.front();
      queue.pop_front();
      if (cur == to) return true;
      for (NodeId nb : s.graph.neighbors(cur))
        if (visited.insert(nb).second) queue.push_back(nb);
    }
    return false;
  };

  std::set<NodeId> starts;
  std::set<AgvId> agv_ids;
  for (const AgvState& a : s.agvs) {
    const std::string who = "agv " + std::to_string(a.id);
    if (!agv_ids.insert(a.id).second) error("duplicate-agv-id", who + ": id already used");
    if (!s.graph.has_node(a.node)) error("unknown-start", who + ": start node does not exist");
    if (!starts.insert(a.node).second)
      error("duplicate-start", who + ": start node " + std::to_string(a.node) +
                                   " already occupied by another AGV");
    if (a.speed_mps <= 0.0) error("nonpositive-speed", who + ": speed must be > 0");
    if (a.task_queue.empty()) {
      error("empty-task-queue", who + ": task queue is empty");
      continue;
    }
    for (std::size_t i = 0; i < a.task_queue.size(); ++i) {
      const Task& t = a.task_queue[i];
      const std::string where = who + " task " + std::to_string(i);
      if (!s.graph.has_node(t.origin)) error("unknown-task-origin", where + ": unknown origin");
      if (!s.graph.has_node(t.destination))
        error("unknown-task-destination", where + ": unknown destination");
      else if (!reachable(t.origin, t.destination))
        error("unreachable-destination",
              where + ": destination " + std::to_string(t.destination) +
                  " unreachable from origin " + std::to_string(t.origin));
      // Cyclic consumption: each task must start where the previous one ended.
      const Task& prev = a.task_queue[(i + a.task_queue.size() - 1) % a.task_queue.size()];
      if (s.graph.has_node(t.origin) && s.graph.has_node(prev.destination) &&
          t.origin != prev.destination)
        error("broken-task-chain", where + ": origin " + std::to_string(t.origin) +
                                       " does not equal previous destination " +
                                       std::to_string(prev.destination));
    }
    if (s.graph.has_node(a.node) && a.node != a.task_queue.front().origin)
      error("start-off-task", who + ": start node must equal the first task's origin");
  }

  for (const auto& [a, b] : s.circumference) {
    if (!s.graph.has_edge(a, b))
      error("unknown-circumference-edge", "circumference pair {" + std::to_string(a) + "," +
                                              std::to_string(b) + "} is not a graph edge");
  }

  if (s.params.period_steps < 1) error("bad-period", "period_steps must be >= 1");
  if (s.params.horizon_steps < s.params.period_steps)
    error("bad-horizon", "horizon_steps must be >= period_steps");
  if (s.params.lambda1 < 0.0 || s.params.lambda2 < 0.0)
    error("negative-lambda", "penalty weights must be nonnegative");
  if (s.params.samples < 1) error("bad-samples", "samples must be >= 1");

  return out;
}

}  // namespace agvq

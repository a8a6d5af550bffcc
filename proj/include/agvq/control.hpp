#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agvq/plant.hpp"
#include "agvq/qubo.hpp"
#include "agvq/rng.hpp"
#include "agvq/routing.hpp"
#include "agvq/solvers.hpp"

namespace agvq {

/// One committed planning decision: exactly one candidate per AGV, claims
/// jointly conflict-free over the full horizon.
struct Plan {
  std::vector<RouteCandidate> choices;  // indexed like the AGV list
  int committed_steps = 1;
};

struct FeasiblePlan {
  Plan plan;
  double energy = 0.0;
  std::vector<std::uint8_t> bits;
};

namespace detail {

inline std::vector<std::size_t> candidate_offsets(
    const std::vector<std::vector<RouteCandidate>>& candidates) {
  std::vector<std::size_t> offset;
  offset.reserve(candidates.size());
  std::size_t n = 0;
  for (const auto& list : candidates) {
    offset.push_back(n);
    n += list.size();
  }
  offset.push_back(n);  // sentinel: total variable count
  return offset;
}

inline Plan all_stop_plan(const std::vector<std::vector<RouteCandidate>>& candidates) {
  Plan plan;
  for (const auto& list : candidates) {
    auto it = std::find_if(list.begin(), list.end(),
                           [](const RouteCandidate& c) { return c.d == 0; });
    if (it == list.end())
      throw std::logic_error("all_stop_plan: an AGV has no stop candidate");
    plan.choices.push_back(*it);
  }
  return plan;
}

}  // namespace detail

/// Keeps samples that select exactly one candidate per AGV and whose joint
/// claim marks never use one (step, resource) twice. Feasibility is checked
/// structurally on the claims, never via penalty energies, so a route
/// entering a node where another AGV parks is rejected even though the
/// penalty form cannot see that conflict.
inline std::vector<FeasiblePlan> filter_feasible(
    const SampleSet& ss, const std::vector<std::vector<RouteCandidate>>& candidates) {
  const auto offset = detail::candidate_offsets(candidates);
  const std::size_t n = offset.back();
  std::vector<FeasiblePlan> out;
  for (const SampleRecord& sample : ss.samples) {
    if (sample.assignment.bits.size() != n)
      throw std::invalid_argument("filter_feasible: sample length mismatch");
    Plan plan;
    bool one_hot = true;
    for (std::size_t i = 0; i < candidates.size() && one_hot; ++i) {
      int selected = 0;
      std::size_t chosen = 0;
      for (std::size_t mu = 0; mu < candidates[i].size(); ++mu) {
        if (sample.assignment.bits[offset[i] + mu]) {
          ++selected;
          chosen = mu;
        }
      }
      if (selected != 1)
        one_hot = false;
      else
        plan.choices.push_back(candidates[i][chosen]);
    }
    if (!one_hot) continue;
    std::set<StepMark> used;
    bool clash = false;
    for (const RouteCandidate& c : plan.choices) {
      for (const StepMark& m : c.claims)
        if (!used.insert(m).second) {
          clash = true;
          break;
        }
      if (clash) break;
    }
    if (clash) continue;
    out.push_back({std::move(plan), sample.energy, sample.assignment.bits});
  }
  return out;
}

/// Lowest-energy feasible plan; ties go to the lexicographically smallest
/// assignment bitstring; an empty input falls back to all-stop.
inline Plan select_plan(const std::vector<FeasiblePlan>& feasible,
                        const std::vector<std::vector<RouteCandidate>>& candidates) {
  if (feasible.empty()) return detail::all_stop_plan(candidates);
  const FeasiblePlan* best = &feasible.front();
  for (const FeasiblePlan& f : feasible) {
    if (f.energy < best->energy || (f.energy == best->energy && f.bits < best->bits)) best = &f;
  }
  return best->plan;
}

/// Structured (pre-QUBO) instance from candidate lists. `use_claims` selects
/// which conflict marks exact_search enforces: the control layer passes true
/// so committed plans are physically safe; solver-level comparisons against
/// the compiled QUBO pass false (occupancy only).
inline StructuredInstance make_structured(const std::vector<std::vector<RouteCandidate>>& candidates,
                                          int horizon, bool use_claims) {
  StructuredInstance s;
  s.horizon = horizon;
  s.agvs.reserve(candidates.size());
  for (const auto& list : candidates) {
    std::vector<StructuredCandidate> row;
    row.reserve(list.size());
    for (const RouteCandidate& c : list)
      row.push_back({c.d, static_cast<double>(c.d), use_claims ? c.claims : c.occupancy});
    s.agvs.push_back(std::move(row));
  }
  return s;
}

/// Number of AGVs queued directly behind each AGV: j is behind i when j's
/// next stored-path hop is i's node, counted transitively along the chain.
inline std::vector<int> follower_counts(const std::vector<AgvState>& agvs,
                                        const RouteDatabase& db) {
  const std::size_t n = agvs.size();
  std::map<NodeId, std::vector<std::size_t>> behind;  // node -> AGVs whose next hop is that node
  for (std::size_t j = 0; j < n; ++j) {
    const AgvState& a = agvs[j];
    const NodeId hop = db.next_hop(a.node, a.current_task());
    if (hop != a.node) behind[hop].push_back(j);
  }
  std::vector<int> counts(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    std::set<std::size_t> visited{i};
    std::vector<NodeId> frontier{agvs[i].node};
    while (!frontier.empty()) {
      const NodeId at = frontier.back();
      frontier.pop_back();
      auto it = behind.find(at);
      if (it == behind.end()) continue;
      for (std::size_t j : it->second) {
        if (!visited.insert(j).second) continue;
        ++count;
        frontier.push_back(agvs[j].node);
      }
    }
    counts[i] = count;
  }
  return counts;
}

/// Default preference weight: keeps the total bonus below 1 (follower chains
/// sum to fewer than N^2 memberships), so plans that differ in total route
/// length can never be reordered.
inline double default_priority_epsilon(std::size_t agv_count) {
  return 1.0 / (static_cast<double>(agv_count) * static_cast<double>(agv_count) + 1.0);
}

/// The "more following AGVs enter first" preference: every advancing
/// candidate's reward gains epsilon * followers(agv). Feasibility marks are
/// untouched, so only tie-breaking among equal-total plans changes.
inline StructuredInstance priority_bonus(StructuredInstance s, const std::vector<int>& followers,
                                         double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("priority_bonus: epsilon must be >= 0");
  for (std::size_t i = 0; i < s.agvs.size(); ++i)
    for (StructuredCandidate& c : s.agvs[i])
      if (c.d >= 1) c.reward = static_cast<double>(c.d) + epsilon * followers.at(i);
  return s;
}

enum class ControllerKind { rule_based, qubo, qubo_priority };
enum class SolverKind { brute, sa, ptsa, exact };

struct ControllerConfig {
  ControllerKind kind = ControllerKind::qubo;
  SolverKind solver = SolverKind::ptsa;
  AnnealSchedule schedule;
  DynamicOffsetParams offset;
  double priority_epsilon = 0.0;  // 0 -> default_priority_epsilon(N)
};

inline std::string solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::brute: return "brute";
    case SolverKind::sa: return "sa";
    case SolverKind::ptsa: return "ptsa";
    case SolverKind::exact: return "exact";
  }
  return "?";
}

inline std::string controller_label(const ControllerConfig& c) {
  switch (c.kind) {
    case ControllerKind::rule_based: return "rule_based";
    case ControllerKind::qubo: return "qubo+" + solver_name(c.solver);
    case ControllerKind::qubo_priority: return "qubo_priority";
  }
  return "?";
}

struct SimState {
  int clock = 0;
  std::vector<AgvState> agvs;
  std::uint64_t seed = 0;
  std::uint64_t round = 0;

  bool task_incomplete(std::size_t i) const {
    return agvs[i].node != agvs[i].current_task().destination;
  }
};

/// One planning round of the optimization controller: generate candidates,
/// compile and solve, filter structurally, select. Stochastic backends read
/// params.samples times; the exact backend searches the claim-marked
/// structured instance directly (its single sample always survives the
/// filter). An empty feasible set commits all-stop.
inline Plan plan_period_qubo(const SimState& state, const RouteDatabase& db,
                             const ControlParams& params, const ControllerConfig& config) {
  const int horizon = params.horizon_steps;
  std::vector<std::vector<RouteCandidate>> candidates;
  candidates.reserve(state.agvs.size());
  for (const AgvState& a : state.agvs) candidates.push_back(candidate_routes(db, a, horizon));

  const double fallback = default_penalty_weight(horizon, state.agvs.size());
  const PenaltyWeights weights = params.lambdas_set
                                     ? PenaltyWeights{params.lambda1, params.lambda2}
                                     : PenaltyWeights{fallback, fallback};
  const QuboInstance inst = build_qubo(candidates, weights, horizon);
  const std::uint64_t round_seed = derive_seed(state.seed, state.round);

  SampleSet ss;
  const bool use_priority = config.kind == ControllerKind::qubo_priority;
  if (use_priority || config.solver == SolverKind::exact) {
    StructuredInstance structured = make_structured(candidates, horizon, /*use_claims=*/true);
    if (use_priority) {
      const double eps = config.priority_epsilon > 0.0
                             ? config.priority_epsilon
                             : default_priority_epsilon(state.agvs.size());
      structured = priority_bonus(std::move(structured), follower_counts(state.agvs, db), eps);
    }
    const ExactResult res = exact_search(structured, weights);
    ss.total_reads = 1;
    ss.samples.push_back({res.assignment, energy_matrix(inst, res.assignment), 1});
  } else {
    const auto reads = static_cast<std::uint64_t>(params.samples);
    switch (config.solver) {
      case SolverKind::brute:
        ss = brute_force(inst);
        break;
      case SolverKind::sa:
        ss = simulated_annealing(inst, config.schedule, reads, round_seed);
        break;
      case SolverKind::ptsa:
        ss = parallel_trial_sa(inst, config.schedule, config.offset, reads, round_seed);
        break;
      case SolverKind::exact:
        break;  // handled above
    }
  }

  Plan plan = select_plan(filter_feasible(ss, candidates), candidates);
  plan.committed_steps = params.period_steps;
  return plan;
}

/// The conventional per-intersection baseline. Every AGV requests its next
/// stored-path hop; per contested node exactly one requester may pass
/// (requesters whose hop edge lies on the circumference win, then the lowest
/// AGV id). A move is granted when the target node is free, or - on corridor
/// nodes only (degree <= 2) - when its occupant has already been granted a
/// move away; intersections must be vacated on an earlier step before they
/// can be entered. The fixpoint start is "nobody granted", so swaps and
/// blocked rings never move.
class RuleBasedController {
 public:
  RuleBasedController(const PlantGraph& graph, const RouteDatabase& db,
                      const std::set<std::pair<NodeId, NodeId>>& circumference)
      : graph_(&graph), db_(&db), circumference_(&circumference) {}

  Plan step(const SimState& state, int horizon) const {
    const std::size_t n = state.agvs.size();
    std::vector<std::optional<NodeId>> target(n);
    std::map<NodeId, std::size_t> occupant;
    for (std::size_t i = 0; i < n; ++i) occupant[state.agvs[i].node] = i;
    std::map<NodeId, std::vector<std::size_t>> requests;
    for (std::size_t i = 0; i < n; ++i) {
      const AgvState& a = state.agvs[i];
      const NodeId hop = db_->next_hop(a.node, a.current_task());
      if (hop != a.node) {
        target[i] = hop;
        requests[hop].push_back(i);
      }
    }

    std::map<NodeId, std::size_t> winner;
    for (auto& [node, reqs] : requests) {
      std::sort(reqs.begin(), reqs.end(), [&](std::size_t l, std::size_t r) {
        const bool lc = on_circumference(state.agvs[l].node, node);
        const bool rc = on_circumference(state.agvs[r].node, node);
        if (lc != rc) return lc;
        return state.agvs[l].id < state.agvs[r].id;
      });
      winner[node] = reqs.front();
    }

    std::vector<bool> granted(n, false);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [node, w] : winner) {
        if (granted[w]) continue;
        auto occ = occupant.find(node);
        const bool free_now = occ == occupant.end();
        const bool vacating = !free_now && granted[occ->second];
        if (free_now || (vacating && graph_->degree(node) <= 2)) {
          granted[w] = true;
          changed = true;
        }
      }
    }

    Plan plan;
    plan.committed_steps = 1;
    for (std::size_t i = 0; i < n; ++i) {
      RouteCandidate c;
      c.agv = state.agvs[i].id;
      if (granted[i]) {
        c.nodes = {state.agvs[i].node, *target[i]};
        c.mu = 1;
      } else {
        c.nodes = {state.agvs[i].node};
        c.mu = 0;
      }
      c.d = static_cast<int>(c.nodes.size()) - 1;
      c.occupancy = occupancy(c.nodes, horizon);
      c.claims = claim_marks(c.nodes, horizon);
      plan.choices.push_back(std::move(c));
    }
    return plan;
  }

 private:
  bool on_circumference(NodeId a, NodeId b) const {
    return circumference_->count(ordered_pair(a, b)) != 0;
  }
  const PlantGraph* graph_;
  const RouteDatabase* db_;
  const std::set<std::pair<NodeId, NodeId>>* circumference_;
};

struct TraceRow {
  int step = 0;
  AgvId agv = 0;
  NodeId node = 0;
  bool waiting = false;
  int route_len = 0;
};

/// Per-step fleet history; all metrics derive from it. Row order is
/// (step, AGV index); step 0 records the initial placement.
struct SimTrace {
  std::string controller;
  std::uint64_t scenario_fingerprint = 0;
  std::size_t agv_count = 0;
  int duration_steps = 0;
  std::vector<TraceRow> rows;
  std::vector<std::uint64_t> tasks_completed;  // by AGV index, end of run
};

/// Thrown when a committed step would break the safety invariants; indicates
/// a controller bug, never a legal outcome.
class SafetyViolationError : public std::logic_error {
 public:
  explicit SafetyViolationError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {

inline void check_step_safety(const std::vector<NodeId>& prev, const std::vector<NodeId>& next,
                              const std::vector<AgvState>& agvs, int step) {
  std::map<NodeId, std::size_t> seen;
  for (std::size_t i = 0; i < next.size(); ++i) {
    auto [it, inserted] = seen.emplace(next[i], i);
    if (!inserted) {
      std::ostringstream os;
      os << "safety violation at step " << step << ": AGVs " << agvs[it->second].id << " and "
         << agvs[i].id << " share node " << next[i];
      throw SafetyViolationError(os.str());
    }
  }
  std::set<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (next[i] == prev[i]) continue;
    if (!edges.insert(ordered_pair(prev[i], next[i])).second) {
      std::ostringstream os;
      os << "safety violation at step " << step << ": edge {" << prev[i] << "," << next[i]
         << "} used twice (AGV " << agvs[i].id << ")";
      throw SafetyViolationError(os.str());
    }
  }
}

/// Advance past completed tasks; cyclic queues mean arrival immediately
/// activates the next task. The guard stops a full wrap of zero-hop tasks.
inline void advance_completed_tasks(AgvState& a, std::uint64_t& completed) {
  for (std::size_t guard = 0; guard < a.task_queue.size(); ++guard) {
    if (a.node != a.current_task().destination) return;
    ++completed;
    a.advance_task();
  }
}

}  // namespace detail

/// Iterative re-planning simulation: gather state, plan, commit
/// period_steps of movement, update tasks on arrival, repeat. Deterministic
/// given (scenario, controller, duration, seed); aborts with a diagnostic on
/// any safety breach.
inline SimTrace run_simulation(const Scenario& scenario, const ControllerConfig& config,
                               int duration_steps, std::uint64_t seed) {
  std::vector<Task> all_tasks;
  for (const AgvState& a : scenario.agvs)
    all_tasks.insert(all_tasks.end(), a.task_queue.begin(), a.task_queue.end());
  const RouteDatabase db(scenario.graph, all_tasks, scenario.params.horizon_steps);
  const RuleBasedController baseline(scenario.graph, db, scenario.circumference);

  SimState state;
  state.agvs = scenario.agvs;
  state.seed = seed;

  SimTrace trace;
  trace.controller = controller_label(config);
  {
    const std::string canonical = save_scenario(scenario);
    trace.scenario_fingerprint = fnv1a(canonical.data(), canonical.size());
  }
  trace.agv_count = state.agvs.size();
  trace.duration_steps = duration_steps;
  trace.tasks_completed.assign(state.agvs.size(), 0);

  for (std::size_t i = 0; i < state.agvs.size(); ++i)
    detail::advance_completed_tasks(state.agvs[i], trace.tasks_completed[i]);
  trace.tasks_completed.assign(state.agvs.size(), 0);  // pre-run arrivals do not count
  for (std::size_t i = 0; i < state.agvs.size(); ++i)
    trace.rows.push_back({0, state.agvs[i].id, state.agvs[i].node, false, 0});

  while (state.clock < duration_steps) {
    Plan plan = config.kind == ControllerKind::rule_based
                    ? baseline.step(state, scenario.params.horizon_steps)
                    : plan_period_qubo(state, db, scenario.params, config);
    const int commit = std::min(plan.committed_steps, duration_steps - state.clock);
    for (int tau = 1; tau <= commit; ++tau) {
      std::vector<NodeId> prev(state.agvs.size()), next(state.agvs.size());
      for (std::size_t i = 0; i < state.agvs.size(); ++i) {
        prev[i] = state.agvs[i].node;
        next[i] = plan.choices[i].position_at(tau);
      }
      detail::check_step_safety(prev, next, state.agvs, state.clock + tau);
      for (std::size_t i = 0; i < state.agvs.size(); ++i) {
        const bool waiting = next[i] == prev[i] && state.task_incomplete(i);
        state.agvs[i].node = next[i];
        trace.rows.push_back(
            {state.clock + tau, state.agvs[i].id, next[i], waiting, plan.choices[i].d});
        detail::advance_completed_tasks(state.agvs[i], trace.tasks_completed[i]);
      }
    }
    state.clock += commit;
    ++state.round;
  }
  return trace;
}

}  // namespace agvq

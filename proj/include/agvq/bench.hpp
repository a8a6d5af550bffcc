#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "agvq/control.hpp"
#include "agvq/metrics.hpp"
#include "agvq/qubo.hpp"
#include "agvq/routing.hpp"
#include "agvq/solvers.hpp"

namespace agvq {

/// One member of the benchmark family: AGV pairs that meet head-on across a
/// shared corridor edge, so the contention is visible to the QUBO collision
/// term. Each AGV has a 3-hop task and (with horizon 2) exactly 3 route
/// candidates, giving 3 * agv_count variables; an odd count adds one
/// uncontended AGV on a private line.
///
///   A1 -- C1 -- C2 -- A2      pair AGV a: A1 -> A2
///   B2 -/        \- B1        pair AGV b: B1 -> B2 (crosses C2 -> C1)
struct BenchInstance {
  std::size_t n_vars = 0;
  std::vector<std::vector<RouteCandidate>> candidates;
  QuboInstance qubo;
  QuboInstance scaled;  // rescaled copy actually handed to the samplers
  StructuredInstance structured;  // occupancy marks (solver-level view)
  PenaltyWeights weights;
  double ground_energy = 0.0;         // on `qubo`
  double scaled_ground_energy = 0.0;  // on `scaled`
};

/// Magnitude the sampler-facing matrix is rescaled to; one annealing
/// schedule then fits every family member.
inline constexpr double kBenchMaxAbs = 8.0;

inline BenchInstance make_bench_instance(std::size_t agv_count, int horizon = 2) {
  if (agv_count < 1) throw std::invalid_argument("make_bench_instance: need >= 1 AGV");
  std::vector<PlantNode> nodes;
  std::vector<PlantEdge> edges;
  std::vector<AgvState> agvs;
  std::vector<Task> tasks;
  NodeId base = 0;
  auto add_node = [&nodes](NodeId id) { nodes.push_back({id, static_cast<double>(id), 0.0}); };

  const std::size_t pairs = agv_count / 2;
  for (std::size_t k = 0; k < pairs; ++k, base += 6) {
    const NodeId a1 = base, c1 = base + 1, c2 = base + 2, a2 = base + 3, b1 = base + 4,
                 b2 = base + 5;
    for (NodeId id : {a1, c1, c2, a2, b1, b2}) add_node(id);
    for (auto [x, y] : {std::pair{a1, c1}, {c1, c2}, {c2, a2}, {b1, c2}, {c1, b2}})
      edges.push_back({x, y, 10.0});
    const Task ta{a1, a2}, tb{b1, b2};
    tasks.push_back(ta);
    tasks.push_back(tb);
    agvs.push_back({static_cast<AgvId>(2 * k), a1, 0.5, {ta, Task{a2, a1}}, 0});
    agvs.push_back({static_cast<AgvId>(2 * k + 1), b1, 0.5, {tb, Task{b2, b1}}, 0});
  }
  if (agv_count % 2 == 1) {
    const NodeId l1 = base, l2 = base + 1, l3 = base + 2;
    for (NodeId id : {l1, l2, l3}) add_node(id);
    edges.push_back({l1, l2, 10.0});
    edges.push_back({l2, l3, 10.0});
    const Task t{l1, l3};
    tasks.push_back(t);
    agvs.push_back({static_cast<AgvId>(agv_count - 1), l1, 0.5, {t, Task{l3, l1}}, 0});
  }

  const PlantGraph graph(std::move(nodes), std::move(edges));
  const RouteDatabase db(graph, tasks, horizon);

  BenchInstance out;
  for (const AgvState& a : agvs) out.candidates.push_back(candidate_routes(db, a, horizon));
  const double w = default_penalty_weight(horizon, agv_count);
  out.weights = {w, w};
  out.qubo = build_qubo(out.candidates, out.weights, horizon);
  out.scaled = rescale(out.qubo, kBenchMaxAbs);
  out.n_vars = out.qubo.n();
  out.structured = make_structured(out.candidates, horizon, /*use_claims=*/false);
  const ExactResult ground = exact_search(out.structured, out.weights);
  out.ground_energy = ground.energy;
  out.scaled_ground_energy = energy_matrix(out.scaled, ground.assignment);
  return out;
}

/// 3 variables per AGV, so family sizes must be multiples of 3
/// (9, 21, 30, 39, 51, 60 in the shipped manifests).
inline BenchInstance make_bench_instance_for_size(std::size_t n_vars) {
  if (n_vars == 0 || n_vars % 3 != 0)
    throw std::invalid_argument("bench size must be a positive multiple of 3, got " +
                                std::to_string(n_vars));
  return make_bench_instance(n_vars / 3);
}

struct BenchRow {
  std::size_t n_vars = 0;
  std::string solver;
  double p0 = 0.0;
  double ground_energy = 0.0;  // unscaled instance
  double t_c = 0.0;            // seconds per sample (machine-dependent)
  double tts = 0.0;            // seconds at confidence p (machine-dependent)
};

struct BenchParams {
  std::uint64_t reads = 1000;
  double p = 0.99;
  AnnealSchedule schedule{400, 0.05, 12.0, 1};
  DynamicOffsetParams offset{0.25};
  double energy_tol = 1e-6;
};

/// One benchmark cell: sample the rescaled instance, score P0 against the
/// exact ground energy, convert to TTS.
inline BenchRow run_bench_cell(const BenchInstance& inst, SolverKind solver,
                               const BenchParams& params, std::uint64_t seed) {
  BenchRow row;
  row.n_vars = inst.n_vars;
  row.solver = solver_name(solver);
  row.ground_energy = inst.ground_energy;
  SampleSet ss;
  switch (solver) {
    case SolverKind::sa:
      ss = simulated_annealing(inst.scaled, params.schedule, params.reads, seed);
      break;
    case SolverKind::ptsa:
      ss = parallel_trial_sa(inst.scaled, params.schedule, params.offset, params.reads, seed);
      break;
    case SolverKind::exact: {
      const auto t0 = std::chrono::steady_clock::now();
      const ExactResult res = exact_search(inst.structured, inst.weights);
      ss.total_reads = 1;
      ss.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ss.per_sample_time_s = ss.wall_time_s;
      ss.samples.push_back({res.assignment, energy_matrix(inst.scaled, res.assignment), 1});
      break;
    }
    case SolverKind::brute:
      ss = brute_force(inst.scaled);
      break;
  }
  row.p0 = ground_state_probability(ss, inst.scaled_ground_energy, params.energy_tol);
  row.t_c = ss.per_sample_time_s;
  row.tts = tts(row.t_c, row.p0, params.p);
  return row;
}

}  // namespace agvq

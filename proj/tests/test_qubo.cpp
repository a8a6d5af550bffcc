#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "agvq/qubo.hpp"
#include "agvq/solvers.hpp"
#include "test_util.hpp"

using namespace agvq;

namespace {

// The worked two-variable round: one AGV on edge {0,1}, horizon 1, candidates
// stop {0} (d=0) and move {0,1} (d=1).
std::vector<std::vector<RouteCandidate>> two_route_round() {
  std::vector<RouteCandidate> list;
  RouteCandidate stop;
  stop.mu = 0;
  stop.nodes = {0};
  stop.d = 0;
  stop.occupancy = occupancy(stop.nodes, 1);
  stop.claims = claim_marks(stop.nodes, 1);
  RouteCandidate move;
  move.mu = 1;
  move.nodes = {0, 1};
  move.d = 1;
  move.occupancy = occupancy(move.nodes, 1);
  move.claims = claim_marks(move.nodes, 1);
  list.push_back(stop);
  list.push_back(move);
  return {list};
}

Assignment bits(std::initializer_list<int> values) {
  Assignment a;
  for (int v : values) a.bits.push_back(static_cast<std::uint8_t>(v));
  return a;
}

}  // namespace

TEST_CASE("two-variable worked example compiles to the expected matrix") {
  const auto round = two_route_round();
  const QuboInstance inst = build_qubo(round, {4.0, 2.0}, 1);

  REQUIRE(inst.n() == 2);
  CHECK(inst.at(0, 0) == -6.0);
  CHECK(inst.at(1, 1) == -7.0);
  CHECK(inst.at(0, 1) + inst.at(1, 0) == 8.0);
  CHECK(inst.at(0, 1) == inst.at(1, 0));
  CHECK(inst.constant() == 8.0);
  CHECK(inst.resource_index().size() == 2);
}

TEST_CASE("worked example energies via matrix and direct route") {
  const auto round = two_route_round();
  const PenaltyWeights w{4.0, 2.0};
  const QuboInstance inst = build_qubo(round, w, 1);

  // Empty selection: one-hot penalty 4 plus two unmet resource terms of 2.
  CHECK(energy_matrix(inst, bits({0, 0})) == 8.0);
  CHECK(energy_matrix(inst, bits({0, 1})) == 1.0);  // unique ground state
  CHECK(energy_matrix(inst, bits({1, 0})) == 2.0);
  CHECK(energy_matrix(inst, bits({1, 1})) == 3.0);

  for (auto a : {bits({0, 0}), bits({0, 1}), bits({1, 0}), bits({1, 1})})
    CHECK(energy_direct(round, w, a, 1) == energy_matrix(inst, a));
}

TEST_CASE("matrix energy rejects length mismatch") {
  const QuboInstance inst = build_qubo(two_route_round(), {1.0, 1.0}, 1);
  CHECK_THROWS_AS(energy_matrix(inst, bits({0, 0, 1})), std::invalid_argument);
}

TEST_CASE("zero matrix energy is the constant") {
  QuboInstance inst(3);
  inst.constant() = 0.0;
  CHECK(energy_matrix(inst, bits({1, 0, 1})) == 0.0);
}

TEST_CASE("penalties off leaves only the route-length reward") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto round = testutil::random_round(rng);
    const QuboInstance inst = build_qubo(round.candidates, {0.0, 0.0}, round.horizon);
    CHECK(inst.constant() == 0.0);
    for (std::size_t i = 0; i < inst.n(); ++i)
      for (std::size_t j = 0; j < inst.n(); ++j) {
        if (i == j) {
          const VarKey key = inst.index_map()[i];
          CHECK(inst.at(i, i) == -static_cast<double>(round.candidates[key.agv_index][key.mu].d));
        } else {
          CHECK(inst.at(i, j) == 0.0);
        }
      }
    const Assignment a = testutil::random_assignment(rng, inst.n());
    double expected = 0.0;
    std::size_t k = 0;
    for (const auto& list : round.candidates)
      for (const auto& c : list) {
        if (a.bits[k]) expected -= static_cast<double>(c.d);
        ++k;
      }
    CHECK(energy_direct(round.candidates, {0.0, 0.0}, a, round.horizon) == expected);
  }
}

TEST_CASE("build_qubo refuses an AGV with no candidates") {
  std::vector<std::vector<RouteCandidate>> round = two_route_round();
  round.push_back({});
  CHECK_THROWS_AS(build_qubo(round, {1.0, 1.0}, 1), std::invalid_argument);
}

TEST_CASE("ten AGVs with six candidates each give sixty variables") {
  // Horizon 5 on a long line: candidates stop + 1..5 steps ahead.
  std::vector<PlantNode> nodes;
  std::vector<PlantEdge> edges;
  for (NodeId i = 0; i < 70; ++i) nodes.push_back({i, static_cast<double>(i), 0.0});
  for (NodeId i = 0; i + 1 < 70; ++i) edges.push_back({i, i + 1, 10.0});
  const PlantGraph graph(std::move(nodes), std::move(edges));
  std::vector<Task> tasks;
  std::vector<AgvState> agvs;
  for (std::uint32_t i = 0; i < 10; ++i) {
    const NodeId start = static_cast<NodeId>(7 * i);
    const Task t{start, static_cast<NodeId>(start + 6)};
    tasks.push_back(t);
    agvs.push_back({i, start, 0.5, {t, Task{t.destination, t.origin}}, 0});
  }
  const RouteDatabase db(graph, tasks, 5);
  std::vector<std::vector<RouteCandidate>> candidates;
  for (const AgvState& a : agvs) candidates.push_back(candidate_routes(db, a, 5));
  const QuboInstance inst = build_qubo(candidates, {21.0, 21.0}, 5);
  CHECK(inst.n() == 60);
}

TEST_CASE("oracle equivalence on random planning instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto round = testutil::random_round(rng);
    const double lam = default_penalty_weight(round.horizon, round.agvs.size());
    const PenaltyWeights w{lam, lam};
    const QuboInstance inst = build_qubo(round.candidates, w, round.horizon);
    for (int rep = 0; rep < 50; ++rep) {
      const Assignment a = testutil::random_assignment(rng, inst.n());
      const double direct = energy_direct(round.candidates, w, a, round.horizon);
      const double matrix = energy_matrix(inst, a);
      CHECK(std::abs(matrix - direct) <= 1e-9 * (1.0 + std::abs(direct)));
    }
  }
}

TEST_CASE("linear coefficients carry reward, one-hot, and collision parts") {
  // With the node-resource extension every candidate holds exactly one mark
  // per horizon step, so the diagonal is -d - lambda1 - lambda2 * horizon;
  // the edge-mark share of the collision part is exactly d (the expansion
  // identity).
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto round = testutil::random_round(rng);
    const PenaltyWeights w{3.0, 5.0};
    const QuboInstance inst = build_qubo(round.candidates, w, round.horizon);
    for (std::size_t k = 0; k < inst.n(); ++k) {
      const VarKey key = inst.index_map()[k];
      const RouteCandidate& c = round.candidates[key.agv_index][key.mu];
      const double expected = -static_cast<double>(c.d) - w.lambda1 - w.lambda2 * round.horizon;
      CHECK(inst.at(k, k) == expected);
      int edge_marks = 0;
      for (const StepMark& m : c.occupancy)
        if (m.resource.kind == Resource::Kind::edge) ++edge_marks;
      CHECK(edge_marks == c.d);
    }
  }
}

TEST_CASE("penalty dominance: defaults force feasible global minima") {
  Rng rng(99);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto round = testutil::random_round(rng, 2, 4);
    if (testutil::total_variables(round.candidates) > 16) continue;
    const double lam = default_penalty_weight(round.horizon, round.agvs.size());
    const QuboInstance inst = build_qubo(round.candidates, {lam, lam}, round.horizon);
    const SampleSet minima = brute_force(inst);
    // All-stop is feasible (distinct start nodes), so a feasible assignment exists.
    for (const SampleRecord& s : minima.samples)
      CHECK(testutil::f_level_feasible(round.candidates, s.assignment));
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("rescale scales coefficients and preserves minimizers") {
  const auto round = two_route_round();
  const QuboInstance inst = build_qubo(round, {4.0, 2.0}, 1);

  SECTION("max entry 8 rescaled to 1 multiplies everything by 0.125") {
    REQUIRE(inst.max_abs_coefficient() == 8.0);
    const QuboInstance scaled = rescale(inst, 1.0);
    CHECK(scaled.at(0, 0) == -0.75);
    CHECK(scaled.at(1, 1) == -0.875);
    CHECK(scaled.at(0, 1) + scaled.at(1, 0) == 1.0);
    CHECK(scaled.constant() == 1.0);
  }

  SECTION("rescaling to the current maximum is the identity") {
    const QuboInstance same = rescale(inst, inst.max_abs_coefficient());
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) CHECK(same.at(i, j) == inst.at(i, j));
    CHECK(same.constant() == inst.constant());
  }

  SECTION("ground state unchanged by rescale") {
    const SampleSet before = brute_force(inst);
    const SampleSet after = brute_force(rescale(inst, 1.0));
    REQUIRE(before.samples.size() == 1);
    REQUIRE(after.samples.size() == 1);
    CHECK(before.samples.front().assignment == after.samples.front().assignment);
    CHECK(before.samples.front().assignment == bits({0, 1}));
  }

  SECTION("all-zero matrix returned unchanged") {
    QuboInstance zero(3);
    const QuboInstance same = rescale(zero, 5.0);
    CHECK(same.max_abs_coefficient() == 0.0);
  }
}

TEST_CASE("argmin set invariant under rescale on random instances") {
  Rng rng(1234);
  for (int trial = 0; trial < 15; ++trial) {
    const auto round = testutil::random_round(rng, 2, 4);
    if (testutil::total_variables(round.candidates) > 16) continue;
    const double lam = default_penalty_weight(round.horizon, round.agvs.size());
    const QuboInstance inst = build_qubo(round.candidates, {lam, lam}, round.horizon);
    auto argmin_bits = [](const SampleSet& ss) {
      std::vector<std::vector<std::uint8_t>> out;
      for (const auto& s : ss.samples) out.push_back(s.assignment.bits);
      return out;
    };
    CHECK(argmin_bits(brute_force(inst)) == argmin_bits(brute_force(rescale(inst, 1.0))));
  }
}

TEST_CASE("instance text round-trips exactly") {
  Rng rng(5);
  const auto round = testutil::random_round(rng);
  const double lam = default_penalty_weight(round.horizon, round.agvs.size());
  const QuboInstance inst = build_qubo(round.candidates, {lam, lam}, round.horizon);

  std::ostringstream os;
  write_qubo_text(os, inst);
  std::istringstream is(os.str());
  const QuboInstance back = read_qubo_text(is);

  REQUIRE(back.n() == inst.n());
  CHECK(back.constant() == inst.constant());
  for (std::size_t i = 0; i < inst.n(); ++i)
    for (std::size_t j = 0; j < inst.n(); ++j) CHECK(back.at(i, j) == inst.at(i, j));
  for (std::size_t k = 0; k < inst.n(); ++k) {
    CHECK(back.index_map()[k].agv_index == inst.index_map()[k].agv_index);
    CHECK(back.index_map()[k].mu == inst.index_map()[k].mu);
  }
}

TEST_CASE("instance reader reports malformed rows") {
  std::istringstream missing_n("constant 2\n0 0 1\n");
  CHECK_THROWS_AS(read_qubo_text(missing_n), std::runtime_error);
  std::istringstream bad_row("n 2\n0 5 1.0\n");
  CHECK_THROWS_AS(read_qubo_text(bad_row), std::runtime_error);
}

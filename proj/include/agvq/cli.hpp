#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agvq/bench.hpp"
#include "agvq/control.hpp"
#include "agvq/metrics.hpp"
#include "agvq/plant.hpp"

#include "json.hpp"

namespace agvq {

enum class Command { simulate, solve, bench, validate };

struct RunConfig {
  Command command = Command::simulate;
  std::string scenario_path;
  std::string instance_path;   // solve
  std::string manifest_path;   // bench
  std::string out_dir = "out";
  std::optional<std::string> controller;  // rule_based | qubo | qubo_priority
  std::optional<std::string> solver;      // brute | sa | ptsa | exact
  std::optional<std::uint64_t> seed;
  std::optional<int> duration;
  std::optional<int> samples;
  std::uint64_t reads = 1000;  // solve
  int jobs = 1;
  bool dump_routes = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

/// Raised for malformed invocations (missing/contradictory flags).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << content;
}

inline SolverKind parse_solver(const std::string& name) {
  if (name == "brute") return SolverKind::brute;
  if (name == "sa") return SolverKind::sa;
  if (name == "ptsa") return SolverKind::ptsa;
  if (name == "exact") return SolverKind::exact;
  throw UsageError("unknown solver '" + name + "' (expected brute|sa|ptsa|exact)");
}

inline ControllerConfig parse_controller(const RunConfig& cfg) {
  if (!cfg.controller) throw UsageError("--controller is required (rule_based|qubo|qubo_priority)");
  ControllerConfig out;
  const std::string& name = *cfg.controller;
  if (name == "rule_based") {
    out.kind = ControllerKind::rule_based;
    if (cfg.solver) throw UsageError("--solver is only valid with --controller qubo");
  } else if (name == "qubo") {
    out.kind = ControllerKind::qubo;
    if (!cfg.solver) throw UsageError("--controller qubo requires --solver");
    out.solver = parse_solver(*cfg.solver);
  } else if (name == "qubo_priority") {
    out.kind = ControllerKind::qubo_priority;
    out.solver = SolverKind::exact;
    if (cfg.solver && *cfg.solver != "exact")
      throw UsageError("qubo_priority always uses the exact backend");
  } else {
    throw UsageError("unknown controller '" + name + "'");
  }
  // Schedule matched to the default penalty scale (2*H*N + 1).
  out.schedule = AnnealSchedule{100, 0.02, 8.0, 1};
  out.offset = DynamicOffsetParams{1.0};
  return out;
}

inline Scenario load_validated_scenario(const RunConfig& cfg) {
  if (cfg.scenario_path.empty()) throw UsageError("--scenario is required");
  Scenario s = load_scenario(read_file(cfg.scenario_path));
  const auto violations = validate_scenario(s);
  if (!is_valid(violations)) {
    std::ostringstream os;
    os << "scenario '" << cfg.scenario_path << "' is invalid:\n";
    for (const Violation& v : violations)
      if (v.severity == Violation::Severity::error) os << "  " << v.code << ": " << v.message << "\n";
    throw std::runtime_error(os.str());
  }
  if (cfg.seed) s.params.seed = *cfg.seed;
  if (cfg.duration) s.params.sim_duration_steps = *cfg.duration;
  if (cfg.samples) s.params.samples = *cfg.samples;
  return s;
}

}  // namespace detail

/// simulate: run one controller over the scenario, write trace + reports +
/// a one-line summary. Everything except timing.txt is byte-reproducible.
inline int cmd_simulate(const RunConfig& cfg) {
  const Scenario scenario = detail::load_validated_scenario(cfg);
  const ControllerConfig controller = detail::parse_controller(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const SimTrace trace = run_simulation(scenario, controller, scenario.params.sim_duration_steps,
                                        scenario.params.seed);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const WaitingReport report = waiting_report(trace);

  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ostringstream os;
    write_trace(os, trace);
    detail::write_file(dir / "trace.tsv", os.str());
  }
  {
    std::ostringstream os;
    write_waiting_series(os, report);
    detail::write_file(dir / "waiting.tsv", os.str());
  }
  {
    std::ostringstream os;
    write_node_accumulation(os, report);
    detail::write_file(dir / "nodes.tsv", os.str());
  }
  std::ostringstream summary;
  summary.precision(6);
  summary << std::fixed << "controller=" << trace.controller
          << " solver=" << (cfg.solver ? *cfg.solver : std::string("-"))
          << " working_rate=" << working_rate(report)
          << " waiting_avg=" << report.time_average
          << " waiting_last_half=" << report.last_half_average << "\n";
  detail::write_file(dir / "summary.txt", summary.str());
  {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << "wall_seconds=" << wall << "\n";
    detail::write_file(dir / "timing.txt", os.str());
  }
  *cfg.out << summary.str();
  return 0;
}

/// solve: one-shot solve of a dumped instance; writes the sample table and a
/// ground-state-probability line (vs brute force when n <= 24, else vs the
/// best energy found). The exact backend needs the structured form and is
/// not available for imported matrices.
inline int cmd_solve(const RunConfig& cfg) {
  if (cfg.instance_path.empty()) throw UsageError("--instance is required");
  if (!cfg.solver) throw UsageError("--solver is required (brute|sa|ptsa)");
  const SolverKind solver = detail::parse_solver(*cfg.solver);
  if (solver == SolverKind::exact)
    throw UsageError("--solver exact needs the structured form; instance files carry only the matrix");

  std::istringstream in(detail::read_file(cfg.instance_path));
  const QuboInstance inst = read_qubo_text(in);
  const std::uint64_t seed = cfg.seed.value_or(42);
  const AnnealSchedule sched{200, 0.02, 8.0, 1};

  SampleSet ss;
  switch (solver) {
    case SolverKind::brute: ss = brute_force(inst); break;
    case SolverKind::sa: ss = simulated_annealing(inst, sched, cfg.reads, seed); break;
    case SolverKind::ptsa:
      ss = parallel_trial_sa(inst, sched, DynamicOffsetParams{1.0}, cfg.reads, seed);
      break;
    case SolverKind::exact: break;  // rejected above
  }

  double ground = ss.min_energy();
  std::string ground_source = "best_found";
  if (inst.n() <= 24 && solver != SolverKind::brute) {
    ground = brute_force(inst).samples.front().energy;
    ground_source = "brute_force";
  } else if (solver == SolverKind::brute) {
    ground_source = "brute_force";
  }
  const double p0 = ground_state_probability(ss, ground, 1e-9);

  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ostringstream os;
    write_sample_table(os, ss);
    detail::write_file(dir / "samples.tsv", os.str());
  }
  const SampleRecord* best = nullptr;
  for (const SampleRecord& s : ss.samples)
    if (!best || s.energy < best->energy) best = &s;
  std::ostringstream line;
  line.precision(17);
  line << "best_assignment=";
  for (std::uint8_t b : best->assignment.bits) line << (b ? '1' : '0');
  line << " best_energy=" << best->energy << " p0=" << p0 << " ground=" << ground << " ("
       << ground_source << ")\n";
  detail::write_file(dir / "p0.txt", line.str());
  *cfg.out << line.str();
  return 0;
}

/// bench: contention-family TTS comparison. The deterministic columns go to
/// bench_p0.tsv; the timing-dependent TTS table goes to bench_tts.tsv.
inline int cmd_bench(const RunConfig& cfg) {
  if (cfg.manifest_path.empty()) throw UsageError("--manifest is required");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_file(cfg.manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("bench manifest: ") + e.what());
  }
  if (!manifest.contains("sizes") || !manifest.contains("solvers"))
    throw std::runtime_error("bench manifest needs 'sizes' and 'solvers' arrays");
  const std::vector<std::size_t> sizes = manifest.at("sizes").get<std::vector<std::size_t>>();
  const std::vector<std::string> solver_names =
      manifest.at("solvers").get<std::vector<std::string>>();
  BenchParams params;
  params.reads = manifest.value("reads", params.reads);
  params.p = manifest.value("p", params.p);
  const std::uint64_t seed = cfg.seed.value_or(42);

  struct Cell {
    std::size_t size;
    SolverKind solver;
    BenchRow row;
  };
  std::vector<Cell> cells;
  for (std::size_t size : sizes)
    for (const std::string& name : solver_names)
      cells.push_back({size, detail::parse_solver(name), {}});

  auto run_cell = [&](Cell& cell, std::uint64_t cell_index) {
    const BenchInstance inst = make_bench_instance_for_size(cell.size);
    cell.row = run_bench_cell(inst, cell.solver, params, derive_seed(seed, cell_index));
  };
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(cells[i], i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (std::size_t i = cursor.fetch_add(1); i < cells.size(); i = cursor.fetch_add(1))
          run_cell(cells[i], i);
      });
    for (auto& t : pool) t.join();
  }

  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  std::ostringstream det, timing;
  det.precision(17);
  timing.precision(6);
  det << "n_vars\tsolver\tp0\tground_energy\n";
  timing << std::fixed << "n_vars\tsolver\tt_c_s\tp0\ttts_s\n";
  for (const Cell& c : cells) {
    det << c.row.n_vars << "\t" << c.row.solver << "\t" << c.row.p0 << "\t" << c.row.ground_energy
        << "\n";
    timing << c.row.n_vars << "\t" << c.row.solver << "\t" << c.row.t_c << "\t" << c.row.p0 << "\t"
           << c.row.tts << "\n";
  }
  detail::write_file(dir / "bench_p0.tsv", det.str());
  detail::write_file(dir / "bench_tts.tsv", timing.str());
  *cfg.out << det.str();
  return 0;
}

/// validate: print every violation; exit 0 only when no errors. Optionally
/// dumps the route database for debugging.
inline int cmd_validate(const RunConfig& cfg) {
  if (cfg.scenario_path.empty()) throw UsageError("--scenario is required");
  const Scenario s = load_scenario(detail::read_file(cfg.scenario_path));
  const auto violations = validate_scenario(s);
  for (const Violation& v : violations)
    *cfg.out << (v.severity == Violation::Severity::error ? "error" : "warning") << " " << v.code
             << ": " << v.message << "\n";
  if (cfg.dump_routes && is_valid(violations)) {
    std::vector<Task> tasks;
    for (const AgvState& a : s.agvs)
      tasks.insert(tasks.end(), a.task_queue.begin(), a.task_queue.end());
    const RouteDatabase db(s.graph, tasks, s.params.horizon_steps);
    *cfg.out << "route database (" << db.size() << " keys, horizon " << db.horizon() << "):\n";
    for (const auto& [key, templates] : db.entries()) {
      *cfg.out << "  node " << key.node << ", task " << key.task.origin << "->"
               << key.task.destination << ":";
      for (const auto& tpl : templates) {
        *cfg.out << " {";
        for (std::size_t i = 0; i < tpl.size(); ++i) *cfg.out << (i ? "," : "") << tpl[i];
        *cfg.out << "}";
      }
      *cfg.out << "\n";
    }
  }
  if (!is_valid(violations)) return 2;
  *cfg.out << "scenario ok: " << s.graph.nodes().size() << " nodes, " << s.graph.edges().size()
           << " edges, " << s.agvs.size() << " AGVs\n";
  return 0;
}

inline int run_command(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::simulate: return cmd_simulate(cfg);
    case Command::solve: return cmd_solve(cfg);
    case Command::bench: return cmd_bench(cfg);
    case Command::validate: return cmd_validate(cfg);
  }
  return 1;
}

}  // namespace agvq

#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "agvq/control.hpp"

namespace agvq {

struct WaitingReport {
  std::vector<double> per_step_rate;          // fraction waiting per step, in [0,1]
  double time_average = 0.0;                  // mean over the full run
  double last_half_average = 0.0;             // convergence view: mean over the last half
  std::map<NodeId, std::uint64_t> per_node_accumulated;  // waited AGV-steps per node
};

struct TtsReport {
  double t_c = 0.0;  // seconds per sample
  double p0 = 0.0;
  double p = 0.0;
  double tts = 0.0;  // seconds
};

/// Waiting-rate series and per-node accumulation from a trace. Step-0 rows
/// record the initial placement and carry no waiting information.
inline WaitingReport waiting_report(const SimTrace& trace) {
  if (trace.rows.empty() || trace.agv_count == 0)
    throw std::invalid_argument("waiting_report: empty trace");
  WaitingReport report;
  std::map<int, int> waiting_per_step;
  for (const TraceRow& row : trace.rows) {
    if (row.step == 0) continue;
    waiting_per_step[row.step];  // ensure the step exists even with no waiters
    if (row.waiting) {
      ++waiting_per_step[row.step];
      ++report.per_node_accumulated[row.node];
    }
  }
  report.per_step_rate.reserve(waiting_per_step.size());
  double sum = 0.0;
  for (const auto& [step, count] : waiting_per_step) {
    const double rate = static_cast<double>(count) / static_cast<double>(trace.agv_count);
    report.per_step_rate.push_back(rate);
    sum += rate;
  }
  const std::size_t steps = report.per_step_rate.size();
  report.time_average = steps == 0 ? 0.0 : sum / static_cast<double>(steps);
  if (steps > 0) {
    double tail = 0.0;
    const std::size_t from = steps / 2;
    for (std::size_t i = from; i < steps; ++i) tail += report.per_step_rate[i];
    report.last_half_average = tail / static_cast<double>(steps - from);
  }
  return report;
}

/// Working rate in percent: 100 * (1 - time-averaged waiting rate).
inline double working_rate(const WaitingReport& report) {
  return 100.0 * (1.0 - report.time_average);
}

/// Time to solution at confidence p given per-sample time t_c and ground
/// state probability p0. p0 = 0 yields +infinity; p0 = 1 yields t_c itself
/// (one deterministic sample suffices; the literal formula would divide by
/// log 0).
inline double tts(double t_c, double p0, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("tts: p must lie in (0,1)");
  if (p0 < 0.0 || p0 > 1.0) throw std::invalid_argument("tts: p0 must lie in [0,1]");
  if (p0 == 0.0) return std::numeric_limits<double>::infinity();
  if (p0 == 1.0) return t_c;
  return t_c * std::log(1.0 - p) / std::log(1.0 - p0);
}

inline TtsReport tts_report(double t_c, double p0, double p) {
  return {t_c, p0, p, tts(t_c, p0, p)};
}

// ---------------------------------------------------------------------------
// Delimited-text exports (docs/formats.md). Deterministic given their inputs.
// ---------------------------------------------------------------------------

inline void write_trace(std::ostream& os, const SimTrace& trace) {
  os << "# agvq trace v1\n";
  os << "# controller " << trace.controller << "\n";
  os << "# scenario_fingerprint " << trace.scenario_fingerprint << "\n";
  os << "step\tagv\tnode\twaiting\troute_len\n";
  for (const TraceRow& row : trace.rows)
    os << row.step << "\t" << row.agv << "\t" << row.node << "\t" << (row.waiting ? 1 : 0) << "\t"
       << row.route_len << "\n";
}

inline void write_waiting_series(std::ostream& os, const WaitingReport& report) {
  os.precision(17);
  os << "step\trate\n";
  for (std::size_t i = 0; i < report.per_step_rate.size(); ++i)
    os << (i + 1) << "\t" << report.per_step_rate[i] << "\n";
}

inline void write_node_accumulation(std::ostream& os, const WaitingReport& report) {
  os << "node\twaited_steps\n";
  for (const auto& [node, steps] : report.per_node_accumulated)
    os << node << "\t" << steps << "\n";
}

inline void write_sample_table(std::ostream& os, const SampleSet& ss) {
  os.precision(17);
  os << "assignment\tenergy\toccurrences\n";
  for (const SampleRecord& s : ss.samples) {
    for (std::uint8_t b : s.assignment.bits) os << (b ? '1' : '0');
    os << "\t" << s.energy << "\t" << s.occurrences << "\n";
  }
}

}  // namespace agvq

#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "agvq/qubo.hpp"
#include "agvq/rng.hpp"

namespace agvq {

struct SampleRecord {
  Assignment assignment;
  double energy = 0.0;
  std::uint64_t occurrences = 1;
};

/// Solver output. Samples are aggregated by assignment and sorted by
/// (energy, bits), so equal runs compare equal; timing fields are the only
/// machine-dependent part.
struct SampleSet {
  std::vector<SampleRecord> samples;
  std::uint64_t total_reads = 0;
  double wall_time_s = 0.0;
  double per_sample_time_s = 0.0;  // houses t_c

  std::uint64_t total_occurrences() const {
    std::uint64_t n = 0;
    for (const auto& s : samples) n += s.occurrences;
    return n;
  }
  double min_energy() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) m = std::min(m, s.energy);
    return m;
  }
};

struct AnnealSchedule {
  int sweeps = 100;
  double beta_start = 0.1;
  double beta_end = 5.0;
  int restarts = 1;  // independent anneals per read; the best final state wins
};

struct DynamicOffsetParams {
  double increment = 1.0;  // added to the offset after a step with no accepted flip
};

namespace detail {

/// Incrementally maintained local fields: local[k] = Q_kk + 2 sum_{l!=k} Q_kl q_l,
/// so the energy change of flipping k is (1 - 2 q_k) * local[k].
class LocalFields {
 public:
  LocalFields(const QuboInstance& inst, const std::vector<std::uint8_t>& bits) : inst_(&inst) {
    const std::size_t n = inst.n();
    local_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double f = inst.at(k, k);
      for (std::size_t l = 0; l < n; ++l)
        if (l != k && bits[l]) f += inst.at(k, l) + inst.at(l, k);
      local_[k] = f;
    }
  }

  double flip_delta(std::size_t k, const std::vector<std::uint8_t>& bits) const {
    return bits[k] ? -local_[k] : local_[k];
  }

  /// Call after bits[k] has been toggled.
  void apply_flip(std::size_t k, const std::vector<std::uint8_t>& bits) {
    const double sign = bits[k] ? 1.0 : -1.0;
    const std::size_t n = inst_->n();
    for (std::size_t l = 0; l < n; ++l)
      if (l != k) local_[l] += sign * (inst_->at(l, k) + inst_->at(k, l));
  }

 private:
  const QuboInstance* inst_;
  std::vector<double> local_;
};

inline double geometric_beta(const AnnealSchedule& sched, int step) {
  if (sched.sweeps <= 1) return sched.beta_end;
  const double f = static_cast<double>(step) / static_cast<double>(sched.sweeps - 1);
  return sched.beta_start * std::pow(sched.beta_end / sched.beta_start, f);
}

inline void aggregate_sample(std::map<std::vector<std::uint8_t>, std::uint64_t>& acc,
                             const std::vector<std::uint8_t>& bits) {
  ++acc[bits];
}

inline SampleSet finalize_samples(const QuboInstance& inst,
                                  const std::map<std::vector<std::uint8_t>, std::uint64_t>& acc,
                                  std::uint64_t total_reads, double wall_s) {
  SampleSet out;
  out.total_reads = total_reads;
  out.wall_time_s = wall_s;
  out.per_sample_time_s = total_reads > 0 ? wall_s / static_cast<double>(total_reads) : 0.0;
  out.samples.reserve(acc.size());
  for (const auto& [bits, count] : acc)
    out.samples.push_back({Assignment{bits}, energy_matrix(inst, Assignment{bits}), count});
  std::sort(out.samples.begin(), out.samples.end(), [](const SampleRecord& a, const SampleRecord& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return a.assignment.bits < b.assignment.bits;
  });
  return out;
}

}  // namespace detail

/// Enumerates all 2^n assignments (Gray-code order, incremental energies) and
/// returns every global minimum with occurrences = 1. Refuses n > 24.
inline SampleSet brute_force(const QuboInstance& inst) {
  const std::size_t n = inst.n();
  if (n > 24)
    throw std::invalid_argument("brute_force: refused, " + std::to_string(n) +
                                " variables exceeds the n <= 24 cost guard");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::uint8_t> bits(n, 0);
  detail::LocalFields fields(inst, bits);
  double energy = inst.constant();
  double best = energy;
  std::vector<std::uint32_t> minima{0};  // packed assignments (bit j = variable j)
  std::uint32_t packed = 0;
  const std::uint64_t total = n == 0 ? 1 : (1ULL << n);
  for (std::uint64_t k = 1; k < total; ++k) {
    const std::size_t flip = static_cast<std::size_t>(std::countr_zero(k));
    energy += fields.flip_delta(flip, bits);
    bits[flip] ^= 1;
    fields.apply_flip(flip, bits);
    packed ^= (1u << flip);
    if (energy < best) {
      best = energy;
      minima.clear();
      minima.push_back(packed);
    } else if (energy == best) {
      minima.push_back(packed);
    }
  }
  std::sort(minima.begin(), minima.end());
  SampleSet out;
  out.total_reads = 1;
  for (std::uint32_t m : minima) {
    Assignment a;
    a.bits.resize(n);
    for (std::size_t j = 0; j < n; ++j) a.bits[j] = (m >> j) & 1u;
    out.samples.push_back({a, energy_matrix(inst, a), 1});
  }
  std::sort(out.samples.begin(), out.samples.end(), [](const SampleRecord& a, const SampleRecord& b) {
    return a.assignment.bits < b.assignment.bits;
  });
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.per_sample_time_s = out.wall_time_s;
  return out;
}

/// Kirkpatrick-style single-flip Metropolis annealing: each read runs
/// `restarts` independent anneals from random states and keeps the best
/// final state. Deterministic given (instance, schedule, num_reads, seed).
inline SampleSet simulated_annealing(const QuboInstance& inst, const AnnealSchedule& sched,
                                     std::uint64_t num_reads, std::uint64_t seed) {
  if (num_reads < 1) throw std::invalid_argument("simulated_annealing: num_reads must be >= 1");
  if (sched.sweeps < 1 || sched.beta_start <= 0.0 || sched.beta_end < sched.beta_start ||
      sched.restarts < 1)
    throw std::invalid_argument("simulated_annealing: bad schedule");
  const std::size_t n = inst.n();
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::vector<std::uint8_t>, std::uint64_t> acc;
  for (std::uint64_t read = 0; read < num_reads; ++read) {
    Rng rng(derive_seed(seed, read));
    std::vector<std::uint8_t> best_bits;
    double best_energy = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < sched.restarts; ++restart) {
      std::vector<std::uint8_t> bits(n);
      for (auto& b : bits) b = rng.next_bool() ? 1 : 0;
      detail::LocalFields fields(inst, bits);
      for (int sweep = 0; sweep < sched.sweeps; ++sweep) {
        const double beta = detail::geometric_beta(sched, sweep);
        for (std::size_t k = 0; k < n; ++k) {
          const double delta = fields.flip_delta(k, bits);
          if (delta <= 0.0 || rng.next_unit() < std::exp(-beta * delta)) {
            bits[k] ^= 1;
            fields.apply_flip(k, bits);
          }
        }
      }
      const double e = energy_matrix(inst, Assignment{bits});
      if (e < best_energy || (e == best_energy && bits < best_bits)) {
        best_energy = e;
        best_bits = bits;
      }
    }
    detail::aggregate_sample(acc, best_bits);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return detail::finalize_samples(inst, acc, num_reads, wall);
}

/// One parallel-trial chain with a dynamic offset, exposed so tests can pin
/// the state and watch the escape mechanism directly.
///
/// Per step the Metropolis test is evaluated for every variable's single
/// flip against the current state with an effective dE' = dE - offset. If at
/// least one flip accepts, one accepted flip is chosen uniformly at random
/// and applied and the offset resets to zero; otherwise the offset grows by
/// `increment`, eventually overcoming any finite barrier.
class PtsaChain {
 public:
  PtsaChain(const QuboInstance& inst, DynamicOffsetParams dyn, std::uint64_t seed)
      : inst_(&inst), dyn_(dyn), rng_(seed), bits_(inst.n(), 0), fields_(inst, bits_) {}

  void randomize_state() {
    for (auto& b : bits_) b = rng_.next_bool() ? 1 : 0;
    fields_ = detail::LocalFields(*inst_, bits_);
    offset_ = 0.0;
  }

  void set_state(const std::vector<std::uint8_t>& bits) {
    bits_ = bits;
    fields_ = detail::LocalFields(*inst_, bits_);
    offset_ = 0.0;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  double offset() const { return offset_; }

  /// Returns true when a flip was applied.
  bool step(double beta) {
    const std::size_t n = inst_->n();
    acceptors_.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const double shifted = fields_.flip_delta(k, bits_) - offset_;
      if (shifted <= 0.0 || rng_.next_unit() < std::exp(-beta * shifted))
        acceptors_.push_back(k);
    }
    if (acceptors_.empty()) {
      offset_ += dyn_.increment;
      return false;
    }
    const std::size_t pick =
        acceptors_[static_cast<std::size_t>(rng_.next_below(acceptors_.size()))];
    bits_[pick] ^= 1;
    fields_.apply_flip(pick, bits_);
    offset_ = 0.0;
    return true;
  }

 private:
  const QuboInstance* inst_;
  DynamicOffsetParams dyn_;
  Rng rng_;
  std::vector<std::uint8_t> bits_;
  detail::LocalFields fields_;
  double offset_ = 0.0;
  std::vector<std::size_t> acceptors_;
};

/// Parallel-trial SA (digital-annealer style scheme): `sched.sweeps` steps
/// per anneal, where one step attempts all variables in parallel.
inline SampleSet parallel_trial_sa(const QuboInstance& inst, const AnnealSchedule& sched,
                                   DynamicOffsetParams dyn, std::uint64_t num_reads,
                                   std::uint64_t seed) {
  if (num_reads < 1) throw std::invalid_argument("parallel_trial_sa: num_reads must be >= 1");
  if (sched.sweeps < 1 || sched.beta_start <= 0.0 || sched.beta_end < sched.beta_start ||
      sched.restarts < 1)
    throw std::invalid_argument("parallel_trial_sa: bad schedule");
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::vector<std::uint8_t>, std::uint64_t> acc;
  for (std::uint64_t read = 0; read < num_reads; ++read) {
    PtsaChain chain(inst, dyn, derive_seed(seed, read));
    std::vector<std::uint8_t> best_bits;
    double best_energy = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < sched.restarts; ++restart) {
      chain.randomize_state();
      for (int step = 0; step < sched.sweeps; ++step) chain.step(detail::geometric_beta(sched, step));
      const double e = energy_matrix(inst, Assignment{chain.bits()});
      if (e < best_energy || (e == best_energy && chain.bits() < best_bits)) {
        best_energy = e;
        best_bits = chain.bits();
      }
    }
    detail::aggregate_sample(acc, best_bits);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return detail::finalize_samples(inst, acc, num_reads, wall);
}

/// Pre-QUBO form of one planning round, mirroring the inputs of build_qubo.
/// `reward` equals d unless a caller adds preference bonuses; `occupancy`
/// holds whichever conflict marks the caller wants enforced.
struct StructuredCandidate {
  int d = 0;
  double reward = 0.0;
  std::vector<StepMark> occupancy;
};

struct StructuredInstance {
  std::vector<std::vector<StructuredCandidate>> agvs;
  int horizon = 0;
};

struct ExactResult {
  Assignment assignment;
  double energy = 0.0;
  double total_reward = 0.0;
  bool feasible = false;
};

/// Deterministic depth-first branch and bound over one-route-per-AGV choices
/// in fixed AGV order. Prunes on (a) resource conflicts with committed
/// choices and (b) the bound current reward + best remaining rewards <= best
/// found. Candidates are tried in descending reward order and ties keep the
/// first solution found, so among equal-total plans the lower-indexed AGV
/// gets the longer route (the documented determinism bias).
inline ExactResult exact_search(const StructuredInstance& s, PenaltyWeights w) {
  const std::size_t agv_count = s.agvs.size();
  std::vector<std::size_t> offset(agv_count, 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < agv_count; ++i) {
    if (s.agvs[i].empty()) throw std::invalid_argument("exact_search: AGV without candidates");
    offset[i] = n;
    n += s.agvs[i].size();
  }

  std::vector<std::vector<std::uint32_t>> order(agv_count);
  for (std::size_t i = 0; i < agv_count; ++i) {
    order[i].resize(s.agvs[i].size());
    for (std::uint32_t mu = 0; mu < order[i].size(); ++mu) order[i][mu] = mu;
    std::stable_sort(order[i].begin(), order[i].end(), [&](std::uint32_t a, std::uint32_t b) {
      return s.agvs[i][a].reward > s.agvs[i][b].reward;
    });
  }
  std::vector<double> suffix_best(agv_count + 1, 0.0);
  for (std::size_t i = agv_count; i-- > 0;) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : s.agvs[i]) best = std::max(best, c.reward);
    suffix_best[i] = suffix_best[i + 1] + best;
  }

  std::vector<std::uint32_t> chosen(agv_count, 0), best_choice;
  double best_reward = -std::numeric_limits<double>::infinity();
  std::set<StepMark> used;

  auto conflicts = [&used](const StructuredCandidate& c) {
    for (const StepMark& m : c.occupancy)
      if (used.count(m)) return true;
    return false;
  };

  auto dfs = [&](auto&& self, std::size_t i, double reward) -> void {
    if (i == agv_count) {
      if (reward > best_reward) {
        best_reward = reward;
        best_choice = chosen;
      }
      return;
    }
    if (reward + suffix_best[i] <= best_reward) return;
    for (std::uint32_t mu : order[i]) {
      const StructuredCandidate& c = s.agvs[i][mu];
      if (conflicts(c)) continue;
      used.insert(c.occupancy.begin(), c.occupancy.end());
      chosen[i] = mu;
      self(self, i + 1, reward + c.reward);
      for (const StepMark& m : c.occupancy) used.erase(m);
    }
  };
  dfs(dfs, 0, 0.0);

  ExactResult out;
  out.feasible = !best_choice.empty() || agv_count == 0;
  if (!out.feasible) {
    // All-stop fallback: pick each AGV's zero-hop candidate.
    best_choice.assign(agv_count, 0);
    for (std::size_t i = 0; i < agv_count; ++i) {
      bool found = false;
      for (std::uint32_t mu = 0; mu < s.agvs[i].size(); ++mu)
        if (s.agvs[i][mu].d == 0) {
          best_choice[i] = mu;
          found = true;
          break;
        }
      if (!found) throw std::invalid_argument("exact_search: AGV without a stop candidate");
    }
  }
  out.assignment.bits.assign(n, 0);
  out.total_reward = 0.0;
  for (std::size_t i = 0; i < agv_count; ++i) {
    out.assignment.bits[offset[i] + best_choice[i]] = 1;
    out.total_reward += s.agvs[i][best_choice[i]].reward;
  }
  out.energy = energy_direct(s.agvs, w, out.assignment, s.horizon);
  return out;
}

/// Weighted fraction of samples at or below ground_energy + tol.
inline double ground_state_probability(const SampleSet& ss, double ground_energy, double tol) {
  if (ss.samples.empty()) throw std::invalid_argument("ground_state_probability: empty sample set");
  std::uint64_t hits = 0, total = 0;
  for (const auto& s : ss.samples) {
    total += s.occurrences;
    if (s.energy <= ground_energy + tol) hits += s.occurrences;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace agvq

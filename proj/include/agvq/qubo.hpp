#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agvq/routing.hpp"

namespace agvq {

struct Assignment {
  std::vector<std::uint8_t> bits;  // entries in {0,1}
  friend bool operator==(const Assignment&, const Assignment&) = default;
  friend auto operator<=>(const Assignment&, const Assignment&) = default;
};

struct PenaltyWeights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Flat variable k <-> (AGV position i in the per-AGV lists, candidate mu).
struct VarKey {
  std::uint32_t agv_index = 0;
  std::uint32_t mu = 0;
  friend bool operator==(const VarKey&, const VarKey&) = default;
};

/// Compiled penalty-form QUBO: minimize q^T Q q + constant over binary q.
/// Q is stored dense and symmetric with both off-diagonal halves populated
/// (each half carries half the pairwise coefficient); the diagonal carries
/// the linear terms via q^2 = q.
class QuboInstance {
 public:
  QuboInstance() = default;
  explicit QuboInstance(std::size_t n) : n_(n), q_(n * n, 0.0) {}

  std::size_t n() const { return n_; }
  double constant() const { return constant_; }
  double& constant() { return constant_; }
  double at(std::size_t i, std::size_t j) const { return q_[i * n_ + j]; }
  double& at(std::size_t i, std::size_t j) { return q_[i * n_ + j]; }

  const std::vector<VarKey>& index_map() const { return index_map_; }
  std::vector<VarKey>& index_map() { return index_map_; }
  const std::vector<StepMark>& resource_index() const { return resource_index_; }
  std::vector<StepMark>& resource_index() { return resource_index_; }

  /// Flat index of (agv_index, mu); index_map is bijective by construction.
  std::size_t var(std::uint32_t agv_index, std::uint32_t mu) const {
    for (std::size_t k = 0; k < index_map_.size(); ++k)
      if (index_map_[k].agv_index == agv_index && index_map_[k].mu == mu) return k;
    throw std::out_of_range("qubo: no variable for the given (agv, route) pair");
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (double v : q_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> q_;
  double constant_ = 0.0;
  std::vector<VarKey> index_map_;
  std::vector<StepMark> resource_index_;
};

namespace detail {

/// (t, resource) pairs with at least one nonzero F among the candidates.
/// Pairs no candidate can occupy would only add a constant and are skipped;
/// the constant for included-but-unselected pairs is kept so the penalty
/// expression is evaluated literally.
template <typename CandidateLists>
std::vector<StepMark> collect_resource_index(const CandidateLists& candidates) {
  std::set<StepMark> marks;
  for (const auto& list : candidates)
    for (const auto& c : list) marks.insert(c.occupancy.begin(), c.occupancy.end());
  return {marks.begin(), marks.end()};
}

}  // namespace detail

/// Compiles one planning round into the penalty-form QUBO
///   f(q) = -sum d_mu q + lambda1 * sum_i (sum_mu q - 1)^2
///        + lambda2 * sum_(t,r) (sum F q - 1)^2.
/// Candidate lists are per-AGV; every AGV must have at least one candidate
/// (the stop candidate always exists).
template <typename CandidateLists>
QuboInstance build_qubo(const CandidateLists& candidates, PenaltyWeights w, int horizon) {
  (void)horizon;  // occupancies are already materialized over the horizon
  std::size_t n = 0;
  std::vector<std::size_t> offset;
  offset.reserve(std::size(candidates));
  for (const auto& list : candidates) {
    if (list.empty())
      throw std::invalid_argument("build_qubo: an AGV has no candidates (stop must exist)");
    offset.push_back(n);
    n += list.size();
  }

  QuboInstance inst(n);
  auto& index_map = inst.index_map();
  index_map.resize(n);
  for (std::size_t i = 0; i < offset.size(); ++i) {
    const auto& list = candidates[i];
    for (std::size_t mu = 0; mu < list.size(); ++mu)
      index_map[offset[i] + mu] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(mu)};
  }

  // Route-length reward.
  for (std::size_t i = 0; i < offset.size(); ++i)
    for (std::size_t mu = 0; mu < candidates[i].size(); ++mu)
      inst.at(offset[i] + mu, offset[i] + mu) -= static_cast<double>(candidates[i][mu].d);

  // One-route-per-AGV penalty.
  for (std::size_t i = 0; i < offset.size(); ++i) {
    const std::size_t m = candidates[i].size();
    for (std::size_t mu = 0; mu < m; ++mu) {
      inst.at(offset[i] + mu, offset[i] + mu) -= w.lambda1;
      for (std::size_t nu = mu + 1; nu < m; ++nu) {
        inst.at(offset[i] + mu, offset[i] + nu) += w.lambda1;
        inst.at(offset[i] + nu, offset[i] + mu) += w.lambda1;
      }
    }
    inst.constant() += w.lambda1;
  }

  // Collision penalty over occupied (t, resource) pairs.
  inst.resource_index() = detail::collect_resource_index(candidates);
  for (const StepMark& mark : inst.resource_index()) {
    std::vector<std::size_t> holders;
    for (std::size_t i = 0; i < offset.size(); ++i)
      for (std::size_t mu = 0; mu < candidates[i].size(); ++mu) {
        const auto& occ = candidates[i][mu].occupancy;
        if (std::find(occ.begin(), occ.end(), mark) != occ.end())
          holders.push_back(offset[i] + mu);
      }
    for (std::size_t a = 0; a < holders.size(); ++a) {
      inst.at(holders[a], holders[a]) -= w.lambda2;
      for (std::size_t b = a + 1; b < holders.size(); ++b) {
        inst.at(holders[a], holders[b]) += w.lambda2;
        inst.at(holders[b], holders[a]) += w.lambda2;
      }
    }
    inst.constant() += w.lambda2;
  }
  return inst;
}

inline double energy_matrix(const QuboInstance& inst, const Assignment& a) {
  if (a.bits.size() != inst.n())
    throw std::invalid_argument("energy_matrix: assignment length " +
                                std::to_string(a.bits.size()) + " != variable count " +
                                std::to_string(inst.n()));
  double e = inst.constant();
  for (std::size_t i = 0; i < inst.n(); ++i) {
    if (!a.bits[i]) continue;
    e += inst.at(i, i);
    for (std::size_t j = i + 1; j < inst.n(); ++j)
      if (a.bits[j]) e += inst.at(i, j) + inst.at(j, i);
  }
  return e;
}

/// Term-by-term evaluation of the penalty expression without building Q;
/// the independent oracle for energy_matrix.
template <typename CandidateLists>
double energy_direct(const CandidateLists& candidates, PenaltyWeights w, const Assignment& a,
                     int horizon) {
  (void)horizon;
  std::size_t n = 0;
  for (const auto& list : candidates) {
    if (list.empty())
      throw std::invalid_argument("energy_direct: an AGV has no candidates (stop must exist)");
    n += list.size();
  }
  if (a.bits.size() != n)
    throw std::invalid_argument("energy_direct: assignment length mismatch");

  double reward = 0.0;
  double one_hot = 0.0;
  std::size_t k = 0;
  std::map<StepMark, int> claimed;
  for (const auto& list : candidates) {
    int selected = 0;
    for (const auto& c : list) {
      if (a.bits[k]) {
        reward -= static_cast<double>(c.d);
        ++selected;
        for (const StepMark& mark : c.occupancy) ++claimed[mark];
      }
      ++k;
    }
    const double r = static_cast<double>(selected) - 1.0;
    one_hot += r * r;
  }
  double collision = 0.0;
  for (const StepMark& mark : detail::collect_resource_index(candidates)) {
    auto it = claimed.find(mark);
    const double r = (it == claimed.end() ? 0.0 : static_cast<double>(it->second)) - 1.0;
    collision += r * r;
  }
  return reward + w.lambda1 * one_hot + w.lambda2 * collision;
}

/// Scales all coefficients and the constant so the largest magnitude equals
/// max_abs; an all-zero matrix is returned unchanged. Minimizers are
/// preserved (uniform positive scaling).
inline QuboInstance rescale(const QuboInstance& inst, double max_abs) {
  if (max_abs <= 0.0) throw std::invalid_argument("rescale: max_abs must be > 0");
  const double current = inst.max_abs_coefficient();
  if (current == 0.0) return inst;
  const double s = max_abs / current;
  QuboInstance out = inst;
  for (std::size_t i = 0; i < out.n(); ++i)
    for (std::size_t j = 0; j < out.n(); ++j) out.at(i, j) *= s;
  out.constant() *= s;
  return out;
}

// ---------------------------------------------------------------------------
// Sparse text format (docs/formats.md): comment lines start with '#';
// then `n <count>`, `constant <value>`, one `map <k> <agv> <mu>` line per
// variable, and `<i> <j> <value>` coefficient rows where i == j carries the
// linear term and i < j carries the full pairwise coefficient.
// ---------------------------------------------------------------------------

inline void write_qubo_text(std::ostream& os, const QuboInstance& inst) {
  os.precision(17);
  os << "# agvq qubo v1\n";
  os << "n " << inst.n() << "\n";
  os << "constant " << inst.constant() << "\n";
  for (std::size_t k = 0; k < inst.index_map().size(); ++k)
    os << "map " << k << " " << inst.index_map()[k].agv_index << " " << inst.index_map()[k].mu
       << "\n";
  for (std::size_t i = 0; i < inst.n(); ++i)
    for (std::size_t j = i; j < inst.n(); ++j) {
      const double v = i == j ? inst.at(i, i) : inst.at(i, j) + inst.at(j, i);
      if (v != 0.0) os << i << " " << j << " " << v << "\n";
    }
}

inline QuboInstance read_qubo_text(std::istream& is) {
  QuboInstance inst;
  bool have_n = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    auto fail = [&](const std::string& why) {
      throw std::runtime_error("qubo instance line " + std::to_string(line_no) + ": " + why);
    };
    if (head == "n") {
      std::size_t n = 0;
      if (!(ss >> n)) fail("expected variable count");
      inst = QuboInstance(n);
      inst.index_map().resize(n);
      have_n = true;
    } else if (head == "constant") {
      if (!have_n) fail("constant before n");
      if (!(ss >> inst.constant())) fail("expected constant value");
    } else if (head == "map") {
      std::size_t k = 0;
      VarKey key;
      if (!have_n || !(ss >> k >> key.agv_index >> key.mu) || k >= inst.n())
        fail("bad map line");
      inst.index_map()[k] = key;
    } else {
      std::size_t i = 0, j = 0;
      double v = 0.0;
      std::istringstream row(line);
      if (!have_n || !(row >> i >> j >> v) || i >= inst.n() || j >= inst.n() || j < i)
        fail("bad coefficient row");
      if (i == j)
        inst.at(i, i) = v;
      else
        inst.at(i, j) = inst.at(j, i) = v / 2.0;
    }
  }
  if (!have_n) throw std::runtime_error("qubo instance: missing 'n' header");
  return inst;
}

}  // namespace agvq

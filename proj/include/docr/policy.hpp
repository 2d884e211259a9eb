#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "docr/estimator.hpp"
#include "docr/metric.hpp"
#include "docr/rng.hpp"

namespace docr {

struct LibraryEntry {
  Context key;
  std::uint64_t action_id = 0;
  std::int64_t created_at = -1;  // round index; -1 for the seed entry
};

/// Append-only map from context keys to action identifiers. Entries keep
/// their insertion order, which is also the tie-breaking order.
class ContextLibrary {
 public:
  ContextLibrary() = default;

  /// Library holding the single seed key 1_d / sqrt(d).
  static ContextLibrary seeded(int d) {
    ContextLibrary lib;
    lib.add(Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d))), -1);
    return lib;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const LibraryEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<LibraryEntry>& entries() const { return entries_; }

  bool contains(const Context& key) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const LibraryEntry& e) { return e.key.size() == key.size() && e.key == key; });
  }

  /// All keys as the columns of a d x size() matrix, in insertion order.
  Eigen::Map<const Matrix> key_matrix() const {
    const Eigen::Index d = entries_.empty() ? 0 : entries_.front().key.size();
    return {flat_.data(), d, static_cast<Eigen::Index>(entries_.size())};
  }

  /// Appends key unless an identical key is already stored. Returns true if
  /// the library grew.
  bool add(const Context& key, std::int64_t round) {
    if (!entries_.empty() && entries_.front().key.size() != key.size())
      throw std::invalid_argument("library: key dimension mismatch");
    if (contains(key)) return false;
    entries_.push_back(LibraryEntry{key, next_action_id_++, round});
    flat_.insert(flat_.end(), key.data(), key.data() + key.size());
    return true;
  }

 private:
  std::vector<LibraryEntry> entries_;
  std::vector<double> flat_;  // column-major copy of the keys
  std::uint64_t next_action_id_ = 0;
};

enum class DecisionKind { kReuse, kCreate };

inline const char* to_string(DecisionKind k) { return k == DecisionKind::kReuse ? "reuse" : "create"; }

struct Decision {
  DecisionKind kind = DecisionKind::kReuse;
  std::size_t key_index = 0;  // reused key (or the candidate that was passed over)
  double chosen_lcb = 0.0;
  double chosen_ucb = 0.0;
  double create_probability = 0.0;

  bool creates() const { return kind == DecisionKind::kCreate; }
};

struct Candidate {
  std::size_t index = 0;
  LossEstimate estimate;
};

/// Entry minimizing the lower confidence bound; ties go to the earliest entry.
inline Candidate select_candidate(const Context& x, const ContextLibrary& lib,
                                  const RidgeEstimator& est) {
  if (lib.empty()) throw std::invalid_argument("select_candidate: empty library");
  const std::vector<LossEstimate> all = est.predict_batch(x, lib.key_matrix());
  Candidate best{0, all[0]};
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].lcb < best.estimate.lcb) {
      best.index = i;
      best.estimate = all[i];
    }
  }
  return best;
}

/// min{1, ucb / c} clamped below at 0.
inline double creation_probability(double ucb, double c) {
  return std::clamp(ucb / c, 0.0, 1.0);
}

/// One round of the doubly-optimistic rule: pick the key with the smallest
/// LCB, then create with probability min{1, UCB/c} of that key. Consumes
/// exactly one uniform draw from rng.
inline Decision doubly_optimistic_decide(const Context& x, const ContextLibrary& lib,
                                         const RidgeEstimator& est, double c, Rng& rng) {
  if (!(c > 0.0)) throw std::invalid_argument("doubly_optimistic_decide: c must be > 0");
  const Candidate cand = select_candidate(x, lib, est);
  Decision dec;
  dec.key_index = cand.index;
  dec.chosen_lcb = cand.estimate.lcb;
  dec.chosen_ucb = cand.estimate.ucb;
  dec.create_probability = creation_probability(cand.estimate.ucb, c);
  dec.kind = uniform01(rng) < dec.create_probability ? DecisionKind::kCreate : DecisionKind::kReuse;
  return dec;
}

/// Index of the key closest to x in Euclidean norm; ties go to the earliest.
inline std::size_t nearest_key(const Context& x, const ContextLibrary& lib) {
  if (lib.empty()) throw std::invalid_argument("nearest_key: empty library");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lib.size(); ++i) {
    const double d = (x - lib[i].key).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Fixed-probability baseline: create with probability p, otherwise reuse the
/// Euclidean-nearest key. Never looks at loss estimates.
inline Decision fixed_p_decide(const Context& x, const ContextLibrary& lib, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("fixed_p_decide: p must lie in [0,1]");
  if (lib.empty()) throw std::invalid_argument("fixed_p_decide: empty library");
  Decision dec;
  dec.create_probability = p;
  dec.key_index = nearest_key(x, lib);
  dec.kind = uniform01(rng) < p ? DecisionKind::kCreate : DecisionKind::kReuse;
  dec.chosen_lcb = std::numeric_limits<double>::quiet_NaN();
  dec.chosen_ucb = std::numeric_limits<double>::quiet_NaN();
  return dec;
}

/// Create appends x (round t) to the library; Reuse leaves it unchanged.
inline ContextLibrary apply_decision(const Decision& dec, const Context& x, ContextLibrary lib,
                                     std::int64_t t) {
  if (dec.creates()) lib.add(x, t);
  return lib;
}

/// One replay of the stopping process behind the creation rule: at step k
/// stop with probability p[k], otherwise add p[k] to the sum.
inline double stopping_process_sum(const std::vector<double>& p, Rng& rng) {
  for (double pk : p)
    if (!(pk >= 0.0 && pk <= 1.0)) throw std::invalid_argument("stopping process: p_k must lie in [0,1]");
  double s = 0.0;
  for (double pk : p) {
    if (uniform01(rng) < pk) break;
    s += pk;
  }
  return s;
}

/// Exact mean of stopping_process_sum: sum_k p_k prod_{i<=k} (1 - p_i).
inline double stopping_process_expectation(const std::vector<double>& p) {
  double s = 0.0, alive = 1.0;
  for (double pk : p) {
    alive *= 1.0 - pk;
    s += pk * alive;
  }
  return s;
}

enum class PolicyKind { kDoublyOptimistic, kFixedP };

inline const char* to_string(PolicyKind k) {
  return k == PolicyKind::kDoublyOptimistic ? "doubly_optimistic" : "fixed_p";
}

inline PolicyKind policy_from_string(const std::string& s) {
  if (s == "doubly_optimistic" || s == "dopt") return PolicyKind::kDoublyOptimistic;
  if (s == "fixed_p" || s == "fixed") return PolicyKind::kFixedP;
  throw std::invalid_argument("unknown policy '" + s + "' (expected doubly_optimistic or fixed_p)");
}

}  // namespace docr

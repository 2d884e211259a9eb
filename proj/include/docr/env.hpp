#pragma once

// Synthetic environment: context stream, noisy loss feedback and the
// episode loop. The ground truth never leaves this layer except through
// observed losses and evaluation-only true losses.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docr/estimator.hpp"
#include "docr/metric.hpp"
#include "docr/policy.hpp"
#include "docr/rng.hpp"

namespace docr {

/// T i.i.d. draws of U([0,1]^d), each L2-normalized.
inline std::vector<Context> sample_context_stream(int d, std::int64_t T, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("sample_context_stream: d must be >= 2");
  if (T < 1) throw std::invalid_argument("sample_context_stream: T must be >= 1");
  Rng rng(seed);
  std::vector<Context> out;
  out.reserve(static_cast<std::size_t>(T));
  for (std::int64_t t = 0; t < T; ++t) {
    Context x(d);
    double n2 = 0.0;
    // A draw of exactly 0 in every coordinate cannot be normalized; redraw.
    do {
      for (int i = 0; i < d; ++i) x(i) = uniform01(rng);
      n2 = x.squaredNorm();
    } while (n2 == 0.0);
    x /= std::sqrt(n2);
    out.push_back(std::move(x));
  }
  return out;
}

/// true_distance(x, f) + N(0, sigma^2).
inline double observe_loss(const Context& x, const Context& f, const GroundTruth& gt, Rng& rng) {
  const double mean = true_distance(x, f, gt);
  if (gt.sigma == 0.0) return mean;
  return mean + std::normal_distribution<double>(0.0, gt.sigma)(rng);
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::kDoublyOptimistic;
  double c = 1.0;       // creation cost (charged for both policies)
  double alpha = 1.0;   // doubly-optimistic only
  double lambda = 1.0;  // doubly-optimistic only
  double p = 0.0;       // fixed-p only

  void validate() const {
    if (!(c > 0.0) || std::isnan(c)) throw std::invalid_argument("policy: c must be > 0");
    if (kind == PolicyKind::kDoublyOptimistic) {
      if (!(alpha > 0.0)) throw std::invalid_argument("policy: alpha must be > 0");
      if (!(lambda > 0.0)) throw std::invalid_argument("policy: lambda must be > 0");
    } else if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("policy: p must lie in [0,1]");
    }
  }
};

struct EpisodeSeeds {
  std::uint64_t noise = 0;
  std::uint64_t decisions = 0;
};

struct RoundOutcome {
  std::int64_t t = 0;  // 1-based
  Decision decision;
  std::size_t chosen_key_index = 0;  // reused key, or the new entry on Create
  double observed_loss = 0.0;        // includes noise; 0 on Create
  double true_loss = 0.0;            // noiseless; 0 on Create
  double cost = 0.0;                 // c on Create, 0 on Reuse
  std::size_t library_size_after = 0;
};

struct RunTrace {
  int d = 0;
  PolicySpec policy;
  EpisodeSeeds seeds;
  GroundTruth ground_truth;
  std::vector<RoundOutcome> outcomes;
  ContextLibrary final_library;
  std::uint64_t estimator_updates = 0;

  std::size_t creations() const {
    std::size_t n = 0;
    for (const auto& o : outcomes) n += o.decision.creates() ? 1 : 0;
    return n;
  }
  double total_cost() const {
    double s = 0.0;
    for (const auto& o : outcomes) s += o.cost;
    return s;
  }
  double total_true_mismatch() const {
    double s = 0.0;
    for (const auto& o : outcomes) s += o.true_loss;
    return s;
  }
  /// c * (library growth) + sum of true mismatch over reuse rounds.
  double total_loss() const { return total_cost() + total_true_mismatch(); }

  /// Running total of cost + true mismatch after each round.
  std::vector<double> cumulative_loss() const {
    std::vector<double> out;
    out.reserve(outcomes.size());
    double s = 0.0;
    for (const auto& o : outcomes) {
      s += o.cost + o.true_loss;
      out.push_back(s);
    }
    return out;
  }
};

/// Runs one episode over a fixed context stream. The library starts from the
/// single seed key; that entry is not charged.
inline RunTrace run_episode(const PolicySpec& policy, const std::vector<Context>& contexts,
                            const GroundTruth& gt, const EpisodeSeeds& seeds) {
  policy.validate();
  if (contexts.empty()) throw std::invalid_argument("run_episode: empty context stream");
  const int d = static_cast<int>(gt.dim());
  for (const auto& x : contexts) validate_context(x, d);

  RunTrace trace;
  trace.d = d;
  trace.policy = policy;
  trace.seeds = seeds;
  trace.ground_truth = gt;
  trace.outcomes.reserve(contexts.size());

  Rng noise_rng(seeds.noise);
  Rng decision_rng(seeds.decisions);
  ContextLibrary lib = ContextLibrary::seeded(d);
  const bool learning = policy.kind == PolicyKind::kDoublyOptimistic;
  RidgeEstimator est(d, learning ? policy.lambda : 1.0, learning ? policy.alpha : 1.0);

  std::int64_t t = 0;
  for (const Context& x : contexts) {
    ++t;
    const Decision dec = learning ? doubly_optimistic_decide(x, lib, est, policy.c, decision_rng)
                                  : fixed_p_decide(x, lib, policy.p, decision_rng);
    RoundOutcome out;
    out.t = t;
    out.decision = dec;
    if (dec.creates()) {
      out.cost = policy.c;
      lib = apply_decision(dec, x, std::move(lib), t);
      out.chosen_key_index = lib.size() - 1;
    } else {
      const Context& f = lib[dec.key_index].key;
      out.chosen_key_index = dec.key_index;
      out.true_loss = true_distance(x, f, gt);
      out.observed_loss = observe_loss(x, f, gt, noise_rng);
      if (learning) est.update(x, f, out.observed_loss);
    }
    out.library_size_after = lib.size();
    trace.outcomes.push_back(out);
  }
  trace.final_library = std::move(lib);
  trace.estimator_updates = learning ? est.update_count() : 0;
  return trace;
}

inline RunTrace run_episode(const PolicySpec& policy, int d, std::int64_t T, const GroundTruth& gt,
                            std::uint64_t context_seed, const EpisodeSeeds& seeds) {
  if (gt.dim() != d) throw std::invalid_argument("run_episode: ground truth dimension differs from d");
  return run_episode(policy, sample_context_stream(d, T, context_seed), gt, seeds);
}

/// Shortest round-trippable decimal for a double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kTraceCsvHeader =
    "t,decision,chosen_key_index,create_prob,observed_loss,true_loss,cost,lib_size";

inline void write_trace_csv(const RunTrace& trace, std::ostream& os) {
  os << kTraceCsvHeader << '\n';
  for (const auto& o : trace.outcomes) {
    os << o.t << ',' << to_string(o.decision.kind) << ',' << o.chosen_key_index << ','
       << format_double(o.decision.create_probability) << ',' << format_double(o.observed_loss) << ','
       << format_double(o.true_loss) << ',' << format_double(o.cost) << ',' << o.library_size_after
       << '\n';
  }
}

inline nlohmann::json policy_to_json(const PolicySpec& p) {
  nlohmann::json j = {{"policy", to_string(p.kind)}, {"c", p.c}};
  if (p.kind == PolicyKind::kDoublyOptimistic) {
    j["alpha"] = p.alpha;
    j["lambda"] = p.lambda;
  } else {
    j["p"] = p.p;
  }
  return j;
}

/// JSON sidecar for a trace CSV: config, seeds, ground truth and totals.
inline nlohmann::json trace_sidecar(const RunTrace& trace) {
  nlohmann::json keys = nlohmann::json::array();
  for (const auto& e : trace.final_library.entries())
    keys.push_back({{"key", vector_to_json(e.key)}, {"action_id", e.action_id}, {"created_at", e.created_at}});
  return {{"schema_version", 1},
          {"d", trace.d},
          {"T", trace.outcomes.size()},
          {"policy", policy_to_json(trace.policy)},
          {"seeds", {{"noise", trace.seeds.noise}, {"decisions", trace.seeds.decisions}}},
          {"ground_truth", to_json(trace.ground_truth)},
          {"totals",
           {{"creations", trace.creations()},
            {"creation_cost", trace.total_cost()},
            {"true_mismatch", trace.total_true_mismatch()},
            {"total_loss", trace.total_loss()},
            {"estimator_updates", trace.estimator_updates}}},
          {"final_library", std::move(keys)}};
}

}  // namespace docr

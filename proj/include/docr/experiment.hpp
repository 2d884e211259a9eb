#pragma once

// Regret-vs-T runs with log-log slope fits, and generation-cost vs
// mismatch-loss tradeoff sweeps with Wald confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "docr/env.hpp"
#include "docr/metric.hpp"
#include "docr/oracle.hpp"
#include "docr/parallel.hpp"
#include "docr/rng.hpp"

namespace docr {

inline constexpr double kWaldZ = 1.96;

/// `count` geometrically spaced rounds from `start` to T (deduplicated after
/// rounding), plus any extra rounds in [1, T]. Horizons below `start` fall
/// back to a grid starting at 1.
inline std::vector<std::int64_t> checkpoint_grid(std::int64_t T, std::size_t count = 20,
                                                 std::int64_t start = 100,
                                                 const std::vector<std::int64_t>& extras = {}) {
  if (T < 1) throw std::invalid_argument("checkpoint_grid: T must be >= 1");
  if (count < 1) throw std::invalid_argument("checkpoint_grid: count must be >= 1");
  std::set<std::int64_t> pts;
  const std::int64_t lo = std::min(start, T) < 1 ? 1 : std::min(start, T);
  if (count == 1 || lo == T) {
    pts.insert(T);
  } else {
    const double ratio = std::log(static_cast<double>(T) / lo) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k)
      pts.insert(std::clamp<std::int64_t>(std::llround(lo * std::exp(ratio * static_cast<double>(k))), 1, T));
  }
  pts.insert(T);
  for (std::int64_t e : extras)
    if (e >= 1 && e <= T) pts.insert(e);
  return {pts.begin(), pts.end()};
}

struct RegretCheckpoint {
  std::int64_t t = 0;
  double alg = 0.0;    // cumulative creation cost + true mismatch up to t
  double opt_o = 0.0;  // K-means approximation on the first t contexts
  double regret = 0.0;
};

struct RegretSeries {
  std::size_t epoch = 0;
  int d = 0;
  std::vector<RegretCheckpoint> checkpoints;
};

struct RegretConfig {
  int d = 2;
  std::int64_t T = 10000;
  PolicySpec policy;
  double sigma = 0.05;
  double w_max = 1.0;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  std::size_t checkpoint_count = 20;
  std::int64_t checkpoint_start = 100;
  std::vector<std::int64_t> checkpoint_extras;
  KMeansOptions kmeans;
  std::size_t jobs = 1;
};

/// One epoch: fresh W and context stream, one episode, and the regret
/// against the OPT_o approximation of each prefix.
inline RegretSeries run_regret_epoch(const RegretConfig& cfg, std::size_t epoch) {
  const std::uint64_t e = epoch;
  const GroundTruth gt = sample_ground_truth(cfg.d, cfg.w_max, cfg.sigma,
                                             derive_seed(cfg.seed, {e, stream::kGroundTruth}));
  const std::vector<Context> xs = sample_context_stream(cfg.d, cfg.T, derive_seed(cfg.seed, {e, stream::kContexts}));
  const EpisodeSeeds seeds{derive_seed(cfg.seed, {e, stream::kNoise}),
                           derive_seed(cfg.seed, {e, stream::kDecisions})};
  const RunTrace trace = run_episode(cfg.policy, xs, gt, seeds);
  const std::vector<double> cum = trace.cumulative_loss();

  RegretSeries series;
  series.epoch = epoch;
  series.d = cfg.d;
  for (std::int64_t t : checkpoint_grid(cfg.T, cfg.checkpoint_count, cfg.checkpoint_start, cfg.checkpoint_extras)) {
    const std::vector<Context> prefix(xs.begin(), xs.begin() + t);
    KMeansOptions km = cfg.kmeans;
    km.seed = derive_seed(cfg.seed, {e, stream::kOracle, static_cast<std::uint64_t>(t)});
    RegretCheckpoint cp;
    cp.t = t;
    cp.alg = cum[static_cast<std::size_t>(t - 1)];
    cp.opt_o = opt_o_kmeans(prefix, gt, cfg.policy.c, km).value;
    cp.regret = cp.alg - cp.opt_o;
    series.checkpoints.push_back(cp);
  }
  return series;
}

inline std::vector<RegretSeries> regret_experiment(const RegretConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("regret_experiment: epochs must be >= 1");
  cfg.policy.validate();
  std::vector<RegretSeries> out(cfg.epochs);
  parallel_for(cfg.epochs, cfg.jobs, [&](std::size_t e) { out[e] = run_regret_epoch(cfg, e); });
  return out;
}

/// Per-checkpoint mean of regret across epochs (series must share checkpoints).
inline std::vector<std::pair<double, double>> mean_regret_curve(const std::vector<RegretSeries>& runs) {
  if (runs.empty()) throw std::invalid_argument("mean_regret_curve: no series");
  std::vector<std::pair<double, double>> out;
  const std::size_t n = runs.front().checkpoints.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& r : runs) {
      if (r.checkpoints.size() != n || r.checkpoints[i].t != runs.front().checkpoints[i].t)
        throw std::invalid_argument("mean_regret_curve: series have different checkpoints");
      s += r.checkpoints[i].regret;
    }
    out.emplace_back(static_cast<double>(runs.front().checkpoints[i].t), s / static_cast<double>(runs.size()));
  }
  return out;
}

inline std::vector<std::pair<double, double>> regret_points(const RegretSeries& s) {
  std::vector<std::pair<double, double>> out;
  for (const auto& cp : s.checkpoints) out.emplace_back(static_cast<double>(cp.t), cp.regret);
  return out;
}

inline constexpr double kSlopeEpsilon = 1e-12;
inline constexpr std::size_t kMinTailPoints = 5;

/// Least-squares slope of log(regret) on log(t) over the last tail_fraction
/// of the points. Non-positive regrets are clipped to a small epsilon; an
/// all non-positive tail is an error.
inline double loglog_slope(const std::vector<std::pair<double, double>>& points, double tail_fraction = 0.5) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::invalid_argument("loglog_slope: tail_fraction must lie in (0,1]");
  const auto n = points.size();
  const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  if (tail < kMinTailPoints)
    throw std::invalid_argument("loglog_slope: need at least " + std::to_string(kMinTailPoints) + " tail points");
  const std::size_t first = n - tail;
  bool any_positive = false;
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx, ly;
  for (std::size_t i = first; i < n; ++i) {
    const auto [t, r] = points[i];
    if (!(t > 0.0)) throw std::invalid_argument("loglog_slope: t must be positive");
    if (r > 0.0) any_positive = true;
    lx.push_back(std::log(t));
    ly.push_back(std::log(std::max(r, kSlopeEpsilon)));
    sx += lx.back();
    sy += ly.back();
  }
  if (!any_positive) throw std::domain_error("loglog_slope: regrets are all zero or negative");
  const double mx = sx / static_cast<double>(tail), my = sy / static_cast<double>(tail);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < tail; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("loglog_slope: tail has a single distinct t");
  return sxy / sxx;
}

struct MeanCi {
  double mean = 0.0;
  std::optional<double> half_width;  // empty for a single sample
};

/// Mean and Wald 95% half-width 1.96 * s / sqrt(n) with the n-1 sample std.
inline MeanCi wald_ci(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("wald_ci: no samples");
  MeanCi out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  out.half_width = kWaldZ * sd / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

struct SlopeSummary {
  int d = 0;
  double slope = 0.0;                  // fit of the epoch-mean regret curve
  std::vector<double> epoch_slopes;    // per-epoch fits (NaN when the fit failed)
  std::optional<double> stderr_slope;  // std of epoch slopes / sqrt(n); empty for one epoch
  double tail_fraction = 0.5;
};

inline SlopeSummary summarize_slopes(const std::vector<RegretSeries>& runs, double tail_fraction = 0.5) {
  SlopeSummary s;
  s.d = runs.empty() ? 0 : runs.front().d;
  s.tail_fraction = tail_fraction;
  s.slope = loglog_slope(mean_regret_curve(runs), tail_fraction);
  std::vector<double> ok;
  for (const auto& r : runs) {
    double v = std::numeric_limits<double>::quiet_NaN();
    try {
      v = loglog_slope(regret_points(r), tail_fraction);
      ok.push_back(v);
    } catch (const std::exception&) {
    }
    s.epoch_slopes.push_back(v);
  }
  if (ok.size() >= 2) {
    const MeanCi ci = wald_ci(ok);
    s.stderr_slope = *ci.half_width / kWaldZ;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Tradeoff sweeps.

struct TradeoffRecord {
  PolicyKind policy = PolicyKind::kDoublyOptimistic;
  double sweep_param = 0.0;  // c or p
  std::size_t epoch = 0;
  std::size_t creations = 0;
  double mismatch = 0.0;               // cumulative true mismatch
  double norm_generation_cost = 0.0;   // creations / creations of always-create (= T)
  double norm_mismatch_loss = 0.0;     // mismatch / mismatch of never-create
};

struct TradeoffPoint {
  PolicyKind policy = PolicyKind::kDoublyOptimistic;
  double sweep_param = 0.0;
  MeanCi generation;
  MeanCi mismatch;
};

struct TradeoffConfig {
  int d = 4;
  std::int64_t T = 2000;
  std::vector<double> c_values;
  std::vector<double> p_values;
  double alpha = 1.0;
  double lambda = 1.0;
  double sigma = 0.05;
  double w_max = 1.0;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct TradeoffResult {
  std::vector<TradeoffRecord> records;  // ordered by (policy, sweep value, epoch)
  std::vector<TradeoffPoint> alg_points;
  std::vector<TradeoffPoint> baseline_points;
};

/// Aggregates per-epoch records into mean +- Wald points, one per
/// (policy, sweep value), sorted by mean normalized generation cost.
inline std::vector<TradeoffPoint> aggregate_tradeoff(const std::vector<TradeoffRecord>& records, PolicyKind policy) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    if (r.policy != policy) continue;
    groups[r.sweep_param].first.push_back(r.norm_generation_cost);
    groups[r.sweep_param].second.push_back(r.norm_mismatch_loss);
  }
  std::vector<TradeoffPoint> out;
  for (const auto& [param, vals] : groups)
    out.push_back(TradeoffPoint{policy, param, wald_ci(vals.first), wald_ci(vals.second)});
  std::stable_sort(out.begin(), out.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    return a.generation.mean < b.generation.mean;
  });
  return out;
}

/// Runs every sweep value on identical per-epoch streams (same W, contexts,
/// noise and decision seeds). Generation cost is normalized by the
/// always-create count T; mismatch by the never-create policy's mismatch on
/// the same stream.
inline TradeoffResult tradeoff_experiment(const TradeoffConfig& cfg) {
  if (cfg.c_values.empty() && cfg.p_values.empty())
    throw std::invalid_argument("tradeoff_experiment: empty sweep");
  if (cfg.epochs < 1) throw std::invalid_argument("tradeoff_experiment: epochs must be >= 1");
  for (double c : cfg.c_values)
    if (!(c > 0.0)) throw std::invalid_argument("tradeoff_experiment: c values must be > 0");
  for (double p : cfg.p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("tradeoff_experiment: p values must lie in [0,1]");

  struct Job {
    PolicyKind kind;
    double param;
    std::size_t epoch;
  };
  std::vector<Job> jobs;
  for (double c : cfg.c_values)
    for (std::size_t e = 0; e < cfg.epochs; ++e) jobs.push_back({PolicyKind::kDoublyOptimistic, c, e});
  for (double p : cfg.p_values)
    for (std::size_t e = 0; e < cfg.epochs; ++e) jobs.push_back({PolicyKind::kFixedP, p, e});

  struct Stream {
    GroundTruth gt;
    std::vector<Context> xs;
    EpisodeSeeds seeds;
    double never_create_mismatch = 0.0;
  };
  std::vector<Stream> streams(cfg.epochs);
  parallel_for(cfg.epochs, cfg.jobs, [&](std::size_t e) {
    const std::uint64_t ee = e;
    Stream& s = streams[e];
    s.gt = sample_ground_truth(cfg.d, cfg.w_max, cfg.sigma, derive_seed(cfg.seed, {ee, stream::kGroundTruth}));
    s.xs = sample_context_stream(cfg.d, cfg.T, derive_seed(cfg.seed, {ee, stream::kContexts}));
    s.seeds = {derive_seed(cfg.seed, {ee, stream::kNoise}), derive_seed(cfg.seed, {ee, stream::kDecisions})};
    PolicySpec never{PolicyKind::kFixedP, 1.0, 1.0, 1.0, 0.0};
    s.never_create_mismatch = run_episode(never, s.xs, s.gt, s.seeds).total_true_mismatch();
    if (!(s.never_create_mismatch > 0.0))
      throw std::domain_error("tradeoff_experiment: never-create mismatch is zero (degenerate stream)");
  });

  TradeoffResult result;
  result.records.resize(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Stream& s = streams[job.epoch];
    PolicySpec spec;
    spec.kind = job.kind;
    if (job.kind == PolicyKind::kDoublyOptimistic) {
      spec.c = job.param;
      spec.alpha = cfg.alpha;
      spec.lambda = cfg.lambda;
    } else {
      spec.c = 1.0;
      spec.p = job.param;
    }
    const RunTrace trace = run_episode(spec, s.xs, s.gt, s.seeds);
    TradeoffRecord r;
    r.policy = job.kind;
    r.sweep_param = job.param;
    r.epoch = job.epoch;
    r.creations = trace.creations();
    r.mismatch = trace.total_true_mismatch();
    r.norm_generation_cost = static_cast<double>(r.creations) / static_cast<double>(cfg.T);
    r.norm_mismatch_loss = r.mismatch / s.never_create_mismatch;
    result.records[i] = r;
  });
  result.alg_points = aggregate_tradeoff(result.records, PolicyKind::kDoublyOptimistic);
  result.baseline_points = aggregate_tradeoff(result.records, PolicyKind::kFixedP);
  return result;
}

struct DominanceEntry {
  double sweep_param = 0.0;
  double generation = 0.0;
  double alg_mismatch = 0.0;
  double baseline_mismatch = 0.0;  // interpolated
  double gap = 0.0;                // alg - baseline
  double ci = 0.0;                 // combined half-width sqrt(a^2 + b^2)
  bool matched = false;            // inside the baseline's generation range
  bool weakly_below = false;       // gap <= ci
  bool strictly_below = false;     // gap < -ci
};

struct DominanceReport {
  std::vector<DominanceEntry> entries;
  std::size_t matched = 0;
  double fraction_weakly_below = 0.0;    // over matched points
  double fraction_strictly_below = 0.0;  // over matched points
  bool partial = false;                  // some algorithm points fell outside the baseline range
};

/// Compares the algorithm curve against the linearly interpolated baseline
/// curve at each algorithm point's normalized generation cost.
inline DominanceReport dominance_report(const std::vector<TradeoffPoint>& alg,
                                        const std::vector<TradeoffPoint>& baseline) {
  if (baseline.empty()) throw std::invalid_argument("dominance_report: empty baseline curve");
  for (std::size_t i = 1; i < baseline.size(); ++i)
    if (baseline[i].generation.mean < baseline[i - 1].generation.mean)
      throw std::invalid_argument("dominance_report: baseline not sorted by generation cost");
  DominanceReport rep;
  std::size_t weak = 0, strict = 0;
  for (const auto& a : alg) {
    DominanceEntry e;
    e.sweep_param = a.sweep_param;
    e.generation = a.generation.mean;
    e.alg_mismatch = a.mismatch.mean;
    const double g = a.generation.mean;
    const double lo = baseline.front().generation.mean, hi = baseline.back().generation.mean;
    if (g < lo || g > hi) {
      rep.partial = true;
      rep.entries.push_back(e);
      continue;
    }
    std::size_t j = 0;
    while (j + 1 < baseline.size() && baseline[j + 1].generation.mean < g) ++j;
    const TradeoffPoint& b0 = baseline[j];
    const TradeoffPoint& b1 = baseline[std::min(j + 1, baseline.size() - 1)];
    const double span = b1.generation.mean - b0.generation.mean;
    const double w = span > 0.0 ? (g - b0.generation.mean) / span : 0.0;
    e.baseline_mismatch = (1.0 - w) * b0.mismatch.mean + w * b1.mismatch.mean;
    const double bci = (1.0 - w) * b0.mismatch.half_width.value_or(0.0) + w * b1.mismatch.half_width.value_or(0.0);
    const double aci = a.mismatch.half_width.value_or(0.0);
    e.ci = std::sqrt(aci * aci + bci * bci);
    e.gap = e.alg_mismatch - e.baseline_mismatch;
    e.matched = true;
    e.weakly_below = e.gap <= e.ci;
    e.strictly_below = e.gap < -e.ci;
    ++rep.matched;
    weak += e.weakly_below ? 1 : 0;
    strict += e.strictly_below ? 1 : 0;
    rep.entries.push_back(e);
  }
  if (rep.matched > 0) {
    rep.fraction_weakly_below = static_cast<double>(weak) / static_cast<double>(rep.matched);
    rep.fraction_strictly_below = static_cast<double>(strict) / static_cast<double>(rep.matched);
  }
  return rep;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const TradeoffPoint& p) {
  return {{"policy", to_string(p.policy)},
          {"sweep_param", p.sweep_param},
          {"norm_generation_cost", p.generation.mean},
          {"norm_generation_cost_ci", optional_json(p.generation.half_width)},
          {"norm_mismatch_loss", p.mismatch.mean},
          {"norm_mismatch_loss_ci", optional_json(p.mismatch.half_width)}};
}

inline nlohmann::json to_json(const DominanceReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"sweep_param", e.sweep_param}, {"norm_generation_cost", e.generation},
                       {"alg_mismatch", e.alg_mismatch}, {"baseline_mismatch", e.baseline_mismatch},
                       {"gap", e.gap}, {"ci", e.ci}, {"matched", e.matched},
                       {"weakly_below", e.weakly_below}, {"strictly_below", e.strictly_below}});
  return {{"matched", r.matched}, {"fraction_weakly_below", r.fraction_weakly_below},
          {"fraction_strictly_below", r.fraction_strictly_below}, {"partial", r.partial},
          {"entries", std::move(entries)}};
}

inline nlohmann::json to_json(const SlopeSummary& s) {
  nlohmann::json per = nlohmann::json::array();
  for (double v : s.epoch_slopes) per.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  return {{"d", s.d}, {"slope", s.slope}, {"stderr", optional_json(s.stderr_slope)},
          {"tail_fraction", s.tail_fraction}, {"epoch_slopes", std::move(per)}};
}

}  // namespace docr

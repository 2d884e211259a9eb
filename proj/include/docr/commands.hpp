#pragma once

// The four CLI commands as library functions writing into a given directory.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docr/config.hpp"
#include "docr/env.hpp"
#include "docr/experiment.hpp"
#include "docr/oracle.hpp"

namespace docr {

inline constexpr int kSchemaVersion = 1;

/// Creates <base>/<command>-<UTC timestamp>[-n], never reusing an existing
/// directory.
inline std::filesystem::path make_run_dir(const std::filesystem::path& base, const std::string& command) {
  std::filesystem::create_directories(base);
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream stamp;
  stamp << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
  std::filesystem::path dir = base / stamp.str();
  for (int n = 1; !std::filesystem::create_directory(dir); ++n)
    dir = base / (stamp.str() + "-" + std::to_string(n));
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline PolicySpec policy_spec(const RunConfig& cfg) {
  PolicySpec p;
  p.kind = cfg.policy;
  p.c = cfg.c;
  p.alpha = cfg.alpha;
  p.lambda = cfg.lambda;
  p.p = cfg.p;
  return p;
}

struct SimulateSummary {
  std::size_t creations = 0;
  double creation_cost = 0.0;
  double true_mismatch = 0.0;
  double total_loss = 0.0;
};

/// One episode; writes trace.csv and trace.json.
inline SimulateSummary cmd_simulate(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  cfg.validate();
  const GroundTruth gt = sample_ground_truth(cfg.d, cfg.w_max, cfg.sigma, derive_seed(cfg.seed, {0, stream::kGroundTruth}));
  const EpisodeSeeds seeds{derive_seed(cfg.seed, {0, stream::kNoise}), derive_seed(cfg.seed, {0, stream::kDecisions})};
  const RunTrace trace =
      run_episode(policy_spec(cfg), cfg.d, cfg.T, gt, derive_seed(cfg.seed, {0, stream::kContexts}), seeds);

  std::ostringstream csv;
  write_trace_csv(trace, csv);
  write_text(dir / "trace.csv", csv.str());
  nlohmann::json side = trace_sidecar(trace);
  side["config"] = cfg.to_json();
  side["seed"] = cfg.seed;
  write_json(dir / "trace.json", side);

  SimulateSummary s{trace.creations(), trace.total_cost(), trace.total_true_mismatch(), trace.total_loss()};
  log << "rounds:         " << cfg.T << "\n"
      << "creations:      " << s.creations << "\n"
      << "creation cost:  " << format_double(s.creation_cost) << "\n"
      << "true mismatch:  " << format_double(s.true_mismatch) << "\n"
      << "total loss:     " << format_double(s.total_loss) << "\n";
  return s;
}

inline RegretConfig regret_config(const RunConfig& cfg) {
  RegretConfig r;
  r.d = cfg.d;
  r.T = cfg.T;
  r.policy = policy_spec(cfg);
  r.sigma = cfg.sigma;
  r.w_max = cfg.w_max;
  r.epochs = cfg.epochs;
  r.seed = cfg.seed;
  r.checkpoint_count = cfg.checkpoints;
  r.checkpoint_start = cfg.checkpoint_start;
  r.checkpoint_extras = cfg.checkpoint_extras;
  r.kmeans.restarts = cfg.kmeans_restarts;
  r.kmeans.k_override = cfg.k_grid;
  r.jobs = cfg.jobs;
  return r;
}

/// Regret runs; writes regret.csv and slopes.json. Throws when the slope
/// fit fails.
inline SlopeSummary cmd_regret(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  cfg.validate();
  const std::vector<RegretSeries> runs = regret_experiment(regret_config(cfg));
  std::ostringstream csv;
  csv << "epoch,t,alg,opt_o,regret\n";
  for (const auto& s : runs)
    for (const auto& cp : s.checkpoints)
      csv << s.epoch << ',' << cp.t << ',' << format_double(cp.alg) << ',' << format_double(cp.opt_o) << ','
          << format_double(cp.regret) << '\n';
  write_text(dir / "regret.csv", csv.str());

  const SlopeSummary slopes = summarize_slopes(runs, cfg.tail_fraction);
  nlohmann::json j = to_json(slopes);
  j["schema_version"] = kSchemaVersion;
  j["config"] = cfg.to_json();
  j["note"] = "OPT_o is a K-means upper bound, so regret is under-estimated";
  write_json(dir / "slopes.json", j);
  log << "d=" << cfg.d << " slope=" << format_double(slopes.slope) << " stderr="
      << (slopes.stderr_slope ? format_double(*slopes.stderr_slope) : std::string("null")) << "\n";
  return slopes;
}

struct TradeoffSummary {
  TradeoffResult result;
  DominanceReport dominance;
};

inline TradeoffConfig tradeoff_config(const RunConfig& cfg) {
  TradeoffConfig t;
  t.d = cfg.d;
  t.T = cfg.T;
  t.c_values = cfg.c_values;
  t.p_values = cfg.p_values;
  t.alpha = cfg.alpha;
  t.lambda = cfg.lambda;
  t.sigma = cfg.sigma;
  t.w_max = cfg.w_max;
  t.epochs = cfg.epochs;
  t.seed = cfg.seed;
  t.jobs = cfg.jobs;
  return t;
}

inline nlohmann::json tradeoff_summary_json(const TradeoffResult& result, const DominanceReport& dom) {
  nlohmann::json alg = nlohmann::json::array(), base = nlohmann::json::array();
  for (const auto& p : result.alg_points) alg.push_back(to_json(p));
  for (const auto& p : result.baseline_points) base.push_back(to_json(p));
  return {{"schema_version", kSchemaVersion}, {"alg_points", std::move(alg)},
          {"baseline_points", std::move(base)}, {"dominance", to_json(dom)}};
}

/// Paired tradeoff sweep; writes tradeoff.csv and summary.json.
inline TradeoffSummary cmd_tradeoff(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  cfg.validate();
  TradeoffSummary s;
  s.result = tradeoff_experiment(tradeoff_config(cfg));
  std::ostringstream csv;
  csv << "policy,sweep_param,epoch,creations,mismatch,norm_generation_cost,norm_mismatch_loss\n";
  for (const auto& r : s.result.records)
    csv << to_string(r.policy) << ',' << format_double(r.sweep_param) << ',' << r.epoch << ',' << r.creations << ','
        << format_double(r.mismatch) << ',' << format_double(r.norm_generation_cost) << ','
        << format_double(r.norm_mismatch_loss) << '\n';
  write_text(dir / "tradeoff.csv", csv.str());

  if (!s.result.alg_points.empty() && !s.result.baseline_points.empty())
    s.dominance = dominance_report(s.result.alg_points, s.result.baseline_points);
  nlohmann::json j = tradeoff_summary_json(s.result, s.dominance);
  j["config"] = cfg.to_json();
  write_json(dir / "summary.json", j);
  log << "matched points: " << s.dominance.matched << "\n"
      << "weakly below baseline: " << format_double(s.dominance.fraction_weakly_below) << "\n"
      << "strictly below baseline: " << format_double(s.dominance.fraction_strictly_below) << "\n";
  return s;
}

struct OracleInstance {
  std::vector<Context> contexts;
  GroundTruth gt;
  double c = 1.0;
};

/// Instance JSON: {"c": .., "contexts": [[..]..], "W": [[..]..]} or
/// {"c": .., "generator": {"d": .., "T": .., "seed": .., "w_max": ..}}.
inline OracleInstance load_instance(const nlohmann::json& j, const RunConfig& cfg) {
  OracleInstance inst;
  inst.c = j.value("c", cfg.c);
  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    const int d = g.value("d", cfg.d);
    const auto T = g.value("T", cfg.T);
    const auto seed = g.value("seed", cfg.seed);
    inst.gt = sample_ground_truth(d, g.value("w_max", cfg.w_max), 0.0, derive_seed(seed, {0, stream::kGroundTruth}));
    inst.contexts = sample_context_stream(d, T, derive_seed(seed, {0, stream::kContexts}));
  } else {
    inst.gt.W = matrix_from_json(j.at("W"));
    if (!is_psd(inst.gt.W)) throw std::invalid_argument("instance: W is not symmetric PSD");
    for (const auto& row : j.at("contexts")) {
      Context x = vector_from_json(row);
      validate_context(x, inst.gt.dim());
      inst.contexts.push_back(std::move(x));
    }
    if (inst.contexts.empty()) throw std::invalid_argument("instance: no contexts");
  }
  if (!(inst.c > 0.0)) throw std::invalid_argument("instance: c must be > 0");
  return inst;
}

inline BenchmarkResult run_oracle_method(const std::string& method, const OracleInstance& inst, const RunConfig& cfg) {
  if (method == "kmeans") {
    KMeansOptions km;
    km.restarts = cfg.kmeans_restarts;
    km.k_override = cfg.k_grid;
    km.seed = derive_seed(cfg.seed, {0, stream::kOracle});
    return opt_o_kmeans(inst.contexts, inst.gt, inst.c, km);
  }
  if (method == "covering") return opt_covering(inst.contexts, inst.gt, inst.c);
  if (method == "bruteforce_h") return opt_h_bruteforce(inst.contexts, inst.gt, inst.c);
  if (method == "exhaustive_o") return opt_o_exhaustive(inst.contexts, inst.gt, inst.c);
  throw std::invalid_argument("unknown oracle method '" + method + "'");
}

/// Runs the configured benchmark methods; writes oracle.json.
inline std::vector<BenchmarkResult> cmd_oracle(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  cfg.validate();
  if (cfg.instance.empty()) throw ConfigError("oracle: an instance file is required (--instance)");
  std::ifstream in(cfg.instance);
  if (!in) throw std::runtime_error("cannot open instance file '" + cfg.instance + "'");
  const nlohmann::json j = nlohmann::json::parse(in);
  const OracleInstance inst = load_instance(j, cfg);

  std::vector<BenchmarkResult> results;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : cfg.methods) {
    results.push_back(run_oracle_method(m, inst, cfg));
    out.push_back(to_json(results.back()));
    log << m << ": value=" << format_double(results.back().value) << " k=" << results.back().k << "\n";
  }
  write_json(dir / "oracle.json", {{"schema_version", kSchemaVersion},
                                   {"T", inst.contexts.size()},
                                   {"d", inst.gt.dim()},
                                   {"c", inst.c},
                                   {"results", std::move(out)}});
  return results;
}

}  // namespace docr

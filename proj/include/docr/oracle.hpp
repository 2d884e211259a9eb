#pragma once

// Offline benchmarks for the total loss c * |S| + sum_t min_{f in S} d(x_t, f):
//   * kmeans      - K-means++ / Lloyd in the W-whitened space over a grid of K
//   * covering    - a uniform Delta-grid over [0,1]^d, pruned to used points
//   * exhaustive  - exact optimum over all partitions (tiny T only)
//   * bruteforce_h- exact hindsight optimum where round t may only add x_t

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "docr/metric.hpp"
#include "docr/rng.hpp"

namespace docr {

enum class BenchmarkMethod { kKMeans, kCovering, kExhaustiveO, kBruteforceH };

inline const char* to_string(BenchmarkMethod m) {
  switch (m) {
    case BenchmarkMethod::kKMeans: return "kmeans";
    case BenchmarkMethod::kCovering: return "covering";
    case BenchmarkMethod::kExhaustiveO: return "exhaustive_o";
    case BenchmarkMethod::kBruteforceH: return "bruteforce_h";
  }
  return "unknown";
}

struct BenchmarkResult {
  double value = 0.0;
  std::vector<Context> centers;
  std::size_t k = 0;
  BenchmarkMethod method = BenchmarkMethod::kKMeans;
  std::vector<std::size_t> creation_rounds;  // bruteforce_h only, 0-based
};

/// sum_t min_{f in centers} d(x_t, f).
inline double assignment_cost(const std::vector<Context>& contexts, const std::vector<Context>& centers,
                              const GroundTruth& gt) {
  if (centers.empty()) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& x : contexts) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : centers) best = std::min(best, true_distance(x, f, gt));
    total += best;
  }
  return total;
}

/// c * |centers| + assignment_cost.
inline double center_set_value(const std::vector<Context>& contexts, const std::vector<Context>& centers,
                               const GroundTruth& gt, double c) {
  return c * static_cast<double>(centers.size()) + assignment_cost(contexts, centers, gt);
}

/// Hindsight value of a set of creation rounds: round t pays the cheapest
/// key created at or before t; rounds before the first creation cost +inf.
inline double creation_schedule_value(const std::vector<Context>& contexts,
                                      const std::vector<std::size_t>& rounds, const GroundTruth& gt,
                                      double c) {
  std::vector<std::size_t> sorted = rounds;
  std::sort(sorted.begin(), sorted.end());
  double total = c * static_cast<double>(sorted.size());
  for (std::size_t t = 0; t < contexts.size(); ++t) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s : sorted) {
      if (s > t) break;
      best = std::min(best, true_distance(contexts[t], contexts[s], gt));
    }
    total += best;
  }
  return total;
}

/// Linear map R with R^T R = W restricted to the positive eigenspace, so
/// ||R(x - f)||^2 = d(x, f).
inline Matrix whitening_map(const Matrix& W) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (W + W.transpose()));
  const Vector& vals = eig.eigenvalues();
  const double top = std::max(vals.maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals(i) > 1e-12 * top && vals(i) > 0.0) keep.push_back(i);
  Matrix R(static_cast<Eigen::Index>(keep.size()), W.rows());
  for (std::size_t r = 0; r < keep.size(); ++r)
    R.row(static_cast<Eigen::Index>(r)) = std::sqrt(vals(keep[r])) * eig.eigenvectors().col(keep[r]).transpose();
  return R;
}

struct KMeansOptions {
  int restarts = 5;
  int max_iterations = 50;
  double relative_tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// Grid multipliers g applied to T^{d/(d+2)}; 1 is always added to the grid.
  std::vector<double> grid_factors = {0.25, 0.5, 1.0, 2.0, 4.0};
  /// When non-empty, replaces the generated K grid entirely.
  std::vector<std::size_t> k_override;
  /// Adds powers of two below the grid and a local search around the best K.
  bool refine = true;
};

namespace detail {

// Points stored column-wise: Y is r x T.
struct Clustering {
  std::vector<std::size_t> labels;
  Matrix centers;  // r x K
  double cost = std::numeric_limits<double>::infinity();
};

inline double assign(const Matrix& Y, const Matrix& centers, std::vector<std::size_t>& labels) {
  const Eigen::Index T = Y.cols();
  const Eigen::Index K = centers.cols();
  double total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto y = Y.col(t);
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double dist = (centers.col(k) - y).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = k;
      }
    }
    labels[static_cast<std::size_t>(t)] = static_cast<std::size_t>(arg);
    total += best;
  }
  return total;
}

/// D^2 seeding. Returns fewer than K centers when all remaining points
/// coincide with chosen centers.
inline Matrix kmeanspp_seed(const Matrix& Y, std::size_t K, Rng& rng) {
  const Eigen::Index T = Y.cols();
  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(std::uniform_int_distribution<Eigen::Index>(0, T - 1)(rng)));
  std::vector<double> d2(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) d2[t] = (Y.col(t) - Y.col(chosen[0])).squaredNorm();
  while (chosen.size() < K) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (!(total > 0.0)) break;
    double u = uniform01(rng) * total;
    Eigen::Index pick = T - 1;
    for (Eigen::Index t = 0; t < T; ++t) {
      u -= d2[t];
      if (u < 0.0) {
        pick = t;
        break;
      }
    }
    while (d2[pick] == 0.0 && pick > 0) --pick;  // guard against rounding at the tail
    chosen.push_back(pick);
    for (Eigen::Index t = 0; t < T; ++t)
      d2[t] = std::min(d2[t], (Y.col(t) - Y.col(pick)).squaredNorm());
  }
  Matrix C(Y.rows(), static_cast<Eigen::Index>(chosen.size()));
  for (std::size_t k = 0; k < chosen.size(); ++k) C.col(static_cast<Eigen::Index>(k)) = Y.col(chosen[k]);
  return C;
}

inline Clustering lloyd(const Matrix& Y, Matrix centers, const KMeansOptions& opt) {
  Clustering out;
  out.labels.assign(static_cast<std::size_t>(Y.cols()), 0);
  double prev = assign(Y, centers, out.labels);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Matrix sums = Matrix::Zero(centers.rows(), centers.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(centers.cols()), 0);
    for (Eigen::Index t = 0; t < Y.cols(); ++t) {
      sums.col(static_cast<Eigen::Index>(out.labels[t])) += Y.col(t);
      ++counts[out.labels[t]];
    }
    for (Eigen::Index k = 0; k < centers.cols(); ++k)
      if (counts[k] > 0) centers.col(k) = sums.col(k) / static_cast<double>(counts[k]);
    const double cur = assign(Y, centers, out.labels);
    const bool converged = prev - cur <= opt.relative_tolerance * prev;
    prev = cur;
    if (converged) break;
  }
  out.centers = std::move(centers);
  out.cost = prev;
  return out;
}

}  // namespace detail

/// The K values tried by opt_o_kmeans before refinement.
inline std::vector<std::size_t> kmeans_k_grid(std::size_t T, int d, const KMeansOptions& opt) {
  std::set<std::size_t> ks;
  if (!opt.k_override.empty()) {
    for (std::size_t k : opt.k_override) ks.insert(std::clamp<std::size_t>(k, 1, T));
    return {ks.begin(), ks.end()};
  }
  const double base = std::pow(static_cast<double>(T), static_cast<double>(d) / (d + 2.0));
  ks.insert(1);
  std::size_t top = 1;
  for (double g : opt.grid_factors) {
    const auto k = static_cast<std::size_t>(std::max(1.0, std::round(g * base)));
    ks.insert(std::min(k, T));
    top = std::max(top, std::min(k, T));
  }
  if (opt.refine)
    for (std::size_t k = 2; k < top; k *= 2) ks.insert(k);
  return {ks.begin(), ks.end()};
}

/// Approximates the offline optimum with K-means++ and Lloyd iterations run
/// under the metric W, minimizing c*K + within-cluster cost over a K grid.
/// The result is feasible, so its value never falls below the true optimum.
inline BenchmarkResult opt_o_kmeans(const std::vector<Context>& contexts, const GroundTruth& gt, double c,
                                    const KMeansOptions& opt = {}) {
  if (contexts.empty()) throw std::invalid_argument("opt_o_kmeans: no contexts");
  if (!(c > 0.0)) throw std::invalid_argument("opt_o_kmeans: c must be > 0");
  if (opt.restarts < 1) throw std::invalid_argument("opt_o_kmeans: restarts must be >= 1");
  const int d = static_cast<int>(gt.dim());
  const std::size_t T = contexts.size();
  Matrix X(d, static_cast<Eigen::Index>(T));
  for (std::size_t t = 0; t < T; ++t) {
    if (contexts[t].size() != d) throw std::invalid_argument("opt_o_kmeans: dimension mismatch");
    X.col(static_cast<Eigen::Index>(t)) = contexts[t];
  }
  const Matrix R = whitening_map(gt.W);
  const Matrix Y = R * X;

  Rng rng(opt.seed);
  BenchmarkResult best;
  best.method = BenchmarkMethod::kKMeans;
  best.value = std::numeric_limits<double>::infinity();
  std::set<std::size_t> tried;

  auto evaluate = [&](std::size_t K) {
    if (K < 1 || K > T || tried.count(K)) return;
    tried.insert(K);
    // c*K alone already matches the incumbent: no clustering with K centers can win.
    if (c * static_cast<double>(K) >= best.value) return;
    for (int r = 0; r < opt.restarts; ++r) {
      Matrix seed_centers = Y.rows() == 0 ? Matrix(0, 1) : detail::kmeanspp_seed(Y, K, rng);
      detail::Clustering cl;
      if (Y.rows() == 0) {
        cl.labels.assign(T, 0);
        cl.cost = 0.0;
      } else {
        cl = detail::lloyd(Y, std::move(seed_centers), opt);
      }
      // Centers in the original space are the cluster means of the raw points.
      const std::size_t kc = Y.rows() == 0 ? 1 : static_cast<std::size_t>(cl.centers.cols());
      Matrix sums = Matrix::Zero(d, static_cast<Eigen::Index>(kc));
      std::vector<std::size_t> counts(kc, 0);
      for (std::size_t t = 0; t < T; ++t) {
        sums.col(static_cast<Eigen::Index>(cl.labels[t])) += X.col(static_cast<Eigen::Index>(t));
        ++counts[cl.labels[t]];
      }
      std::vector<Context> centers;
      for (std::size_t k = 0; k < kc; ++k)
        if (counts[k] > 0) centers.push_back(sums.col(static_cast<Eigen::Index>(k)) / static_cast<double>(counts[k]));
      const double value = center_set_value(contexts, centers, gt, c);
      if (value < best.value) {
        best.value = value;
        best.k = centers.size();
        best.centers = std::move(centers);
      }
    }
  };

  const std::vector<std::size_t> grid = kmeans_k_grid(T, d, opt);
  for (std::size_t K : grid) evaluate(K);

  if (opt.refine && opt.k_override.empty()) {
    // Geometric local search between the neighbours of the incumbent K.
    const std::size_t kstar = best.k;
    auto it = std::lower_bound(grid.begin(), grid.end(), kstar);
    const std::size_t lo = it == grid.begin() ? 1 : *std::prev(it);
    const std::size_t hi = (it == grid.end() || std::next(it) == grid.end()) ? std::min(T, 2 * kstar) : *std::next(it);
    for (double k = static_cast<double>(lo); k <= static_cast<double>(hi); k *= 1.1892071150027210667)
      evaluate(static_cast<std::size_t>(std::llround(k)));
  }
  return best;
}

struct CoveringOptions {
  std::size_t max_grid_points = 1'000'000;
};

/// Delta-grid covering with Delta = (T d)^{-1/(d+2)}: grid points are the
/// multiples of Delta in [0,1]^d, each context is served by its nearest grid
/// point under W, and only grid points that serve some context are paid for.
inline BenchmarkResult opt_covering(const std::vector<Context>& contexts, const GroundTruth& gt, double c,
                                    const CoveringOptions& opt = {}) {
  const int d = static_cast<int>(gt.dim());
  if (d < 2) throw std::invalid_argument("opt_covering: d must be >= 2");
  if (contexts.empty()) throw std::invalid_argument("opt_covering: no contexts");
  if (!(c > 0.0)) throw std::invalid_argument("opt_covering: c must be > 0");
  const double T = static_cast<double>(contexts.size());
  const double delta = std::pow(T * d, -1.0 / (d + 2.0));
  const auto per_axis = static_cast<std::size_t>(std::floor(1.0 / delta + 1e-12)) + 1;
  double total_points = 1.0;
  for (int i = 0; i < d; ++i) total_points *= static_cast<double>(per_axis);
  if (total_points > static_cast<double>(opt.max_grid_points))
    throw std::length_error("opt_covering: grid of " + std::to_string(static_cast<long long>(total_points)) +
                            " points exceeds cap " + std::to_string(opt.max_grid_points));
  const auto G = static_cast<std::size_t>(total_points);

  const Matrix R = whitening_map(gt.W);
  Matrix grid(d, static_cast<Eigen::Index>(G));
  for (std::size_t g = 0; g < G; ++g) {
    std::size_t rem = g;
    for (int i = 0; i < d; ++i) {
      grid(i, static_cast<Eigen::Index>(g)) = static_cast<double>(rem % per_axis) * delta;
      rem /= per_axis;
    }
  }
  const Matrix grid_w = R * grid;

  std::vector<char> used(G, 0);
  double mismatch = 0.0;
  for (const auto& x : contexts) {
    const Vector y = R * x;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t g = 0; g < G; ++g) {
      const double dist = (grid_w.col(static_cast<Eigen::Index>(g)) - y).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = g;
      }
    }
    used[arg] = 1;
    mismatch += best;
  }
  BenchmarkResult out;
  out.method = BenchmarkMethod::kCovering;
  for (std::size_t g = 0; g < G; ++g)
    if (used[g]) out.centers.push_back(grid.col(static_cast<Eigen::Index>(g)));
  out.k = out.centers.size();
  out.value = c * static_cast<double>(out.k) + mismatch;
  return out;
}

inline constexpr std::size_t kMaxBruteforceH = 14;
inline constexpr std::size_t kMaxExhaustiveO = 10;

/// Exact hindsight optimum: enumerates every set of creation rounds (round 1
/// always included, since an empty library makes the round infinitely costly).
inline BenchmarkResult opt_h_bruteforce(const std::vector<Context>& contexts, const GroundTruth& gt, double c) {
  const std::size_t T = contexts.size();
  if (T == 0) throw std::invalid_argument("opt_h_bruteforce: no contexts");
  if (T > kMaxBruteforceH)
    throw std::length_error("opt_h_bruteforce: T = " + std::to_string(T) + " exceeds the limit of " +
                            std::to_string(kMaxBruteforceH) + " rounds");
  if (!(c > 0.0)) throw std::invalid_argument("opt_h_bruteforce: c must be > 0");
  std::vector<std::vector<double>> D(T, std::vector<double>(T, 0.0));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s <= t; ++s) D[t][s] = true_distance(contexts[t], contexts[s], gt);

  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 1;
  const std::uint32_t full = 1u << T;
  for (std::uint32_t mask = 1; mask < full; mask += 2) {
    double total = c * static_cast<double>(__builtin_popcount(mask));
    for (std::size_t t = 0; t < T && total < best; ++t) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s <= t; ++s)
        if (mask & (1u << s)) m = std::min(m, D[t][s]);
      total += m;
    }
    if (total < best) {
      best = total;
      best_mask = mask;
    }
  }
  BenchmarkResult out;
  out.method = BenchmarkMethod::kBruteforceH;
  out.value = best;
  for (std::size_t s = 0; s < T; ++s)
    if (best_mask & (1u << s)) {
      out.creation_rounds.push_back(s);
      out.centers.push_back(contexts[s]);
    }
  out.k = out.centers.size();
  return out;
}

/// Exact offline optimum for tiny T. For a fixed partition the best center
/// of each block under any PSD W is the block mean, so enumerating set
/// partitions (restricted growth strings) is exhaustive.
inline BenchmarkResult opt_o_exhaustive(const std::vector<Context>& contexts, const GroundTruth& gt, double c) {
  const std::size_t T = contexts.size();
  if (T == 0) throw std::invalid_argument("opt_o_exhaustive: no contexts");
  if (T > kMaxExhaustiveO)
    throw std::length_error("opt_o_exhaustive: T = " + std::to_string(T) + " exceeds the limit of " +
                            std::to_string(kMaxExhaustiveO) + " rounds");
  if (!(c > 0.0)) throw std::invalid_argument("opt_o_exhaustive: c must be > 0");
  std::vector<std::size_t> rgs(T, 0), maxv(T, 0), best_rgs;
  double best = std::numeric_limits<double>::infinity();
  const int d = static_cast<int>(gt.dim());

  auto value_of = [&](const std::vector<std::size_t>& labels, std::size_t blocks) {
    std::vector<Vector> sums(blocks, Vector::Zero(d));
    std::vector<std::size_t> counts(blocks, 0);
    for (std::size_t t = 0; t < T; ++t) {
      sums[labels[t]] += contexts[t];
      ++counts[labels[t]];
    }
    double total = c * static_cast<double>(blocks);
    for (std::size_t t = 0; t < T; ++t) {
      const Vector mean = sums[labels[t]] / static_cast<double>(counts[labels[t]]);
      total += true_distance(contexts[t], mean, gt);
    }
    return total;
  };

  while (true) {
    const std::size_t blocks = (T == 0 ? 0 : *std::max_element(rgs.begin(), rgs.end()) + 1);
    const double v = value_of(rgs, blocks);
    if (v < best) {
      best = v;
      best_rgs = rgs;
    }
    // Next restricted growth string: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
    std::size_t i = T - 1;
    while (i > 0 && rgs[i] > maxv[i - 1]) --i;
    if (i == 0) break;
    ++rgs[i];
    maxv[i] = std::max(maxv[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < T; ++j) {
      rgs[j] = 0;
      maxv[j] = maxv[j - 1];
    }
  }

  const std::size_t blocks = *std::max_element(best_rgs.begin(), best_rgs.end()) + 1;
  std::vector<Vector> sums(blocks, Vector::Zero(d));
  std::vector<std::size_t> counts(blocks, 0);
  for (std::size_t t = 0; t < T; ++t) {
    sums[best_rgs[t]] += contexts[t];
    ++counts[best_rgs[t]];
  }
  BenchmarkResult out;
  out.method = BenchmarkMethod::kExhaustiveO;
  out.value = best;
  for (std::size_t b = 0; b < blocks; ++b) out.centers.push_back(sums[b] / static_cast<double>(counts[b]));
  out.k = blocks;
  return out;
}

inline nlohmann::json to_json(const BenchmarkResult& r) {
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& f : r.centers) centers.push_back(vector_to_json(f));
  nlohmann::json j = {{"schema_version", 1}, {"method", to_string(r.method)},
                      {"value", r.value}, {"k", r.k}, {"centers", std::move(centers)}};
  if (r.method == BenchmarkMethod::kBruteforceH) {
    nlohmann::json rounds = nlohmann::json::array();
    for (std::size_t s : r.creation_rounds) rounds.push_back(s + 1);
    j["creation_rounds"] = std::move(rounds);
  }
  return j;
}

}  // namespace docr

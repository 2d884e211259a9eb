#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "docr/env.hpp"
#include "docr/policy.hpp"

using namespace docr;

namespace {

RidgeEstimator trained(int d, int n, std::uint64_t seed) {
  const GroundTruth gt = sample_ground_truth(d, 1.0, 0.05, seed);
  const auto xs = sample_context_stream(d, 2 * n, seed + 1);
  Rng rng(seed + 2);
  RidgeEstimator e(d, 1.0, 1.0);
  for (int i = 0; i < n; ++i) e.update(xs[2 * i], xs[2 * i + 1], observe_loss(xs[2 * i], xs[2 * i + 1], gt, rng));
  return e;
}

ContextLibrary library_of(const std::vector<Context>& keys) {
  ContextLibrary lib;
  for (std::size_t i = 0; i < keys.size(); ++i) lib.add(keys[i], static_cast<std::int64_t>(i + 1));
  return lib;
}

}  // namespace

TEST(Library, SeededHoldsNormalizedOnesVector) {
  const ContextLibrary lib = ContextLibrary::seeded(4);
  ASSERT_EQ(lib.size(), 1u);
  EXPECT_NEAR(lib[0].key.norm(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(lib[0].key(0), 0.5);
  EXPECT_EQ(lib[0].created_at, -1);
}

TEST(Library, AppendOnlyAndUnique) {
  ContextLibrary lib = ContextLibrary::seeded(2);
  const auto xs = sample_context_stream(2, 3, 5);
  EXPECT_TRUE(lib.add(xs[0], 1));
  EXPECT_FALSE(lib.add(xs[0], 2));
  EXPECT_TRUE(lib.add(xs[1], 3));
  EXPECT_EQ(lib.size(), 3u);
  EXPECT_LT(lib[1].created_at, lib[2].created_at);
  EXPECT_NE(lib[1].action_id, lib[2].action_id);
  EXPECT_EQ(lib.key_matrix().col(2), xs[1]);
  EXPECT_THROW(lib.add(Vector::Zero(3), 4), std::invalid_argument);
}

TEST(Library, ApplyDecision) {
  const ContextLibrary lib = ContextLibrary::seeded(2);
  const auto x = sample_context_stream(2, 1, 6)[0];
  Decision create;
  create.kind = DecisionKind::kCreate;
  const ContextLibrary grown = apply_decision(create, x, lib, 5);
  ASSERT_EQ(grown.size(), 2u);
  EXPECT_EQ(grown[1].key, x);
  EXPECT_EQ(grown[1].created_at, 5);
  const ContextLibrary same = apply_decision(Decision{}, x, lib, 6);
  EXPECT_EQ(same.size(), 1u);
}

TEST(Select, SingletonLibrary) {
  const RidgeEstimator e(2, 1.0, 1.0);
  const auto x = sample_context_stream(2, 1, 7)[0];
  EXPECT_EQ(select_candidate(x, ContextLibrary::seeded(2), e).index, 0u);
}

TEST(Select, FreshEstimatorPicksFarthestKey) {
  const RidgeEstimator e(3, 1.0, 1.0);
  const auto keys = sample_context_stream(3, 8, 8);
  const auto x = sample_context_stream(3, 1, 9)[0];
  std::size_t far = 0;
  for (std::size_t i = 1; i < keys.size(); ++i)
    if (feature_map(x, keys[i]).norm() > feature_map(x, keys[far]).norm()) far = i;
  EXPECT_EQ(select_candidate(x, library_of(keys), e).index, far);
}

TEST(Select, MatchesExhaustiveDirectSolveScan) {
  const RidgeEstimator e = trained(2, 100, 10);
  const auto keys = sample_context_stream(2, 5, 11);
  const ContextLibrary lib = library_of(keys);
  const auto queries = sample_context_stream(2, 50, 12);
  const Matrix gram = e.gram();
  for (const auto& x : queries) {
    const Vector w = gram.ldlt().solve(e.response());
    std::size_t best = 0;
    double best_lcb = INFINITY;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const Feature phi = feature_map(x, keys[i]);
      const double lcb = phi.dot(w) - std::sqrt(phi.dot(gram.ldlt().solve(phi)));
      if (lcb < best_lcb - 1e-12) {
        best_lcb = lcb;
        best = i;
      }
    }
    const Candidate c = select_candidate(x, lib, e);
    EXPECT_EQ(c.index, best);
    for (std::size_t i = 0; i < keys.size(); ++i) EXPECT_LE(c.estimate.lcb, e.predict(x, keys[i]).lcb);
  }
}

TEST(Select, TiesGoToEarliestEntry) {
  const RidgeEstimator e(2, 1.0, 1.0);
  Vector a(2), b(2), x(2);
  a << 1, 0;
  b << 0, 1;
  x << std::sqrt(0.5), std::sqrt(0.5);
  EXPECT_EQ(select_candidate(x, library_of({a, b}), e).index, 0u);
  EXPECT_EQ(select_candidate(x, library_of({b, a}), e).index, 0u);
}

TEST(CreateProbability, ClampsToUnitInterval) {
  EXPECT_EQ(creation_probability(2.0, 1.0), 1.0);
  EXPECT_EQ(creation_probability(1.0, 1.0), 1.0);
  EXPECT_EQ(creation_probability(-0.3, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(creation_probability(0.25, 0.5), 0.5);
}

TEST(CreateProbability, SaturatedAndFlooredDecisions) {
  const auto xs = sample_context_stream(2, 1, 13);
  Vector far(2);
  far << 1, 0;
  ContextLibrary lib;
  lib.add(far, 1);
  const RidgeEstimator e(2, 1.0, 1.0);
  Rng rng(1);
  const double ucb = select_candidate(xs[0], lib, e).estimate.ucb;
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(doubly_optimistic_decide(xs[0], lib, e, ucb * 0.5, rng).creates());
  Decision dec = doubly_optimistic_decide(xs[0], lib, e, ucb * 2.0, rng);
  EXPECT_DOUBLE_EQ(dec.create_probability, 0.5);
  EXPECT_THROW(doubly_optimistic_decide(xs[0], lib, e, 0.0, rng), std::invalid_argument);
}

TEST(CreateProbability, EmpiricalFrequencyMatchesRecordedProbability) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.05, 14);
  double sum_p = 0.0, var = 0.0, creates = 0.0;
  int n = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const RunTrace tr = run_episode(PolicySpec{}, 2, 100, gt, 100 + s, {200 + s, 300 + s});
    for (const auto& o : tr.outcomes) {
      const double p = o.decision.create_probability;
      sum_p += p;
      var += p * (1.0 - p);
      creates += o.decision.creates() ? 1.0 : 0.0;
      ++n;
    }
  }
  EXPECT_LE(std::abs(creates - sum_p), 3.0 * std::sqrt(var) + 1.0) << "n=" << n;
}

TEST(FixedP, Extremes) {
  const auto xs = sample_context_stream(2, 200, 15);
  const ContextLibrary lib = ContextLibrary::seeded(2);
  Rng rng(2);
  for (const auto& x : xs) {
    EXPECT_FALSE(fixed_p_decide(x, lib, 0.0, rng).creates());
    EXPECT_TRUE(fixed_p_decide(x, lib, 1.0, rng).creates());
  }
  EXPECT_THROW(fixed_p_decide(xs[0], lib, 1.5, rng), std::invalid_argument);
}

TEST(FixedP, BinomialCount) {
  const auto xs = sample_context_stream(2, 1000, 16);
  const ContextLibrary lib = ContextLibrary::seeded(2);
  Rng rng(3);
  int count = 0;
  for (const auto& x : xs) count += fixed_p_decide(x, lib, 0.5, rng).creates() ? 1 : 0;
  EXPECT_LE(std::abs(count - 500), 3.0 * std::sqrt(1000 * 0.25));
}

TEST(FixedP, ReusesEuclideanNearest) {
  const auto keys = sample_context_stream(3, 10, 17);
  const ContextLibrary lib = library_of(keys);
  for (const auto& x : sample_context_stream(3, 30, 18)) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < keys.size(); ++i)
      if ((x - keys[i]).norm() < (x - keys[best]).norm()) best = i;
    EXPECT_EQ(nearest_key(x, lib), best);
  }
}

TEST(StoppingProcess, ExactExpectationAtMostOne) {
  EXPECT_DOUBLE_EQ(stopping_process_expectation({}), 0.0);
  EXPECT_DOUBLE_EQ(stopping_process_expectation({0.5}), 0.25);
  EXPECT_LE(stopping_process_expectation(std::vector<double>(10000, 0.01)), 1.0);
  EXPECT_THROW(
      {
        Rng rng(1);
        stopping_process_sum({0.5, 2.0}, rng);
      },
      std::invalid_argument);
}

TEST(StoppingProcess, MonteCarloMatchesExpectation) {
  std::vector<double> p(200);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = 0.05 + 0.9 * static_cast<double>(k) / 199.0;
  Rng rng(4);
  const int n = 20000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = stopping_process_sum(p, rng);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, stopping_process_expectation(p), 4.0 * se);
}

TEST(PolicyKind, Parsing) {
  EXPECT_EQ(policy_from_string("doubly_optimistic"), PolicyKind::kDoublyOptimistic);
  EXPECT_EQ(policy_from_string("fixed_p"), PolicyKind::kFixedP);
  EXPECT_THROW(policy_from_string("greedy"), std::invalid_argument);
}

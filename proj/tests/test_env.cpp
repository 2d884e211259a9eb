#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "docr/env.hpp"

using namespace docr;

TEST(ContextStream, NormalizedNonNegativeAndSeeded) {
  const auto xs = sample_context_stream(5, 1000, 1);
  for (const auto& x : xs) {
    EXPECT_EQ(x.size(), 5);
    EXPECT_NEAR(x.norm(), 1.0, 1e-12);
    EXPECT_GE(x.minCoeff(), 0.0);
  }
  EXPECT_EQ(sample_context_stream(5, 10, 1)[9], xs[9]);
  EXPECT_THROW(sample_context_stream(1, 10, 1), std::invalid_argument);
}

TEST(ContextStream, MeanDirectionInTwoDimensions) {
  const int n = 100000;
  const auto xs = sample_context_stream(2, n, 2);
  Vector mean = Vector::Zero(2), sq = Vector::Zero(2);
  for (const auto& x : xs) {
    mean += x;
    sq += x.cwiseProduct(x);
  }
  mean /= n;
  const Vector var = sq / n - mean.cwiseProduct(mean);
  // By symmetry both coordinates share one mean; the direction is (1,1)/sqrt(2).
  EXPECT_NEAR(mean(0), mean(1), 3.0 * std::sqrt(2.0 * var(0) / n));
  const Vector dir = mean / mean.norm();
  EXPECT_NEAR(dir(0), 1.0 / std::sqrt(2.0), 3.0 * std::sqrt(var(0) / n));
}

TEST(ObserveLoss, NoiselessAndPureNoise) {
  GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 3);
  const auto xs = sample_context_stream(2, 2, 4);
  Rng rng(5);
  EXPECT_EQ(observe_loss(xs[0], xs[1], gt, rng), true_distance(xs[0], xs[1], gt));
  gt.sigma = 0.05;
  double s = 0.0;
  for (int i = 0; i < 10000; ++i) s += observe_loss(xs[0], xs[0], gt, rng);
  EXPECT_LE(std::abs(s / 10000), 3.0 * 0.05 / 100.0);
  Rng a(9), b(9);
  EXPECT_EQ(observe_loss(xs[0], xs[1], gt, a), observe_loss(xs[0], xs[1], gt, b));
}

TEST(Episode, PerRoundAccounting) {
  const GroundTruth gt = sample_ground_truth(3, 1.0, 0.05, 6);
  const RunTrace tr = run_episode(PolicySpec{}, 3, 500, gt, 7, {8, 9});
  ASSERT_EQ(tr.outcomes.size(), 500u);
  std::size_t lib = 1;
  std::uint64_t reuses = 0;
  for (const auto& o : tr.outcomes) {
    if (o.decision.creates()) {
      EXPECT_EQ(o.cost, 1.0);
      EXPECT_EQ(o.true_loss, 0.0);
      EXPECT_EQ(o.observed_loss, 0.0);
      ++lib;
      EXPECT_EQ(o.chosen_key_index, lib - 1);
    } else {
      EXPECT_EQ(o.cost, 0.0);
      ++reuses;
    }
    EXPECT_EQ(o.library_size_after, lib);
  }
  EXPECT_EQ(tr.estimator_updates, reuses);
  EXPECT_EQ(tr.final_library.size(), lib);
  EXPECT_NEAR(tr.cumulative_loss().back(), tr.total_loss(), 1e-9);
}

TEST(Episode, CreationCostLimits) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.05, 10);
  PolicySpec huge;
  huge.c = 1e12;
  EXPECT_EQ(run_episode(huge, 2, 300, gt, 11, {12, 13}).creations(), 0u);
  PolicySpec tiny;
  tiny.c = 1e-12;
  const RunTrace tr = run_episode(tiny, 2, 300, gt, 11, {12, 13});
  EXPECT_EQ(tr.creations(), 300u);
  EXPECT_NEAR(tr.total_cost(), 300e-12, 1e-20);
  EXPECT_EQ(tr.total_true_mismatch(), 0.0);
}

// Straight-line replay of the protocol with its own estimator and library.
TEST(Episode, MatchesReferenceReplay) {
  const int d = 2;
  const GroundTruth gt = sample_ground_truth(d, 1.0, 0.05, 20);
  const auto xs = sample_context_stream(d, 200, 21);
  const RunTrace tr = run_episode(PolicySpec{}, xs, gt, {22, 23});

  Rng noise(22), dec(23);
  std::vector<Vector> keys = {Vector::Constant(d, 1.0 / std::sqrt(2.0))};
  Matrix sigma = Matrix::Identity(4, 4);
  Vector b = Vector::Zero(4);
  double total = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const Vector& x = xs[t];
    const Vector w = sigma.ldlt().solve(b);
    std::size_t best = 0;
    double best_lcb = INFINITY, best_ucb = 0.0;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const Vector v = x - keys[k];
      Vector phi(4);
      phi << v(0) * v(0), v(0) * v(1), v(1) * v(0), v(1) * v(1);
      const double mean = phi.dot(w), width = std::sqrt(phi.dot(sigma.ldlt().solve(phi)));
      if (mean - width < best_lcb) {
        best_lcb = mean - width;
        best_ucb = mean + width;
        best = k;
      }
    }
    const double p = std::min(1.0, std::max(0.0, best_ucb));
    const bool create = std::uniform_real_distribution<double>(0.0, 1.0)(dec) < p;
    ASSERT_EQ(create, tr.outcomes[t].decision.creates()) << "round " << t + 1;
    if (create) {
      keys.push_back(x);
      total += 1.0;
    } else {
      const Vector v = x - keys[best];
      const double truth = v.dot(gt.W * v);
      const double y = truth + std::normal_distribution<double>(0.0, 0.05)(noise);
      Vector phi(4);
      phi << v(0) * v(0), v(0) * v(1), v(1) * v(0), v(1) * v(1);
      sigma += phi * phi.transpose();
      b += y * phi;
      total += truth;
      EXPECT_NEAR(tr.outcomes[t].observed_loss, y, 1e-9);
    }
  }
  EXPECT_NEAR(tr.total_loss(), total, 1e-9);
}

TEST(Episode, FixedPNeverLearns) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.05, 30);
  PolicySpec p;
  p.kind = PolicyKind::kFixedP;
  p.p = 0.3;
  const RunTrace tr = run_episode(p, 2, 200, gt, 31, {32, 33});
  EXPECT_EQ(tr.estimator_updates, 0u);
  for (const auto& o : tr.outcomes) EXPECT_TRUE(std::isnan(o.decision.chosen_lcb));
}

TEST(Episode, CsvAndSidecar) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.05, 40);
  const RunTrace tr = run_episode(PolicySpec{}, 2, 50, gt, 41, {42, 43});
  std::ostringstream a, b;
  write_trace_csv(tr, a);
  write_trace_csv(run_episode(PolicySpec{}, 2, 50, gt, 41, {42, 43}), b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kTraceCsvHeader);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 50);
  const auto j = trace_sidecar(tr);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("totals").at("creations").get<std::size_t>(), tr.creations());
}

TEST(Episode, RejectsBadInput) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.05, 50);
  PolicySpec bad;
  bad.c = 0.0;
  EXPECT_THROW(run_episode(bad, 2, 10, gt, 1, {2, 3}), std::invalid_argument);
  EXPECT_THROW(run_episode(PolicySpec{}, std::vector<Context>{}, gt, {2, 3}), std::invalid_argument);
  EXPECT_THROW(run_episode(PolicySpec{}, 3, 10, gt, 1, {2, 3}), std::invalid_argument);
}

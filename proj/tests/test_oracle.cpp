#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "docr/env.hpp"
#include "docr/oracle.hpp"

using namespace docr;

namespace {

double recompute(const std::vector<Context>& xs, const std::vector<Context>& centers, const GroundTruth& gt,
                 double c) {
  double total = c * static_cast<double>(centers.size());
  for (const auto& x : xs) {
    double best = INFINITY;
    for (const auto& f : centers) {
      const Vector v = x - f;
      best = std::min(best, v.dot(gt.W * v));
    }
    total += best;
  }
  return total;
}

}  // namespace

TEST(Whitening, ReproducesQuadraticForm) {
  const GroundTruth gt = sample_ground_truth(4, 1.0, 0.0, 1);
  const Matrix R = whitening_map(gt.W);
  const auto xs = sample_context_stream(4, 10, 2);
  for (int i = 0; i + 1 < 10; ++i)
    EXPECT_NEAR((R * (xs[i] - xs[i + 1])).squaredNorm(), true_distance(xs[i], xs[i + 1], gt), 1e-12);
}

TEST(KMeansOracle, IdenticalPointsNeedOneCenter) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 3);
  const std::vector<Context> xs(20, sample_context_stream(2, 1, 4)[0]);
  const BenchmarkResult r = opt_o_kmeans(xs, gt, 1.5);
  EXPECT_EQ(r.k, 1u);
  EXPECT_NEAR(r.value, 1.5, 1e-12);
}

TEST(KMeansOracle, HugeCostSelectsOneCenter) {
  const GroundTruth gt = sample_ground_truth(3, 1.0, 0.0, 5);
  const auto xs = sample_context_stream(3, 300, 6);
  EXPECT_EQ(opt_o_kmeans(xs, gt, 1e6).k, 1u);
}

TEST(KMeansOracle, ValueRecomputesFromCenters) {
  const GroundTruth gt = sample_ground_truth(3, 1.0, 0.0, 7);
  const auto xs = sample_context_stream(3, 500, 8);
  for (double c : {0.01, 0.1, 1.0}) {
    const BenchmarkResult r = opt_o_kmeans(xs, gt, c);
    EXPECT_NEAR(r.value, recompute(xs, r.centers, gt, c), 1e-9 * r.value);
    EXPECT_EQ(r.k, r.centers.size());
  }
}

TEST(KMeansOracle, CenterCountFallsAsCostRises) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 9);
  const auto xs = sample_context_stream(2, 1000, 10);
  KMeansOptions opt;
  opt.seed = 1;
  std::size_t prev = SIZE_MAX;
  for (double c : {0.001, 0.01, 0.1, 1.0, 10.0}) {
    const std::size_t k = opt_o_kmeans(xs, gt, c, opt).k;
    EXPECT_LE(k, prev) << "c=" << c;
    prev = k;
  }
}

TEST(KMeansOracle, DeterministicForSeed) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 11);
  const auto xs = sample_context_stream(2, 400, 12);
  KMeansOptions opt;
  opt.seed = 99;
  EXPECT_EQ(opt_o_kmeans(xs, gt, 0.2, opt).value, opt_o_kmeans(xs, gt, 0.2, opt).value);
}

TEST(KMeansOracle, KGridContainsOneAndOverride) {
  KMeansOptions opt;
  const auto grid = kmeans_k_grid(10000, 2, opt);
  EXPECT_EQ(grid.front(), 1u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(grid.back(), 400u);  // 4 * 10000^{1/2}
  opt.k_override = {3, 7, 100000};
  EXPECT_EQ(kmeans_k_grid(50, 2, opt), (std::vector<std::size_t>{3, 7, 50}));
}

TEST(ExhaustiveOracle, SmallInstancesBoundKMeansFromBelow) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 100 + s);
    const auto xs = sample_context_stream(2, 6, 200 + s);
    const double c = 0.02 * static_cast<double>(s + 1);
    const BenchmarkResult ex = opt_o_exhaustive(xs, gt, c);
    const BenchmarkResult km = opt_o_kmeans(xs, gt, c);
    EXPECT_GE(km.value, ex.value - 1e-9) << "seed " << s;
    EXPECT_NEAR(ex.value, recompute(xs, ex.centers, gt, c), 1e-12);
  }
}

TEST(ExhaustiveOracle, PartitionCountMatchesBellNumbers) {
  // With c tiny every point wants its own center, with c huge one center;
  // both extremes must be reached by the enumeration.
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 13);
  const auto xs = sample_context_stream(2, 7, 14);
  EXPECT_EQ(opt_o_exhaustive(xs, gt, 1e-9).k, 7u);
  EXPECT_EQ(opt_o_exhaustive(xs, gt, 1e6).k, 1u);
  EXPECT_THROW(opt_o_exhaustive(sample_context_stream(2, 11, 1), gt, 1.0), std::length_error);
}

TEST(BruteforceH, Conventions) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 15);
  const auto one = sample_context_stream(2, 1, 16);
  const BenchmarkResult r1 = opt_h_bruteforce(one, gt, 2.5);
  EXPECT_DOUBLE_EQ(r1.value, 2.5);
  EXPECT_EQ(r1.creation_rounds, (std::vector<std::size_t>{0}));
  const std::vector<Context> twin(2, one[0]);
  const BenchmarkResult r2 = opt_h_bruteforce(twin, gt, 100.0);
  EXPECT_DOUBLE_EQ(r2.value, 100.0);
  EXPECT_EQ(r2.k, 1u);
  EXPECT_THROW(opt_h_bruteforce(sample_context_stream(2, 15, 1), gt, 1.0), std::length_error);
}

TEST(BruteforceH, NeverBelowOfflineOptimum) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 300 + s);
    const auto xs = sample_context_stream(2, 8, 400 + s);
    const double c = 0.05 * static_cast<double>(s + 1);
    const BenchmarkResult h = opt_h_bruteforce(xs, gt, c);
    EXPECT_GE(h.value, opt_o_exhaustive(xs, gt, c).value - 1e-9);
    EXPECT_NEAR(h.value, creation_schedule_value(xs, h.creation_rounds, gt, c), 1e-12);
  }
}

TEST(Covering, SinglePointOnGridCostsC) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 17);
  // With T = 1 and d = 2 the grid spacing is 2^{-1/4}.
  Vector x(2);
  x << std::pow(2.0, -0.25), 0.0;
  const BenchmarkResult r = opt_covering({x}, gt, 0.7);
  EXPECT_EQ(r.k, 1u);
  EXPECT_NEAR(r.value, 0.7, 1e-12);
}

TEST(Covering, FeasibleAndAboveKMeans) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 18);
  const auto xs = sample_context_stream(2, 2000, 19);
  const BenchmarkResult cov = opt_covering(xs, gt, 1.0);
  EXPECT_NEAR(cov.value, recompute(xs, cov.centers, gt, 1.0), 1e-9 * cov.value);
  EXPECT_GE(cov.value, opt_o_kmeans(xs, gt, 1.0).value - 1e-9);
}

TEST(Covering, LargeInstanceUnderCap) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 20);
  const auto xs = sample_context_stream(2, 10000, 21);
  EXPECT_NO_THROW(opt_covering(xs, gt, 1.0));
  CoveringOptions tight;
  tight.max_grid_points = 10;
  EXPECT_THROW(opt_covering(xs, gt, 1.0, tight), std::length_error);
}

TEST(OracleJson, BruteforceRoundsAreOneBased) {
  const GroundTruth gt = sample_ground_truth(2, 1.0, 0.0, 22);
  const auto j = to_json(opt_h_bruteforce(sample_context_stream(2, 4, 23), gt, 1.0));
  EXPECT_EQ(j.at("creation_rounds").front(), 1);
  EXPECT_EQ(j.at("method"), "bruteforce_h");
}

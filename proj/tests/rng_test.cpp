#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "coalflow/rng.hpp"
#include "coalflow/stats.hpp"

using coalflow::RngStream;
using coalflow::RunningStats;

TEST(RngStream, SameIdentityReproducesSequence) {
  RngStream a(42, 3);
  RngStream b(42, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(RngStream, SplitDoesNotDependOnParentDraws) {
  RngStream parent(5, 0);
  const RngStream before = parent.split(9);
  for (int i = 0; i < 10; ++i) parent.uniform();
  RngStream after = parent.split(9);
  RngStream copy = before;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(copy(), after());
}

TEST(RngStream, UniformIsInOpenInterval) {
  RngStream s(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, DegenerateGaussianReturnsMean) {
  RngStream s(1, 2);
  EXPECT_EQ(s.gaussian(0.0, 0.0), 0.0);
  EXPECT_EQ(s.gaussian(2.5, 0.0), 2.5);
}

TEST(RngStream, GaussianMoments) {
  const int n = 1000000;
  RngStream s(11, 0);
  RunningStats unit;
  RunningStats wide;
  for (int i = 0; i < n; ++i) {
    unit.add(s.gaussian(0.0, 1.0));
    wide.add(s.gaussian(0.0, 2.0));
  }
  EXPECT_LT(std::abs(unit.mean()), 4.0 / std::sqrt(n));
  EXPECT_NEAR(wide.variance(), 2.0, 0.04);
}

TEST(RngStream, PoissonMoments) {
  RngStream s(12, 0);
  EXPECT_EQ(s.poisson(0.0), 0u);
  const int n = 100000;
  RunningStats p;
  for (int i = 0; i < n; ++i) p.add(static_cast<double>(s.poisson(4.0)));
  EXPECT_NEAR(p.mean(), 4.0, 3.0 * std::sqrt(4.0 / n));
  EXPECT_NEAR(p.variance() / p.mean(), 1.0, 0.05);
}

TEST(RngStream, GammaMeans) {
  RngStream s(13, 0);
  RunningStats exp_like;
  RunningStats g;
  for (int i = 0; i < 100000; ++i) {
    exp_like.add(s.gamma(1.0, 0.7));
    g.add(s.gamma(3.0, 2.0));
  }
  EXPECT_NEAR(exp_like.mean(), 0.7, 3.0 * exp_like.se());
  EXPECT_NEAR(g.mean(), 6.0, 3.0 * g.se());
}

TEST(RngStream, GammaShapeTwoMatchesClosedFormTail) {
  RngStream s(14, 0);
  std::vector<double> x(100000);
  for (auto& v : x) v = s.gamma(2.0, 1.0);
  const auto ks = coalflow::ks_one_sample(x, [](double y) {
    return y <= 0.0 ? 0.0 : 1.0 - (1.0 + y) * std::exp(-y);
  });
  EXPECT_LT(ks.statistic, 0.01);
}

TEST(RngStream, SplitStreamsAreUncorrelated) {
  const RngStream root(99, 0);
  const int n = 20000;
  RngStream a = root.split(0);
  RngStream b = root.split(1);
  double sab = 0.0;
  for (int i = 0; i < n; ++i) sab += a.standard_normal() * b.standard_normal();
  EXPECT_LT(std::abs(sab / n), 4.0 / std::sqrt(n));
}

TEST(RngStream, IndexStaysInRange) {
  RngStream s(3, 3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[s.index(7)];
  for (int h : hits) EXPECT_GT(h, 800);
}

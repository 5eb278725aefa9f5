#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "coalflow/errors.hpp"
#include "coalflow/rng.hpp"
#include "coalflow/stats.hpp"

using namespace coalflow;

namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n, double shift = 0.0) {
  RngStream s(seed, 0);
  std::vector<double> x(n);
  for (auto& v : x) v = shift + s.standard_normal();
  return x;
}

}  // namespace

TEST(RunningStats, MatchesTwoPassFormulas) {
  const std::vector<double> x{1.0, 4.0, 2.0, 8.0, 5.0};
  const auto s = summarize(x);
  EXPECT_DOUBLE_EQ(s.mean(), 4.0);
  EXPECT_DOUBLE_EQ(s.variance(), 7.5);
  EXPECT_DOUBLE_EQ(s.se(), std::sqrt(7.5 / 5.0));
  RunningStats a = summarize(std::vector<double>{1.0, 4.0});
  a.merge(summarize(std::vector<double>{2.0, 8.0, 5.0}));
  EXPECT_NEAR(a.mean(), 4.0, 1e-14);
  EXPECT_NEAR(a.variance(), 7.5, 1e-12);
}

TEST(KolmogorovSmirnov, IdenticalSamplesGiveZero) {
  const auto a = normals(1, 500);
  EXPECT_EQ(ks_two_sample(a, a).statistic, 0.0);
}

TEST(KolmogorovSmirnov, IndependentNormalsStayBelowCriticalValue) {
  const auto a = normals(2, 10000);
  const auto b = normals(3, 10000);
  const auto r = ks_two_sample(a, b);
  EXPECT_LT(r.statistic, 0.027);
  EXPECT_NEAR(ks_critical_value(10000, 10000, 0.01), 1.6276 * std::sqrt(2.0 / 10000), 1e-4);
}

TEST(KolmogorovSmirnov, DetectsShift) {
  const auto r = ks_two_sample(normals(4, 10000), normals(5, 10000, 0.5));
  EXPECT_LT(r.p_value, 1e-6);
}

TEST(KolmogorovSmirnov, TiesAreExact) {
  const std::vector<double> a{0.0, 0.0, 1.0, 2.0};
  const std::vector<double> b{0.0, 1.0, 1.0, 1.0};
  // After 0: 1/2 vs 1/4; after 1: 3/4 vs 1.
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).statistic, 0.25);
  EXPECT_THROW(ks_two_sample(a, std::vector<double>{}), ParameterError);
}

TEST(KolmogorovSmirnov, OneSampleWithAtom) {
  // Half the mass at 0, half uniform on (0, 1).
  const std::vector<double> x{0.0, 0.0, 0.25, 0.75};
  const auto cdf = [](double y) { return y < 0 ? 0.0 : y >= 1 ? 1.0 : 0.5 + 0.5 * y; };
  const auto left = [](double y) { return y <= 0 ? 0.0 : y > 1 ? 1.0 : 0.5 + 0.5 * y; };
  EXPECT_NEAR(ks_one_sample(x, cdf, left).statistic, 0.125, 1e-12);
}

TEST(KolmogorovSurvival, KnownQuantiles) {
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(1.6276), 0.01, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639, 1e-4);
}

TEST(RealizedVariation, ConstantSeriesHasZeroVariation) {
  const std::vector<double> c(10, 3.0);
  for (double v : realized_qv(c)) EXPECT_EQ(v, 0.0);
}

TEST(RealizedVariation, BrownianQuadraticVariation) {
  const double speed = 2.0;
  const double dt = 1e-4;
  RngStream s(6, 0);
  std::vector<double> w{0.0};
  for (int k = 0; k < 10000; ++k) w.push_back(w.back() + s.gaussian(0.0, speed * dt));
  EXPECT_NEAR(realized_qv(w).back(), 2.0, 0.06);
  const auto cov = realized_covariation(w, w);
  EXPECT_DOUBLE_EQ(cov.back(), realized_qv(w).back());
}

TEST(MartingaleZTest, ConstantReplicatesGiveZero) {
  const std::vector<std::vector<double>> reps(50, std::vector<double>{1.0, 1.0, 1.0});
  const auto z = martingale_ztest(reps);
  for (double v : z.z) EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(z.flagged);
}

TEST(MartingaleZTest, BrownianEnsembleVersusDrift) {
  const std::size_t n = 10000;
  const int grid = 20;
  const double dt = 1.0 / grid;
  RngStream s(7, 0);
  std::vector<std::vector<double>> bm(n);
  std::vector<std::vector<double>> drifted(n);
  for (std::size_t r = 0; r < n; ++r) {
    double w = 0.0;
    bm[r].push_back(0.0);
    drifted[r].push_back(0.0);
    for (int k = 1; k <= grid; ++k) {
      w += s.gaussian(0.0, dt);
      bm[r].push_back(w);
      drifted[r].push_back(w + 0.5 * k * dt);
    }
  }
  EXPECT_FALSE(martingale_ztest(bm).flagged);
  const auto z = martingale_ztest(drifted);
  EXPECT_TRUE(z.flagged);
  EXPECT_GT(std::abs(z.z.back()), 4.0);
}

TEST(PoissonGof, AcceptsTrueRateAndRejectsWrongOne) {
  RngStream s(8, 0);
  std::vector<std::uint64_t> counts(10000);
  for (auto& c : counts) c = s.poisson(20.0);
  EXPECT_GT(poisson_gof(counts, 20.0).p_value, 1e-3);
  EXPECT_LT(poisson_gof(counts, 24.0).p_value, 1e-4);
}

TEST(PoissonGof, DegenerateRate) {
  const std::vector<std::uint64_t> zeros(100, 0);
  EXPECT_EQ(poisson_gof(zeros, 0.0).p_value, 1.0);
  EXPECT_THROW(poisson_gof(zeros, -1.0), ParameterError);
}

TEST(ComparisonReport, Rules) {
  EXPECT_TRUE(within_se("a", 1.0, 1.2, 0.1, 10).pass());
  EXPECT_FALSE(within_se("b", 1.0, 1.4, 0.1, 10).pass());
  EXPECT_TRUE(at_most("c", "ks", 0.01, 0.02, {100}).pass());
  EXPECT_FALSE(at_least("d", "p", 1e-5, 1e-3, {100}).pass());
  const auto j = within_se("e", 1.0, 1.0, 0.0, 5).to_json();
  EXPECT_EQ(j["name"], "e");
  EXPECT_EQ(j["pass"], true);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "coalflow/errors.hpp"
#include "coalflow/flows.hpp"
#include "coalflow/stats.hpp"

using namespace coalflow;

namespace {

double merge_probability(double d, double speed, double horizon) {
  return 2.0 * (1.0 - normal_cdf(d / std::sqrt(2.0 * speed * horizon)));
}

std::vector<RngStream> label_streams(const RngStream& root, std::size_t m) {
  std::vector<RngStream> s;
  for (std::size_t i = 0; i < m; ++i) s.push_back(root.split(i));
  return s;
}

}  // namespace

TEST(Scbm, EqualStartsMoveTogether) {
  const std::vector<double> starts{0.3, 0.3};
  const auto b = simulate_scbm(starts, 1.7, 1.0, 1e-2, RngStream(1, 0));
  for (std::size_t k = 0; k < b.grid.points(); ++k) {
    EXPECT_EQ(b.position(0, k), b.position(1, k));
    EXPECT_EQ(b.group(0, k), b.group(1, k));
  }
  EXPECT_EQ(b.coalescence_time(0, 1), 0.0);
}

TEST(Scbm, CoalescenceIsPermanent) {
  const std::vector<double> starts{0.0, 0.1, 0.25, 0.6};
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto b = simulate_scbm(starts, 1.0, 1.0, 1e-2, RngStream(2, r));
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        bool together = false;
        for (std::size_t k = 0; k < b.grid.points(); ++k) {
          const bool same = b.group(i, k) == b.group(j, k);
          ASSERT_TRUE(!together || same);
          if (same) {
            ASSERT_EQ(b.position(i, k), b.position(j, k));
          }
          together = same;
        }
      }
    }
  }
}

TEST(Scbm, MergeProbabilityMatchesReflectionPrinciple) {
  const std::size_t n = 10000;
  const std::vector<double> starts{0.0, 0.5};
  RunningStats merged;
  for (std::size_t r = 0; r < n; ++r) {
    const auto b = simulate_scbm(starts, 1.0, 1.0, 1e-3, RngStream(3, r));
    merged.add(std::isfinite(b.coalescence_time(0, 1)) ? 1.0 : 0.0);
  }
  EXPECT_NEAR(merged.mean(), merge_probability(0.5, 1.0, 1.0), 3.0 * merged.se());
}

TEST(Scbm, CovariationFollowsMergeTime) {
  const std::size_t n = 10000;
  const std::vector<double> starts{0.0, 0.5};
  const auto grid = TimeGrid::uniform(1.0, 1e-3);
  CovariationAccumulator acc(grid, 0, 1);
  std::vector<RunningStats> predicted(11);
  for (std::size_t r = 0; r < n; ++r) {
    const auto b = simulate_scbm(starts, 1.0, 1.0, 1e-3, RngStream(4, r));
    acc.add(b);
    const double tau = b.coalescence_time(0, 1);
    for (std::size_t c = 1; c <= 10; ++c) {
      const double t = grid.time(c * 100);
      predicted[c].add(t - std::min(t, tau));
    }
  }
  const auto curve = acc.result();
  for (std::size_t c = 1; c <= 10; ++c) {
    const std::size_t k = c * 100;
    EXPECT_NEAR(curve.mean[k], predicted[c].mean(), 3.0 * std::hypot(curve.se[k], predicted[c].se()))
        << "t=" << grid.time(k);
  }
}

TEST(Scbm, ExchangeableInLabels) {
  const std::vector<double> starts{0.0, 0.4, -0.3};
  const RngStream root(5, 0);
  const auto streams = label_streams(root, 3);
  const std::vector<std::size_t> perm{2, 0, 1};
  std::vector<double> permuted_starts;
  std::vector<RngStream> permuted_streams;
  for (auto p : perm) {
    permuted_starts.push_back(starts[p]);
    permuted_streams.push_back(streams[p]);
  }
  const auto a = simulate_scbm(starts, 1.0, 1.0, 1e-2, streams);
  const auto b = simulate_scbm(permuted_starts, 1.0, 1.0, 1e-2, permuted_streams);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < a.grid.points(); ++k) {
      ASSERT_EQ(b.position(i, k), a.position(perm[i], k));
      for (std::size_t j = 0; j < 3; ++j) {
        ASSERT_EQ(b.group(i, k) == b.group(j, k), a.group(perm[i], k) == a.group(perm[j], k));
      }
    }
  }
}

TEST(Scbm, SharedStreamSystemCoalesces) {
  std::vector<double> x{0.0, 0.01, 0.02};
  RngStream s(6, 0);
  evolve_coalescing(x, 1.0, 5.0, 1e-2, s);
  EXPECT_EQ(x[0], x[1]);
  EXPECT_EQ(x[1], x[2]);
}

TEST(ExtendFlow, ReusesExistingStart) {
  const std::vector<double> starts{0.0, 1.0};
  const auto b = simulate_scbm(starts, 1.0, 0.5, 1e-2, RngStream(7, 0));
  const auto e = extend_flow(b, 1.0, RngStream(7, 1));
  ASSERT_EQ(e.labels, 3u);
  for (std::size_t k = 0; k < b.grid.points(); ++k) {
    EXPECT_EQ(e.position(2, k), b.position(1, k));
    EXPECT_EQ(e.group(2, k), b.group(1, k));
  }
}

TEST(ExtendFlow, NewPathIsBrownianAndCoalescesLikeAPair) {
  const std::size_t n = 10000;
  const double start = 0.5;
  std::vector<double> endpoints;
  RunningStats merged;
  const std::vector<double> origin{0.0};
  for (std::size_t r = 0; r < n; ++r) {
    const auto b = simulate_scbm(origin, 1.0, 1.0, 1e-3, RngStream(8, r));
    const auto e = extend_flow(b, start, RngStream(9, r));
    endpoints.push_back(e.position(1, e.grid.steps));
    merged.add(std::isfinite(e.coalescence_time(0, 1)) ? 1.0 : 0.0);
  }
  const auto ks = ks_one_sample(endpoints, [&](double y) { return normal_cdf(y - start); });
  EXPECT_LT(ks.statistic, 0.02);
  EXPECT_NEAR(merged.mean(), merge_probability(start, 1.0, 1.0), 3.0 * merged.se());
}

TEST(Sibm, SingleParticleIsBrownianWithSpeedRhoZero) {
  const std::size_t n = 10000;
  const auto kernel = InteractionKernel::gaussian();
  const std::vector<double> start{0.2};
  std::vector<double> endpoints;
  for (std::size_t r = 0; r < n; ++r) {
    endpoints.push_back(simulate_sibm(start, kernel, 1.0, 1e-2, RngStream(10, r)).position(0, 100));
  }
  const double sd = std::sqrt(kernel.rho0());
  const auto ks = ks_one_sample(endpoints, [&](double y) { return normal_cdf((y - 0.2) / sd); });
  EXPECT_LT(ks.statistic, 0.02);
}

TEST(Sibm, EqualStartsMoveTogetherAndOthersNeverMerge) {
  const std::vector<double> starts{0.0, 0.0, 0.3};
  const auto b = simulate_sibm(starts, InteractionKernel::gaussian(), 1.0, 1e-2, RngStream(11, 0));
  for (std::size_t k = 0; k < b.grid.points(); ++k) {
    EXPECT_EQ(b.position(0, k), b.position(1, k));
    EXPECT_NE(b.group(0, k), b.group(2, k));
  }
  EXPECT_GE(b.min_eigenvalue, -kEigenvalueClip * InteractionKernel::gaussian().rho0());
}

TEST(Sibm, CovariationIncrementFollowsKernel) {
  const std::size_t n = 10000;
  const auto kernel = InteractionKernel::gaussian();
  const std::vector<double> starts{0.0, 0.5};
  RunningStats gap;
  for (std::size_t r = 0; r < n; ++r) {
    const auto b = simulate_sibm(starts, kernel, 0.51, 1e-3, RngStream(12, r));
    const std::size_t k0 = 500;
    double realized = 0.0;
    for (std::size_t k = k0; k < b.grid.steps; ++k) {
      realized += (b.position(0, k + 1) - b.position(0, k)) * (b.position(1, k + 1) - b.position(1, k));
    }
    const double lag = b.grid.horizon - b.grid.time(k0);
    gap.add(realized - kernel.rho(b.position(0, k0) - b.position(1, k0)) * lag);
  }
  EXPECT_NEAR(gap.mean(), 0.0, 3.0 * gap.se());
}

TEST(Sibm, ManyParticlesStayPositiveSemidefinite) {
  std::vector<double> starts;
  for (int i = 0; i < 12; ++i) starts.push_back(0.01 * i);
  const auto b = simulate_sibm(starts, InteractionKernel::gaussian(), 0.2, 1e-3, RngStream(13, 0));
  EXPECT_GE(b.min_eigenvalue, -kEigenvalueClip * InteractionKernel::gaussian().rho0());
}

TEST(PsdRoot, SquaresBackAndRejectsNonFinite) {
  Eigen::MatrixXd s(2, 2);
  s << 2.0, 1.0, 1.0, 2.0;
  PsdRoot root(1e-9);
  const Eigen::MatrixXd r = root.compute(s);
  EXPECT_LT((r * r - s).norm(), 1e-12);
  EXPECT_NEAR(root.min_eigenvalue(), 1.0, 1e-12);
  s(0, 1) = s(1, 0) = std::nan("");
  try {
    root.compute(s);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.offending().rows(), 2);
  }
}

TEST(CovariationAccumulator, DiagonalAndDistantPairs) {
  const std::size_t n = 2000;
  const auto grid = TimeGrid::uniform(0.2, 1e-2);
  const std::vector<double> starts{0.0, 0.0, 10.0};
  CovariationAccumulator self(grid, 2, 2);
  CovariationAccumulator together(grid, 0, 1);
  CovariationAccumulator apart(grid, 0, 2);
  for (std::size_t r = 0; r < n; ++r) {
    const auto b = simulate_scbm(starts, 1.5, 0.2, 1e-2, RngStream(14, r));
    self.add(b);
    together.add(b);
    apart.add(b);
  }
  const auto s = self.result();
  const auto t = together.result();
  const auto a = apart.result();
  const std::size_t last = grid.steps;
  EXPECT_NEAR(s.mean[last], 1.5 * 0.2, 3.0 * s.se[last]);
  EXPECT_NEAR(t.mean[last], 1.5 * 0.2, 3.0 * t.se[last]);
  EXPECT_NEAR(a.mean[last], 0.0, 3.0 * a.se[last]);
}

TEST(CovariationAccumulator, RejectsMismatchAndSmallSamples) {
  const std::vector<double> starts{0.0, 1.0};
  CovariationAccumulator acc(TimeGrid::uniform(1.0, 0.1), 0, 1);
  EXPECT_THROW(acc.add(simulate_scbm(starts, 1.0, 1.0, 0.05, RngStream(15, 0))), ParameterError);
  acc.add(simulate_scbm(starts, 1.0, 1.0, 0.1, RngStream(15, 1)));
  EXPECT_THROW(acc.result(), ParameterError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "coalflow/errors.hpp"
#include "coalflow/scsm.hpp"
#include "coalflow/stats.hpp"

using namespace coalflow;

namespace {

// P(xi_t <= y) for d(xi) = sqrt(xi) dB started at x: Poisson mixture of gammas.
double feller_cdf(double y, double x, double t) {
  if (y < 0.0) return 0.0;
  const double rate = 2.0 * x / t;
  const boost::math::poisson_distribution<double> n(rate);
  double total = std::exp(-rate);
  for (int k = 1; k < 200; ++k) {
    total += boost::math::pdf(n, k) * boost::math::gamma_p(k, y / (t / 2.0));
  }
  return total;
}

ScsmOptions endpoints_only() {
  ScsmOptions o;
  o.record_every = std::numeric_limits<std::size_t>::max();
  return o;
}

}  // namespace

TEST(ScsmAtomic, SingleAtomMassIsFeller) {
  const auto mu = AtomicMeasure::parse("(0,0.8)");
  std::vector<double> mass;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const auto p = simulate_scsm_atomic(mu, BranchingRate::constant(1.0), 2.0, 1.0, 1e-2,
                                        RngStream(1, r), endpoints_only());
    mass.push_back(p.total_mass(p.points() - 1));
  }
  const auto ks = ks_one_sample(
      mass, [](double y) { return feller_cdf(y, 0.8, 1.0); },
      [](double y) { return y <= 0.0 ? 0.0 : feller_cdf(y, 0.8, 1.0); });
  EXPECT_LT(ks.statistic, 0.02);
}

TEST(ScsmAtomic, MassMartingaleAndSecondMoment) {
  const auto mu = AtomicMeasure::parse("(-1,1),(1,1)");
  const std::size_t n = 4000;
  std::vector<RunningStats> mean(5);
  RunningStats square;
  for (std::uint64_t r = 0; r < n; ++r) {
    const auto p = simulate_scsm_atomic(mu, BranchingRate::constant(1.0), 1.0, 1.0, 1e-2,
                                        RngStream(2, r));
    for (std::size_t c = 0; c < 5; ++c) mean[c].add(p.total_mass(c * 25));
    square.add(std::pow(p.total_mass(100), 2));
  }
  for (const auto& m : mean) EXPECT_NEAR(m.mean(), 2.0, 3.0 * m.se());
  EXPECT_NEAR(square.mean(), 4.0 + 2.0, 3.0 * square.se());
}

TEST(ScsmAtomic, AtomsStartedTogetherShareCarrierNotMass) {
  const auto mu = AtomicMeasure::parse("(0.3,1),(0.3,1)");
  const std::size_t n = 4000;
  double sab = 0.0;
  RunningStats a;
  RunningStats b;
  for (std::uint64_t r = 0; r < n; ++r) {
    const auto p = simulate_scsm_atomic(mu, BranchingRate::constant(1.0), 1.0, 0.5, 1e-2,
                                        RngStream(3, r), ScsmOptions{false, 1});
    for (std::size_t k = 0; k < p.points(); ++k) {
      ASSERT_EQ(p.position[p.index(k, 0)], p.position[p.index(k, 1)]);
      ASSERT_EQ(p.group[p.index(k, 0)], p.group[p.index(k, 1)]);
    }
    const double x = p.mass[p.index(p.points() - 1, 0)];
    const double y = p.mass[p.index(p.points() - 1, 1)];
    a.add(x);
    b.add(y);
    sab += x * y;
  }
  const double cov = sab / n - a.mean() * b.mean();
  const double corr = cov / std::sqrt(a.variance() * b.variance());
  EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(n));
}

TEST(ScsmAtomic, MartingaleFunctionalOfConstantIsMassIncrement) {
  const auto mu = AtomicMeasure::parse("(0,1),(1,0.5)");
  const auto p = simulate_scsm_atomic(mu, BranchingRate::bump(1.0), 1.0, 1.0, 1e-2, RngStream(4, 0));
  const auto m = martingale_functional(p, SmoothFunction::constant(1.0));
  for (std::size_t k = 0; k < p.points(); ++k) {
    EXPECT_NEAR(m[k], p.total_mass(k) - p.total_mass(0), 1e-12);
  }
}

TEST(ScsmAtomic, MartingaleMeanZeroAndOrthogonalIncrements) {
  const auto mu = AtomicMeasure::parse("(0,1),(0.5,1)");
  const std::size_t n = 10000;
  for (const char* id : {"sin", "sq:1"}) {
    const auto phi = SmoothFunction::parse(id);
    RunningStats end;
    RunningStats mid;
    RunningStats inc;
    double cross = 0.0;
    for (std::uint64_t r = 0; r < n; ++r) {
      const auto p = simulate_scsm_atomic(mu, BranchingRate::bump(1.0), 1.0, 1.0, 1e-2,
                                          RngStream(5, r));
      const auto m = martingale_functional(p, phi);
      end.add(m.back());
      mid.add(m[50]);
      inc.add(m.back() - m[50]);
      cross += m[50] * (m.back() - m[50]);
    }
    EXPECT_NEAR(end.mean(), 0.0, 3.0 * end.se()) << id;
    const double corr = (cross / n - mid.mean() * inc.mean()) / std::sqrt(mid.variance() * inc.variance());
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(n)) << id;
  }
}

TEST(QvPredicted, ConstantFunctionIntegratesMass) {
  const auto mu = AtomicMeasure::parse("(0,1.3)");
  const auto p = simulate_scsm_atomic(mu, BranchingRate::constant(1.0), 1.0, 1.0, 1e-2, RngStream(6, 0));
  const auto q = qv_predicted(p, SmoothFunction::constant(1.0), BranchingRate::constant(1.0));
  double integral = 0.0;
  for (std::size_t k = 1; k < p.points(); ++k) {
    integral += 0.5 * (p.times[k] - p.times[k - 1]) * (p.total_mass(k - 1) + p.total_mass(k));
    EXPECT_NEAR(q[k], integral, 1e-12);
  }
}

TEST(QvPredicted, DistantAtomsHaveNoCrossTerms) {
  const auto mu = AtomicMeasure::parse("(0,1),(20,1)");
  const auto sigma = BranchingRate::bump(1.0);
  const auto phi = SmoothFunction::sine();
  const double speed = 1.5;
  const auto p = simulate_scsm_atomic(mu, sigma, speed, 0.1, 1e-3, RngStream(7, 0));
  auto integrand = [&](std::size_t k) {
    double v = 0.0;
    for (std::size_t i = 0; i < p.atoms; ++i) {
      const double x = p.position[p.index(k, i)];
      const double m = p.mass[p.index(k, i)];
      v += sigma(x) * m * phi(x) * phi(x) + speed * m * m * phi.first(x) * phi.first(x);
    }
    return v;
  };
  const auto q = qv_predicted(p, phi, sigma);
  double integral = 0.0;
  for (std::size_t k = 1; k < p.points(); ++k) {
    integral += 0.5 * (p.times[k] - p.times[k - 1]) * (integrand(k - 1) + integrand(k));
  }
  EXPECT_NEAR(q.back(), integral, 1e-12);
}

TEST(QvPredicted, MatchesRealizedForAtomsStartedTogether) {
  const auto mu = AtomicMeasure::parse("(0,1),(0,1)");
  const auto sigma = BranchingRate::bump(1.0);
  const auto phi = SmoothFunction::sine();
  RunningStats realized;
  RunningStats predicted;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const auto p = simulate_scsm_atomic(mu, sigma, 1.0, 0.5, 1e-3, RngStream(8, r));
    realized.add(realized_qv(martingale_functional(p, phi)).back());
    predicted.add(qv_predicted(p, phi, sigma).back());
  }
  EXPECT_NEAR(realized.mean(), predicted.mean(), 3.0 * std::hypot(realized.se(), predicted.se()));
}

TEST(ScsmGeneral, AtomCountIsPoissonAtCutoff) {
  const auto mu = AtomicMeasure::parse("(0,1)");
  std::vector<std::uint64_t> counts;
  std::vector<RunningStats> mass(3);
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const auto p = simulate_scsm_general(mu, BranchingRate::constant(1.0), 1.0, 0.5, 1.5, 1e-2,
                                         RngStream(9, r), ScsmOptions{false, 50});
    counts.push_back(p.live_atoms(0));
    for (std::size_t c = 0; c < 3; ++c) mass[c].add(p.total_mass(c));
  }
  EXPECT_GT(poisson_gof(counts, 4.0).p_value, 0.01);
  for (const auto& m : mass) EXPECT_NEAR(m.mean(), 1.0, 3.0 * m.se());
}

TEST(ScsmGeneral, OutputStartsAtCutoff) {
  const auto mu = AtomicMeasure::parse("(0,1)");
  const auto p = simulate_scsm_general(mu, BranchingRate::bump(1.0), 1.0, 0.2, 1.0, 1e-2, RngStream(10, 0));
  EXPECT_DOUBLE_EQ(p.times.front(), 0.2);
  EXPECT_DOUBLE_EQ(p.times.back(), 1.0);
  EXPECT_THROW(simulate_scsm_general(mu, BranchingRate::bump(1.0), 1.0, 1.0, 1.0, 1e-2, RngStream(10, 0)),
               ParameterError);
}

TEST(ScsmGeneral, TotalMassDoesNotDependOnSpeed) {
  const auto mu = AtomicMeasure::parse("(0,1),(2,1)");
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto slow = simulate_scsm_general(mu, BranchingRate::constant(1.0), 0.1, 0.2, 1.0, 1e-2,
                                            RngStream(11, r), endpoints_only());
    const auto fast = simulate_scsm_general(mu, BranchingRate::constant(1.0), 10.0, 0.2, 1.0, 1e-2,
                                            RngStream(11, r), endpoints_only());
    ASSERT_EQ(slow.total_mass(1), fast.total_mass(1));
  }
}

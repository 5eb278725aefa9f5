#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "coalflow/errors.hpp"
#include "coalflow/kernel.hpp"

using namespace coalflow;

namespace {

// int h(y - x) h(y) dy by quadrature.
double autocorrelation(const std::function<double(double)>& h, double x, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate([&](double y) { return h(y - x) * h(y); }, a, b);
}

}  // namespace

TEST(InteractionKernel, GaussianClosedFormMatchesQuadrature) {
  const auto k = InteractionKernel::gaussian();
  const auto h = [](double y) { return std::exp(-y * y / 2.0); };
  for (double x : {0.0, 0.7, 2.0}) {
    EXPECT_NEAR(k.rho(x), autocorrelation(h, x, -30.0, 30.0), 1e-10);
  }
  EXPECT_NEAR(k.rho(0.0), std::sqrt(std::numbers::pi), 1e-12);
  EXPECT_NEAR(k.rho(2.0), std::sqrt(std::numbers::pi) * std::exp(-1.0), 1e-12);
}

TEST(InteractionKernel, VanishesFarAway) {
  for (const auto& k : {InteractionKernel::gaussian(), InteractionKernel::triangular()}) {
    EXPECT_LT(std::abs(k.rho(50.0)), 1e-9);
    EXPECT_LT(std::abs(k.rho(-50.0)), 1e-9);
    EXPECT_TRUE(k.vanishes_at_infinity());
  }
  EXPECT_FALSE(InteractionKernel::constant(1.0).vanishes_at_infinity());
}

TEST(InteractionKernel, TriangularMatchesQuadrature) {
  const auto k = InteractionKernel::triangular(1.0);
  const auto h = [](double y) { return std::max(0.0, 1.0 - std::abs(y)); };
  for (double x : {0.0, 0.3, 1.1, 1.9}) {
    EXPECT_NEAR(k.rho(x), autocorrelation(h, x, std::max(-1.0, x - 1.0), std::min(1.0, x + 1.0)), 1e-6) << x;
  }
}

TEST(InteractionKernel, TabulatedGaussianProfile) {
  const double dx = 0.01;
  std::vector<double> h;
  for (int i = -800; i <= 800; ++i) h.push_back(std::exp(-std::pow(i * dx, 2) / 2.0));
  const auto k = InteractionKernel::tabulated(-8.0, dx, h);
  EXPECT_NEAR(k.rho(0.0), std::sqrt(std::numbers::pi), 1e-3);
  EXPECT_NEAR(k.rho(1.0), std::sqrt(std::numbers::pi) * std::exp(-0.25), 1e-3);
  EXPECT_EQ(k.rho(100.0), 0.0);
  EXPECT_EQ(k.out_of_support_queries(), 1u);
}

TEST(InteractionKernel, Scaling) {
  const auto k = InteractionKernel::gaussian();
  const auto same = scale_rho(k, 1.0);
  for (double x : {0.0, 0.5, 3.0}) EXPECT_EQ(same.rho(x), k.rho(x));
  for (double theta : {1.0, 4.0, 64.0}) EXPECT_EQ(scale_rho(k, theta).rho0(), k.rho0());
  EXPECT_NEAR(scale_rho(k, 4.0).rho(1.0), std::sqrt(std::numbers::pi) * std::exp(-4.0), 1e-12);
  EXPECT_THROW(scale_rho(k, 0.5), ParameterError);
}

TEST(InteractionKernel, Parse) {
  EXPECT_NEAR(InteractionKernel::parse("gauss:2").rho0(), 2.0 * std::sqrt(std::numbers::pi), 1e-12);
  EXPECT_EQ(InteractionKernel::parse("const:3").rho(10.0), 3.0);
  EXPECT_THROW(InteractionKernel::parse("box"), ParameterError);
}

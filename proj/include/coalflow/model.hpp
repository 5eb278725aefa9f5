#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace coalflow {

/// Uniform grid 0 = t_0 < ... < t_K = horizon. The step is horizon / K with
/// K the smallest integer such that the step does not exceed the request.
struct TimeGrid {
  double horizon = 0.0;
  std::size_t steps = 0;

  static TimeGrid uniform(double horizon, double dt);

  double dt() const { return horizon / static_cast<double>(steps); }
  double time(std::size_t k) const {
    return k == steps ? horizon : static_cast<double>(k) * dt();
  }
  std::size_t points() const { return steps + 1; }
};

/// Position-dependent branching rate sigma(x), bounded below by a positive
/// constant. Scaling by theta gives sigma_theta(x) = sigma(theta x).
class BranchingRate {
 public:
  static BranchingRate constant(double value);
  /// base + amplitude * exp(-(x / width)^2); tends to `base` at infinity.
  static BranchingRate bump(double base, double amplitude = 1.0, double width = 1.0);
  static BranchingRate custom(std::function<double(double)> rate, double lower_bound,
                              std::optional<double> limit, std::string description);
  /// "const:<c>" or "bump:<base>[:<amplitude>[:<width>]]".
  static BranchingRate parse(std::string_view spec);

  double operator()(double x) const { return rate_(scale_ * x); }
  /// The constant epsilon with inf sigma >= epsilon.
  double lower_bound() const { return lower_bound_; }
  /// sigma_infinity, when sigma has a limit as |x| -> infinity.
  std::optional<double> limit() const { return limit_; }
  bool is_constant() const { return constant_; }
  BranchingRate scaled(double theta) const;
  std::string description() const;

 private:
  BranchingRate() = default;

  std::function<double(double)> rate_;
  double lower_bound_ = 0.0;
  std::optional<double> limit_;
  bool constant_ = false;
  double scale_ = 1.0;
  std::string description_;
};

/// A C^2 test function together with its first two derivatives.
struct SmoothFunction {
  std::string id;
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;

  double operator()(double x) const { return value(x); }

  static SmoothFunction constant(double c);
  static SmoothFunction sine();
  /// exp(-x^2)
  static SmoothFunction gauss();
  /// L^2 tanh(x^2 / L^2): behaves like x^2 near the origin, bounded by L^2.
  static SmoothFunction smooth_square(double level);
  /// "one", "sin", "gauss" or "sq:<L>".
  static SmoothFunction parse(std::string_view id);
};

}  // namespace coalflow

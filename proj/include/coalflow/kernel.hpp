#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace coalflow {

/// Interaction function rho(x) = \int h(y - x) h(y) dy of a white-noise driven
/// Brownian flow, together with its theta-rescaling rho_theta(x) = rho(theta x).
///
/// Built-in profiles:
///  - gaussian: h(x) = exp(-x^2 / (2 w^2)), rho(x) = sqrt(pi) w exp(-x^2 / (4 w^2));
///  - triangular: h(x) = max(0, 1 - |x| / a), rho by exact piecewise quadrature,
///    tabulated on a grid of pitch 1e-3 * 2a and interpolated by cubic B-splines;
///  - tabulated: h sampled on a uniform grid, rho by discrete autocorrelation;
///    queries beyond the tabulated lag range return 0 and are counted;
///  - constant: rho(x) = rho(0) for all x (perfectly correlated motion). Not the
///    autocorrelation of a square-integrable h; useful as a degenerate check.
class InteractionKernel {
 public:
  enum class Kind { gaussian, triangular, tabulated, constant };

  static InteractionKernel gaussian(double width = 1.0);
  static InteractionKernel triangular(double half_width = 1.0);
  static InteractionKernel tabulated(double x0, double dx, std::vector<double> h);
  static InteractionKernel constant(double rho0);
  /// "gauss[:w]", "tri[:a]" or "const:<rho0>".
  static InteractionKernel parse(std::string_view spec);

  double rho(double x) const;
  double operator()(double x) const { return rho(x); }
  double rho0() const { return rho0_; }

  /// rho_theta(x) = rho(theta x). rho_theta(0) = rho(0).
  InteractionKernel scaled(double theta) const;
  double scale() const { return scale_; }
  Kind kind() const { return kind_; }
  /// Whether rho(x) -> 0 as |x| -> infinity.
  bool vanishes_at_infinity() const { return kind_ != Kind::constant; }
  /// Number of queries of a tabulated kernel beyond its lag range.
  std::uint64_t out_of_support_queries() const;
  std::string description() const;

 private:
  struct Table;
  InteractionKernel() = default;
  double base_rho(double x) const;

  Kind kind_ = Kind::gaussian;
  double width_ = 1.0;
  double rho0_ = 0.0;
  double scale_ = 1.0;
  std::shared_ptr<const Table> table_;
  std::shared_ptr<std::atomic<std::uint64_t>> out_of_support_;
};

/// Free-function aliases for the operation names used in the docs.
inline double rho_eval(const InteractionKernel& kernel, double x) { return kernel.rho(x); }
InteractionKernel scale_rho(const InteractionKernel& kernel, double theta);

}  // namespace coalflow

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "coalflow/measure.hpp"
#include "coalflow/model.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

/// One realization of the Kingman coalescent driving the dual process.
struct DualRun {
  std::size_t initial_count = 0;
  double horizon = 0.0;
  std::vector<double> jump_times;
  /// Slots (i, j), i < j, merged at each jump (0-based, arity before the jump).
  std::vector<std::pair<std::size_t, std::size_t>> merges;
  /// Particle count on each segment; counts.size() == jump_times.size() + 1.
  std::vector<std::size_t> counts;
  /// exp(1/2 int_0^t M_s (M_s - 1) ds)
  double fk_weight = 1.0;

  std::size_t final_count() const { return counts.back(); }
};

/// Count l waits Exponential(rate l(l-1)/2), then a uniformly chosen ordered
/// pair merges. Stops at one particle or at the horizon.
DualRun sample_coalescent(std::size_t m0, double horizon, RngStream& stream);

/// Maps an (m-1)-variable point to an m-variable point: the last coordinate
/// fills slots i and j, the others fill the remaining slots in order.
class MergeOperator {
 public:
  MergeOperator(std::size_t arity, std::size_t i, std::size_t j);

  std::size_t arity() const { return arity_; }
  std::vector<double> expand(std::span<const double> reduced) const;
  /// Branching factor sigma at the merged coordinate.
  double multiplier(const BranchingRate& sigma, std::span<const double> reduced) const {
    return sigma(reduced.back());
  }

 private:
  std::size_t arity_;
  std::size_t i_;
  std::size_t j_;
};

/// An m-variable test function.
struct MomentFunction {
  std::string id;
  std::size_t arity = 0;
  std::function<double(std::span<const double>)> value;
  /// True when the value does not depend on the arguments.
  bool constant = false;

  double operator()(std::span<const double> x) const { return value(x); }

  static MomentFunction one(std::size_t arity);
  /// exp(-sum x_k^2)
  static MomentFunction gauss(std::size_t arity);
  /// prod_k phi(x_k)
  static MomentFunction product(const SmoothFunction& phi, std::size_t arity);
  /// "one", "gauss" or any SmoothFunction id (used as a product).
  static MomentFunction parse(std::string_view id, std::size_t arity);
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// <f, nu^m>: sum over m-tuples of atoms of mass products times f.
double tensor_integral(const AtomicMeasure& nu, const MomentFunction& f);

/// Tuples of mu^m are enumerated when size^m is at most this.
inline constexpr double kTupleEnumerationLimit = 1e4;

/// Value of one dual replicate: <Y_t, mu^{M_t}> times the Feynman-Kac weight.
double dual_replicate(const DualRun& run, const AtomicMeasure& mu, const BranchingRate& sigma,
                      double speed, const MomentFunction& f, double dt, RngStream& stream);

/// Estimate of E <f, X_t^m> through the dual process.
Estimate dual_moment_estimate(const AtomicMeasure& mu, const BranchingRate& sigma, double speed,
                              const MomentFunction& f, std::size_t m, double t,
                              std::size_t replicates, double dt, const RngStream& stream);

/// Estimate of E <f, X_t^m> by simulating the SCSM forward. With a cutoff the
/// general (excursion) construction is used, otherwise the finite-atom one.
Estimate forward_moment_estimate(const AtomicMeasure& mu, const BranchingRate& sigma,
                                 double speed, const MomentFunction& f, std::size_t m, double t,
                                 std::size_t replicates, double dt, const RngStream& stream,
                                 std::optional<double> cutoff = std::nullopt);

nlohmann::json to_json(const Estimate& e);

}  // namespace coalflow

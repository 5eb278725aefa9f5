#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "coalflow/kernel.hpp"
#include "coalflow/measure.hpp"
#include "coalflow/model.hpp"
#include "coalflow/rng.hpp"
#include "coalflow/scsm.hpp"

namespace coalflow {

/// Superprocess with dependent spatial motion: the excursion construction of
/// simulate_scsm_general with interacting (never merging) carriers.
MeasurePath simulate_sdsm(const AtomicMeasure& mu, const InteractionKernel& kernel,
                          const BranchingRate& sigma, double cutoff, double horizon, double dt,
                          const RngStream& stream, ScsmOptions options = {});

/// Each atom (a, m) becomes (a / theta, m / theta^2).
AtomicMeasure rescale_measure(const AtomicMeasure& mu, double theta);

/// The maps induced by theta: measure, time, interaction and branching rate.
struct RescalingSpec {
  double theta = 1.0;

  explicit RescalingSpec(double theta);
  AtomicMeasure measure(const AtomicMeasure& mu) const { return rescale_measure(mu, theta); }
  double time(double t) const { return theta * theta * t; }
  InteractionKernel interaction(const InteractionKernel& k) const { return k.scaled(theta); }
  BranchingRate branching(const BranchingRate& s) const { return s.scaled(theta); }
};

enum class RescaleRoute { direct, pushforward };

/// One draw of the rescaled process at time t, started from `mu_target`.
/// The direct route simulates the process with interaction rho(theta x) and
/// branching sigma(theta x). The pushforward route simulates the unscaled
/// process from the inverse image of `mu_target` up to time theta^2 t and maps
/// the result back.
AtomicMeasure simulate_rescaled_sdsm(const AtomicMeasure& mu_target,
                                     const InteractionKernel& kernel, const BranchingRate& sigma,
                                     double theta, double t, double cutoff, double dt,
                                     const RngStream& stream,
                                     RescaleRoute route = RescaleRoute::direct);

/// Step used for the rescaled interacting motion: min(dt, 0.1 / theta^2).
double rescaled_step(double dt, double theta);

struct ConvergenceConfig {
  AtomicMeasure mu;
  InteractionKernel kernel = InteractionKernel::gaussian();
  BranchingRate sigma = BranchingRate::bump(1.0);
  double cutoff = 0.25;
  double dt = 1e-3;
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
  /// Starting points of the embedded two-particle motion.
  double pair_left = 0.0;
  double pair_right = 0.5;
  double pair_horizon = 1.0;
  bool pair_distances = true;
};

struct ConvergenceRow {
  double theta = 1.0;
  std::string phi_id;
  double ks = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// For each theta, two-sample KS distance between <phi, X^theta_t> and the
/// limiting coalescing superprocess (speed rho(0), branching sigma at
/// infinity), plus rows with phi_id "pair_distance" comparing the embedded
/// two-particle distance with absorbed Brownian motion.
std::vector<ConvergenceRow> convergence_experiment(const std::vector<double>& thetas,
                                                   const std::vector<SmoothFunction>& phis,
                                                   double t, const ConvergenceConfig& config);

/// Distance |x_1 - x_2| at `horizon` of the two-particle interacting motion.
double pair_distance_sample(double left, double right, const InteractionKernel& kernel,
                            double horizon, double dt, RngStream stream);

/// CDF of |D_T| for a Brownian motion D with variance 2 speed per unit time,
/// started at d0 > 0 and absorbed at 0.
double absorbed_distance_cdf(double y, double d0, double speed, double horizon);

/// KS distance of distances below `resolution` snapped to 0 against the
/// absorbed law (which has an atom at 0).
double pair_distance_ks(std::vector<double> distances, double d0, double speed, double horizon,
                        double resolution = 1e-3);

}  // namespace coalflow

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "json.hpp"

#include "coalflow/measure.hpp"
#include "coalflow/model.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

/// Exact draw from the transition law of d(xi) = sqrt(xi) dB over time t:
/// N ~ Poisson(2x/t), then 0 if N = 0 and Gamma(N, t/2) otherwise.
double feller_sample_exact(double x, double t, RngStream& stream);

/// Time of absorption inside [0, duration] for a path started at x > 0,
/// conditioned on being absorbed by `duration`.
double feller_death_time(double x, double duration, RngStream& stream);

/// Euler scheme xi <- max(0, xi + sqrt(xi dt) Z) on a uniform grid over
/// [0, horizon]. Returns the values at all grid points.
std::vector<double> feller_path_euler(double x, double horizon, double dt, RngStream& stream);

/// Total mass 2/r of the excursions that survive past r.
double excursion_survival_mass(double r);

/// An excursion observed from its cutoff r onward.
struct ConditionedExcursion {
  std::vector<double> times;
  std::vector<double> mass;
  /// Absorption time, +infinity if still alive at the horizon.
  double death_time = std::numeric_limits<double>::infinity();
};

/// One excursion conditioned to survive past r: Exponential(mean r/2) mass at
/// r, then exact transitions on a uniform grid of [r, horizon].
ConditionedExcursion excursion_conditioned(double r, double horizon, double dt,
                                           RngStream& stream);

struct ExcursionSeed {
  double location = 0.0;
  /// Mass at internal time `cutoff`.
  double mass = 0.0;
  /// Realized internal death time, filled in by the simulators.
  double death_time = std::numeric_limits<double>::quiet_NaN();
};

struct ExcursionEnsemble {
  double cutoff = 0.0;
  std::vector<ExcursionSeed> atoms;
};

/// Poisson(2 <1, mu> / r) excursions alive at r, locations drawn from
/// mu / <1, mu>, masses Exponential(mean r/2), sorted by decreasing mass.
ExcursionEnsemble sample_excursion_ensemble(const AtomicMeasure& mu, double r,
                                            RngStream& stream);

nlohmann::json to_json(const ExcursionEnsemble& ensemble);

/// Running trapezoid integral of sigma along a path sampled with step dt.
/// Throws ModelViolation where sigma is not positive or falls below its
/// declared lower bound.
std::vector<double> clock(std::span<const double> path, double dt, const BranchingRate& sigma);

/// psi(t) = int_0^t sigma(y(s)) ds, with linear interpolation of the path
/// between grid points.
double time_change(std::span<const double> path, double dt, const BranchingRate& sigma,
                   double t);

/// Evaluates sigma at x and enforces its lower bound.
double checked_rate(const BranchingRate& sigma, double x);

}  // namespace coalflow

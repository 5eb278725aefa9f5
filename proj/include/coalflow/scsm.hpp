#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"

#include "coalflow/measure.hpp"
#include "coalflow/model.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

/// Atomic measure-valued path sampled at record times. Atom i rides carrier
/// position[k * atoms + i] with mass mass[k * atoms + i]; atoms sharing a
/// coalesced carrier have the same group id (the smallest atom index).
struct MeasurePath {
  std::vector<double> times;
  std::size_t atoms = 0;
  std::vector<double> location;
  std::vector<double> position;
  std::vector<double> mass;
  /// Internal (time-changed) age of each atom.
  std::vector<double> clock;
  std::vector<std::uint32_t> group;
  /// Internal absorption time per atom, +infinity while alive.
  std::vector<double> death_time;
  double speed = 0.0;
  /// Leave zero-mass atoms out of state() and serialized output.
  bool prune = true;

  std::size_t points() const { return times.size(); }
  std::size_t index(std::size_t k, std::size_t i) const { return k * atoms + i; }
  AtomicMeasure state(std::size_t k) const;
  double total_mass(std::size_t k) const;
  std::size_t live_atoms(std::size_t k) const;
  /// <phi, X_{t_k}>
  double integrate(std::size_t k, const std::function<double(double)>& phi) const;
};

struct ScsmOptions {
  bool prune = true;
  /// Record every n-th grid point (the last point is always recorded).
  std::size_t record_every = 1;
};

/// Finite-atom construction: carriers form a coalescing system started at the
/// atom positions, each mass is a Feller diffusion run on the clock
/// int_0^t sigma(y_i(s)) ds.
MeasurePath simulate_scsm_atomic(const AtomicMeasure& atoms, const BranchingRate& sigma,
                                 double speed, double horizon, double dt, const RngStream& stream,
                                 ScsmOptions options = {});

/// General initial state through a Poisson ensemble of excursions at internal
/// cutoff eps * r (eps = lower bound of sigma). Output starts at time r.
MeasurePath simulate_scsm_general(const AtomicMeasure& mu, const BranchingRate& sigma,
                                  double speed, double cutoff, double horizon, double dt,
                                  const RngStream& stream, ScsmOptions options = {});

/// M_t(phi) = <phi, X_t> - <phi, X_0> - (speed / 2) int_0^t <phi'', X_s> ds,
/// with X_0 the first recorded state.
std::vector<double> martingale_functional(const MeasurePath& path, const SmoothFunction& phi);

/// Predicted quadratic variation of M(phi):
/// int <sigma phi^2, X_s> ds + speed int sum_groups (sum_i m_i phi'(x_i))^2 ds.
std::vector<double> qv_predicted(const MeasurePath& path, const SmoothFunction& phi,
                                 const BranchingRate& sigma);

nlohmann::json summary_json(const MeasurePath& path);

}  // namespace coalflow

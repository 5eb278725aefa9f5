#include "coalflow/scsm.hpp"

#include <cmath>

#include "coalflow/branching.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/flows.hpp"
#include "pipeline.hpp"

namespace coalflow {

AtomicMeasure MeasurePath::state(std::size_t k) const {
  AtomicMeasure mu;
  for (std::size_t i = 0; i < atoms; ++i) {
    const double m = mass[index(k, i)];
    if (prune && m == 0.0) continue;
    mu.add(position[index(k, i)], m);
  }
  return mu;
}

double MeasurePath::total_mass(std::size_t k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) s += mass[index(k, i)];
  return s;
}

std::size_t MeasurePath::live_atoms(std::size_t k) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < atoms; ++i) n += mass[index(k, i)] > 0.0 ? 1 : 0;
  return n;
}

double MeasurePath::integrate(std::size_t k, const std::function<double(double)>& phi) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    const double m = mass[index(k, i)];
    if (m > 0.0) s += m * phi(position[index(k, i)]);
  }
  return s;
}

namespace {

void validate(const BranchingRate& sigma, double speed, double horizon, double dt) {
  if (!(sigma.lower_bound() > 0.0)) {
    throw ModelViolation("branching rate must be bounded below by a positive constant");
  }
  if (!(speed > 0.0)) throw ParameterError("speed must be positive");
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
}

auto coalescing_carriers(double speed, const RngStream& root) {
  return [speed, root](std::span<const double> starts) {
    std::vector<RngStream> streams;
    streams.reserve(starts.size());
    for (std::size_t c = 0; c < starts.size(); ++c) streams.push_back(root.split(c));
    return CoalescingSystem(starts, speed, std::move(streams));
  };
}

}  // namespace

MeasurePath simulate_scsm_atomic(const AtomicMeasure& atoms, const BranchingRate& sigma,
                                 double speed, double horizon, double dt, const RngStream& stream,
                                 ScsmOptions options) {
  validate(sigma, speed, horizon, dt);
  if (atoms.empty()) throw ParameterError("simulate_scsm_atomic: need at least one atom");
  detail::PipelineSetup setup;
  for (const auto& a : atoms.atoms()) {
    setup.location.push_back(a.position);
    setup.start_mass.push_back(a.mass);
  }
  setup.pieces = {{horizon, dt}};
  setup.record_every = options.record_every;
  setup.prune = options.prune;
  setup.speed = speed;
  return detail::run_pipeline(setup, coalescing_carriers(speed, stream.split(0)), sigma,
                              stream.split(1));
}

MeasurePath simulate_scsm_general(const AtomicMeasure& mu, const BranchingRate& sigma,
                                  double speed, double cutoff, double horizon, double dt,
                                  const RngStream& stream, ScsmOptions options) {
  validate(sigma, speed, horizon, dt);
  if (!(cutoff > 0.0) || !(cutoff < horizon)) {
    throw ParameterError("simulate_scsm_general: need 0 < cutoff < horizon");
  }
  const double internal_cutoff = sigma.lower_bound() * cutoff;
  RngStream ensemble_stream = stream.split(2);
  const auto ensemble = sample_excursion_ensemble(mu, internal_cutoff, ensemble_stream);
  detail::PipelineSetup setup;
  for (const auto& a : ensemble.atoms) {
    setup.location.push_back(a.location);
    setup.start_mass.push_back(a.mass);
  }
  setup.start_clock = internal_cutoff;
  setup.pieces = {{cutoff, dt}, {horizon - cutoff, dt}};
  setup.first_record_piece = 1;
  setup.record_every = options.record_every;
  setup.prune = options.prune;
  setup.speed = speed;
  return detail::run_pipeline(setup, coalescing_carriers(speed, stream.split(0)), sigma,
                              stream.split(1));
}

std::vector<double> martingale_functional(const MeasurePath& path, const SmoothFunction& phi) {
  std::vector<double> out(path.points(), 0.0);
  if (path.points() == 0) return out;
  const double base = path.integrate(0, phi.value);
  double integral = 0.0;
  double prev = path.integrate(0, phi.second);
  for (std::size_t k = 1; k < path.points(); ++k) {
    const double cur = path.integrate(k, phi.second);
    integral += 0.5 * (path.times[k] - path.times[k - 1]) * (prev + cur);
    prev = cur;
    out[k] = path.integrate(k, phi.value) - base - 0.5 * path.speed * integral;
  }
  return out;
}

std::vector<double> qv_predicted(const MeasurePath& path, const SmoothFunction& phi,
                                 const BranchingRate& sigma) {
  std::vector<double> out(path.points(), 0.0);
  std::vector<double> slope(path.atoms, 0.0);
  auto integrand = [&](std::size_t k) {
    double branching = 0.0;
    std::fill(slope.begin(), slope.end(), 0.0);
    for (std::size_t i = 0; i < path.atoms; ++i) {
      const double m = path.mass[path.index(k, i)];
      if (m == 0.0) continue;
      const double x = path.position[path.index(k, i)];
      const double f = phi(x);
      branching += m * sigma(x) * f * f;
      slope[path.group[path.index(k, i)]] += m * phi.first(x);
    }
    double spatial = 0.0;
    for (double s : slope) spatial += s * s;
    return branching + path.speed * spatial;
  };
  if (path.points() == 0) return out;
  double prev = integrand(0);
  for (std::size_t k = 1; k < path.points(); ++k) {
    const double cur = integrand(k);
    out[k] = out[k - 1] + 0.5 * (path.times[k] - path.times[k - 1]) * (prev + cur);
    prev = cur;
  }
  return out;
}

nlohmann::json summary_json(const MeasurePath& path) {
  nlohmann::json totals = nlohmann::json::array();
  nlohmann::json counts = nlohmann::json::array();
  for (std::size_t k = 0; k < path.points(); ++k) {
    totals.push_back(path.total_mass(k));
    counts.push_back(path.live_atoms(k));
  }
  return {{"times", path.times}, {"total_mass", totals}, {"atom_count", counts},
          {"atoms", path.atoms}, {"speed", path.speed}};
}

}  // namespace coalflow

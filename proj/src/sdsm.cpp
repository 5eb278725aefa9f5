#include "coalflow/sdsm.hpp"

#include <algorithm>
#include <cmath>

#include "coalflow/branching.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/flows.hpp"
#include "coalflow/parallel.hpp"
#include "coalflow/stats.hpp"
#include "pipeline.hpp"

namespace coalflow {

MeasurePath simulate_sdsm(const AtomicMeasure& mu, const InteractionKernel& kernel,
                          const BranchingRate& sigma, double cutoff, double horizon, double dt,
                          const RngStream& stream, ScsmOptions options) {
  if (!(sigma.lower_bound() > 0.0)) {
    throw ModelViolation("branching rate must be bounded below by a positive constant");
  }
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(cutoff > 0.0) || !(cutoff < horizon)) {
    throw ParameterError("simulate_sdsm: need 0 < cutoff < horizon");
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
  setup.speed = kernel.rho0();
  const RngStream carrier_root = stream.split(0);
  auto make = [&kernel, &carrier_root](std::span<const double> starts) {
    std::vector<RngStream> streams;
    streams.reserve(starts.size());
    for (std::size_t c = 0; c < starts.size(); ++c) streams.push_back(carrier_root.split(c));
    return InteractingSystem(starts, kernel, std::move(streams));
  };
  return detail::run_pipeline(setup, make, sigma, stream.split(1));
}

AtomicMeasure rescale_measure(const AtomicMeasure& mu, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ParameterError("theta must be positive");
  AtomicMeasure out;
  const double mass_factor = 1.0 / (theta * theta);
  for (const auto& a : mu.atoms()) out.add(a.position / theta, a.mass * mass_factor);
  return out;
}

RescalingSpec::RescalingSpec(double t) : theta(t) {
  if (!(theta >= 1.0) || !std::isfinite(theta)) throw ParameterError("theta must be >= 1");
}

double rescaled_step(double dt, double theta) { return std::min(dt, 0.1 / (theta * theta)); }

AtomicMeasure simulate_rescaled_sdsm(const AtomicMeasure& mu_target,
                                     const InteractionKernel& kernel, const BranchingRate& sigma,
                                     double theta, double t, double cutoff, double dt,
                                     const RngStream& stream, RescaleRoute route) {
  const RescalingSpec spec(theta);
  ScsmOptions options;
  options.record_every = std::numeric_limits<std::size_t>::max();
  if (route == RescaleRoute::direct) {
    const MeasurePath path = simulate_sdsm(mu_target, spec.interaction(kernel),
                                           spec.branching(sigma), cutoff, t, dt, stream, options);
    return path.state(path.points() - 1);
  }
  AtomicMeasure unscaled;
  for (const auto& a : mu_target.atoms()) {
    unscaled.add(a.position * theta, a.mass * theta * theta);
  }
  const MeasurePath path = simulate_sdsm(unscaled, kernel, sigma, spec.time(cutoff), spec.time(t),
                                         spec.time(dt), stream, options);
  return rescale_measure(path.state(path.points() - 1), theta);
}

double pair_distance_sample(double left, double right, const InteractionKernel& kernel,
                            double horizon, double dt, RngStream stream) {
  const std::vector<double> starts{left, right};
  InteractingSystem system(starts, kernel, std::move(stream));
  const TimeGrid grid = TimeGrid::uniform(horizon, dt);
  const double h = grid.dt();
  for (std::size_t k = 0; k < grid.steps; ++k) system.advance(h);
  return std::abs(system.position(0) - system.position(1));
}

double absorbed_distance_cdf(double y, double d0, double speed, double horizon) {
  if (!(d0 > 0.0) || !(speed > 0.0) || !(horizon > 0.0)) {
    throw ParameterError("absorbed_distance_cdf: bad parameters");
  }
  if (y < 0.0) return 0.0;
  const double s = std::sqrt(2.0 * speed * horizon);
  const double atom = 2.0 * (1.0 - normal_cdf(d0 / s));
  const double alive = (normal_cdf((y - d0) / s) - normal_cdf(-d0 / s)) -
                       (normal_cdf((y + d0) / s) - normal_cdf(d0 / s));
  return std::clamp(atom + alive, 0.0, 1.0);
}

double pair_distance_ks(std::vector<double> distances, double d0, double speed, double horizon,
                        double resolution) {
  for (auto& d : distances) {
    if (d < resolution) d = 0.0;
  }
  auto cdf = [=](double y) { return absorbed_distance_cdf(y, d0, speed, horizon); };
  auto left = [=](double y) { return y <= 0.0 ? 0.0 : absorbed_distance_cdf(y, d0, speed, horizon); };
  return ks_one_sample(distances, cdf, left).statistic;
}

std::vector<ConvergenceRow> convergence_experiment(const std::vector<double>& thetas,
                                                   const std::vector<SmoothFunction>& phis,
                                                   double t, const ConvergenceConfig& config) {
  if (thetas.empty()) throw ParameterError("convergence_experiment: no theta values");
  if (!config.kernel.vanishes_at_infinity()) {
    throw ParameterError("convergence_experiment: rho must vanish at infinity");
  }
  const auto limit = config.sigma.limit();
  if (!limit) throw ParameterError("convergence_experiment: sigma needs a limit at infinity");
  const BranchingRate limit_sigma = BranchingRate::constant(*limit);
  const std::size_t n = config.replicates;
  const double speed = config.kernel.rho0();

  ScsmOptions options;
  options.record_every = std::numeric_limits<std::size_t>::max();
  const RngStream limit_root(config.seed, 0);
  const auto limit_states = run_replicates<AtomicMeasure>(n, [&](std::size_t k) {
    const MeasurePath p = simulate_scsm_general(config.mu, limit_sigma, speed, config.cutoff, t,
                                                config.dt, limit_root.split(k), options);
    return p.state(p.points() - 1);
  });

  std::vector<ConvergenceRow> rows;
  for (std::size_t q = 0; q < thetas.size(); ++q) {
    const double theta = thetas[q];
    const RngStream root(config.seed, 1 + q);
    const double step = rescaled_step(config.dt, theta);
    const auto states = run_replicates<AtomicMeasure>(n, [&](std::size_t k) {
      return simulate_rescaled_sdsm(config.mu, config.kernel, config.sigma, theta, t,
                                    config.cutoff, step, root.split(k));
    });
    for (const auto& phi : phis) {
      std::vector<double> a(n);
      std::vector<double> b(n);
      for (std::size_t k = 0; k < n; ++k) {
        a[k] = states[k].integrate(phi.value);
        b[k] = limit_states[k].integrate(phi.value);
      }
      rows.push_back({theta, phi.id, ks_two_sample(a, b).statistic, n, config.seed});
    }
    if (config.pair_distances) {
      const RngStream pair_root(config.seed, 1000 + q);
      const InteractionKernel scaled = config.kernel.scaled(theta);
      const auto d = run_replicates<double>(n, [&](std::size_t k) {
        return pair_distance_sample(config.pair_left, config.pair_right, scaled,
                                    config.pair_horizon, step, pair_root.split(k));
      });
      rows.push_back({theta, "pair_distance",
                      pair_distance_ks(d, std::abs(config.pair_right - config.pair_left), speed,
                                       config.pair_horizon),
                      n, config.seed});
    }
  }
  return rows;
}

}  // namespace coalflow

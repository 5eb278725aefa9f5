#include "coalflow/branching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coalflow/errors.hpp"

namespace coalflow {

double feller_sample_exact(double x, double t, RngStream& stream) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw ParameterError("feller: mass must be >= 0");
  if (!(t > 0.0)) throw ParameterError("feller: time must be positive");
  if (x == 0.0) return 0.0;
  const auto n = stream.poisson(2.0 * x / t);
  if (n == 0) return 0.0;
  return stream.gamma(static_cast<double>(n), 0.5 * t);
}

double feller_death_time(double x, double duration, RngStream& stream) {
  if (!(x > 0.0) || !(duration > 0.0)) throw ParameterError("feller_death_time: bad arguments");
  return 2.0 * x / (2.0 * x / duration - std::log(stream.uniform()));
}

std::vector<double> feller_path_euler(double x, double horizon, double dt, RngStream& stream) {
  if (!(x >= 0.0)) throw ParameterError("feller: mass must be >= 0");
  const TimeGrid grid = TimeGrid::uniform(horizon, dt);
  const double h = grid.dt();
  std::vector<double> path(grid.points(), 0.0);
  path[0] = x;
  double xi = x;
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (xi > 0.0) xi = std::max(0.0, xi + std::sqrt(xi * h) * stream.standard_normal());
    path[k] = xi;
  }
  return path;
}

double excursion_survival_mass(double r) {
  if (!(r > 0.0)) throw ParameterError("cutoff must be positive");
  return 2.0 / r;
}

ConditionedExcursion excursion_conditioned(double r, double horizon, double dt,
                                           RngStream& stream) {
  if (!(r > 0.0) || !(horizon > r)) throw ParameterError("excursion: need 0 < r < horizon");
  const TimeGrid grid = TimeGrid::uniform(horizon - r, dt);
  const double h = grid.dt();
  ConditionedExcursion e;
  e.times.resize(grid.points());
  e.mass.resize(grid.points());
  double w = stream.exponential(0.5 * r);
  e.times[0] = r;
  e.mass[0] = w;
  for (std::size_t k = 1; k < grid.points(); ++k) {
    e.times[k] = r + grid.time(k);
    if (w > 0.0) {
      const double next = feller_sample_exact(w, h, stream);
      if (next == 0.0) e.death_time = e.times[k - 1] + feller_death_time(w, h, stream);
      w = next;
    }
    e.mass[k] = w;
  }
  return e;
}

ExcursionEnsemble sample_excursion_ensemble(const AtomicMeasure& mu, double r,
                                            RngStream& stream) {
  if (!(r > 0.0)) throw ParameterError("ensemble: cutoff must be positive");
  ExcursionEnsemble ensemble;
  ensemble.cutoff = r;
  const double total = mu.total_mass();
  if (!(total > 0.0)) return ensemble;
  const auto count = stream.poisson(total * excursion_survival_mass(r));
  ensemble.atoms.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    ExcursionSeed s;
    s.location = mu.sample_position(stream);
    s.mass = stream.exponential(0.5 * r);
    ensemble.atoms.push_back(s);
  }
  std::stable_sort(ensemble.atoms.begin(), ensemble.atoms.end(),
                   [](const ExcursionSeed& a, const ExcursionSeed& b) { return a.mass > b.mass; });
  return ensemble;
}

nlohmann::json to_json(const ExcursionEnsemble& ensemble) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : ensemble.atoms) {
    nlohmann::json j{{"location", a.location}, {"initial_mass", a.mass}};
    if (std::isfinite(a.death_time)) {
      j["death_time"] = a.death_time;
    } else {
      j["death_time"] = nullptr;
    }
    atoms.push_back(std::move(j));
  }
  return {{"cutoff", ensemble.cutoff}, {"count", ensemble.atoms.size()}, {"atoms", atoms}};
}

double checked_rate(const BranchingRate& sigma, double x) {
  const double s = sigma(x);
  if (!(s > 0.0) || s < sigma.lower_bound() * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "branching rate " << sigma.description() << " is " << s << " at x = " << x
       << ", below its lower bound " << sigma.lower_bound();
    throw ModelViolation(os.str());
  }
  return s;
}

std::vector<double> clock(std::span<const double> path, double dt, const BranchingRate& sigma) {
  if (!(dt > 0.0)) throw ParameterError("clock: dt must be positive");
  std::vector<double> psi(path.size(), 0.0);
  if (path.empty()) return psi;
  double prev = checked_rate(sigma, path[0]);
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double next = checked_rate(sigma, path[k]);
    psi[k] = psi[k - 1] + 0.5 * dt * (prev + next);
    prev = next;
  }
  return psi;
}

double time_change(std::span<const double> path, double dt, const BranchingRate& sigma,
                   double t) {
  if (path.empty()) throw ParameterError("time_change: empty path");
  if (!(t >= 0.0)) throw ParameterError("time_change: t must be >= 0");
  const double span_end = dt * static_cast<double>(path.size() - 1);
  if (t > span_end * (1.0 + 1e-12)) throw ParameterError("time_change: t beyond the path");
  const double ratio = t / dt;
  auto whole = static_cast<std::size_t>(std::floor(ratio + 1e-9));
  whole = std::min(whole, path.size() - 1);
  const auto psi = clock(path.subspan(0, whole + 1), dt, sigma);
  double total = psi.back();
  const double rest = t - dt * static_cast<double>(whole);
  if (rest > 1e-12 * dt && whole + 1 < path.size()) {
    const double y = path[whole] + (path[whole + 1] - path[whole]) * rest / dt;
    total += 0.5 * rest * (checked_rate(sigma, path[whole]) + checked_rate(sigma, y));
  }
  return total;
}

}  // namespace coalflow

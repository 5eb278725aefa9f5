#include "coalflow/dual.hpp"

#include <algorithm>
#include <cmath>

#include "coalflow/errors.hpp"
#include "coalflow/flows.hpp"
#include "coalflow/parallel.hpp"
#include "coalflow/scsm.hpp"
#include "coalflow/stats.hpp"

namespace coalflow {

DualRun sample_coalescent(std::size_t m0, double horizon, RngStream& stream) {
  if (m0 == 0) throw ParameterError("sample_coalescent: need at least one particle");
  if (!(horizon >= 0.0)) throw ParameterError("sample_coalescent: horizon must be >= 0");
  DualRun run;
  run.initial_count = m0;
  run.horizon = horizon;
  run.counts.push_back(m0);
  double now = 0.0;
  double exponent = 0.0;
  std::size_t l = m0;
  while (l >= 2) {
    const double rate = 0.5 * static_cast<double>(l * (l - 1));
    const double wait = stream.exponential(1.0 / rate);
    if (now + wait > horizon) break;
    exponent += rate * wait;
    now += wait;
    const std::size_t i = stream.index(l);
    std::size_t j = stream.index(l - 1);
    if (j >= i) ++j;
    run.jump_times.push_back(now);
    run.merges.emplace_back(std::min(i, j), std::max(i, j));
    --l;
    run.counts.push_back(l);
  }
  exponent += 0.5 * static_cast<double>(l * (l - 1)) * (horizon - now);
  run.fk_weight = std::exp(exponent);
  return run;
}

MergeOperator::MergeOperator(std::size_t arity, std::size_t i, std::size_t j)
    : arity_(arity), i_(std::min(i, j)), j_(std::max(i, j)) {
  if (arity < 2 || i == j || j_ >= arity) throw ParameterError("MergeOperator: bad slots");
}

std::vector<double> MergeOperator::expand(std::span<const double> reduced) const {
  if (reduced.size() + 1 != arity_) throw ParameterError("MergeOperator: arity mismatch");
  std::vector<double> out(arity_);
  const double merged = reduced.back();
  std::size_t next = 0;
  for (std::size_t s = 0; s < arity_; ++s) {
    out[s] = (s == i_ || s == j_) ? merged : reduced[next++];
  }
  return out;
}

MomentFunction MomentFunction::one(std::size_t arity) {
  return {"one", arity, [](std::span<const double>) { return 1.0; }, true};
}

MomentFunction MomentFunction::gauss(std::size_t arity) {
  return {"gauss", arity,
          [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return std::exp(-s);
          },
          false};
}

MomentFunction MomentFunction::product(const SmoothFunction& phi, std::size_t arity) {
  auto f = phi.value;
  return {phi.id, arity,
          [f](std::span<const double> x) {
            double p = 1.0;
            for (double v : x) p *= f(v);
            return p;
          },
          phi.id == "one"};
}

MomentFunction MomentFunction::parse(std::string_view id, std::size_t arity) {
  if (id == "one") return one(arity);
  if (id == "gauss") return gauss(arity);
  return product(SmoothFunction::parse(id), arity);
}

namespace {

// Calls visit(weight, tuple) for every tuple of `size` atoms.
template <class Visit>
void for_each_tuple(const std::vector<Atom>& atoms, std::size_t size, Visit&& visit) {
  std::vector<std::size_t> idx(size, 0);
  std::vector<double> point(size);
  const std::size_t n = atoms.size();
  if (n == 0) return;
  for (;;) {
    double w = 1.0;
    for (std::size_t s = 0; s < size; ++s) {
      w *= atoms[idx[s]].mass;
      point[s] = atoms[idx[s]].position;
    }
    visit(w, point);
    std::size_t s = size;
    while (s > 0) {
      --s;
      if (++idx[s] < n) break;
      idx[s] = 0;
      if (s == 0) return;
    }
    if (size == 0) return;
  }
}

}  // namespace

double tensor_integral(const AtomicMeasure& nu, const MomentFunction& f) {
  double total = 0.0;
  for_each_tuple(nu.atoms(), f.arity, [&](double w, const std::vector<double>& x) {
    if (w != 0.0) total += w * f(x);
  });
  return total;
}

namespace {

double backward_composition(const DualRun& run, std::vector<double> z, const BranchingRate& sigma,
                            double speed, const MomentFunction& f, double dt, bool move,
                            RngStream& stream) {
  double weight = 1.0;
  double upper = run.horizon;
  for (std::size_t l = run.jump_times.size(); l > 0; --l) {
    const double lower = run.jump_times[l - 1];
    if (move) evolve_coalescing(z, speed, upper - lower, dt, stream);
    const auto [i, j] = run.merges[l - 1];
    const MergeOperator op(run.counts[l - 1], i, j);
    weight *= op.multiplier(sigma, z);
    z = op.expand(z);
    upper = lower;
  }
  if (move) evolve_coalescing(z, speed, upper, dt, stream);
  return weight * f(z);
}

}  // namespace

double dual_replicate(const DualRun& run, const AtomicMeasure& mu, const BranchingRate& sigma,
                      double speed, const MomentFunction& f, double dt, RngStream& stream) {
  if (f.arity != run.initial_count) throw ParameterError("dual: test function arity mismatch");
  const std::size_t size = run.final_count();
  const bool move = !(f.constant && sigma.is_constant());
  const auto& atoms = mu.atoms();
  double value = 0.0;
  if (std::pow(static_cast<double>(atoms.size()), static_cast<double>(size)) <=
      kTupleEnumerationLimit) {
    for_each_tuple(atoms, size, [&](double w, const std::vector<double>& x) {
      if (w != 0.0) value += w * backward_composition(run, x, sigma, speed, f, dt, move, stream);
    });
  } else {
    std::vector<double> x(size);
    for (auto& v : x) v = mu.sample_position(stream);
    value = std::pow(mu.total_mass(), static_cast<double>(size)) *
            backward_composition(run, x, sigma, speed, f, dt, move, stream);
  }
  return value * run.fk_weight;
}

namespace {

void validate_moment(const AtomicMeasure& mu, const MomentFunction& f, std::size_t m, double t,
                     std::size_t replicates, double dt) {
  if (m == 0) throw ParameterError("moment order m must be positive");
  if (f.arity != m) throw ParameterError("test function arity must equal m");
  if (!(t > 0.0)) throw ParameterError("t must be positive");
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (replicates < 2) throw ParameterError("need at least two replicates");
  if (mu.empty()) throw ParameterError("initial measure has no atoms");
}

Estimate summarize_values(const std::vector<double>& values) {
  RunningStats s;
  for (double v : values) s.add(v);
  return {s.mean(), s.se(), s.count()};
}

}  // namespace

Estimate dual_moment_estimate(const AtomicMeasure& mu, const BranchingRate& sigma, double speed,
                              const MomentFunction& f, std::size_t m, double t,
                              std::size_t replicates, double dt, const RngStream& stream) {
  validate_moment(mu, f, m, t, replicates, dt);
  if (!(speed > 0.0)) throw ParameterError("speed must be positive");
  const auto values = run_replicates<double>(replicates, [&](std::size_t k) {
    RngStream s = stream.split(k);
    const DualRun run = sample_coalescent(m, t, s);
    return dual_replicate(run, mu, sigma, speed, f, dt, s);
  });
  return summarize_values(values);
}

Estimate forward_moment_estimate(const AtomicMeasure& mu, const BranchingRate& sigma,
                                 double speed, const MomentFunction& f, std::size_t m, double t,
                                 std::size_t replicates, double dt, const RngStream& stream,
                                 std::optional<double> cutoff) {
  validate_moment(mu, f, m, t, replicates, dt);
  ScsmOptions options;
  options.record_every = std::numeric_limits<std::size_t>::max();
  const auto values = run_replicates<double>(replicates, [&](std::size_t k) {
    const RngStream s = stream.split(k);
    const MeasurePath path =
        cutoff ? simulate_scsm_general(mu, sigma, speed, *cutoff, t, dt, s, options)
               : simulate_scsm_atomic(mu, sigma, speed, t, dt, s, options);
    const std::size_t last = path.points() - 1;
    // Coalesced atoms share a position, so their masses can be pooled.
    AtomicMeasure pooled;
    std::vector<double> group_mass(path.atoms, 0.0);
    for (std::size_t i = 0; i < path.atoms; ++i) {
      group_mass[path.group[path.index(last, i)]] += path.mass[path.index(last, i)];
    }
    for (std::size_t i = 0; i < path.atoms; ++i) {
      if (group_mass[i] > 0.0) pooled.add(path.position[path.index(last, i)], group_mass[i]);
    }
    return tensor_integral(pooled, f);
  });
  return summarize_values(values);
}

nlohmann::json to_json(const Estimate& e) {
  return {{"value", e.value}, {"se", e.se}, {"n", e.n}};
}

}  // namespace coalflow

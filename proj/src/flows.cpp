#include "coalflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "coalflow/errors.hpp"

namespace coalflow {

namespace {

void validate_run(std::span<const double> initial, double speed, double horizon, double dt) {
  if (initial.empty()) throw ParameterError("need at least one starting point");
  for (double x : initial) {
    if (!std::isfinite(x)) throw ParameterError("starting points must be finite");
  }
  if (!(speed > 0.0) || !std::isfinite(speed)) throw ParameterError("speed must be positive");
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(horizon >= dt)) throw ParameterError("horizon must be at least dt");
}

std::vector<RngStream> label_streams_of(const RngStream& stream, std::size_t m) {
  std::vector<RngStream> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(stream.split(i));
  return out;
}

// Probability that a Brownian bridge of variance 2 * speed per unit time
// from d0 > 0 to d1 > 0 over dt touches zero.
double bridge_hit_probability(double d0, double d1, double speed, double dt) {
  return std::exp(-d0 * d1 / (speed * dt));
}

}  // namespace

double LabeledPathBundle::coalescence_time(std::size_t i, std::size_t j) const {
  if (i >= labels || j >= labels) throw ParameterError("coalescence_time: label out of range");
  const std::size_t points = grid.points();
  for (std::size_t k = 0; k < points; ++k) {
    if (group(i, k) == group(j, k)) {
      return k == 0 ? 0.0 : 0.5 * (grid.time(k - 1) + grid.time(k));
    }
  }
  return std::numeric_limits<double>::infinity();
}

const Eigen::MatrixXd& PsdRoot::compute(const Eigen::MatrixXd& sigma) {
  if (!sigma.allFinite()) throw NumericalError("covariance matrix is not finite", sigma);
  const auto n = sigma.rows();
  if (n == 1) {
    const double v = sigma(0, 0);
    min_eigenvalue_ = std::min(min_eigenvalue_, v);
    root_.resize(1, 1);
    root_(0, 0) = v < clip_ ? 0.0 : std::sqrt(v);
    return root_;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of the covariance matrix failed", sigma);
  }
  Eigen::VectorXd values = solver.eigenvalues();
  min_eigenvalue_ = std::min(min_eigenvalue_, values.minCoeff());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    values(k) = values(k) < clip_ ? 0.0 : std::sqrt(values(k));
  }
  const auto& v = solver.eigenvectors();
  root_ = v * values.asDiagonal() * v.transpose();
  return root_;
}

// ---------------------------------------------------------------------------

CoalescingSystem::CoalescingSystem(std::span<const double> initial, double speed,
                                   std::vector<RngStream> label_streams)
    : speed_(speed), label_streams_(std::move(label_streams)) {
  if (label_streams_.size() != initial.size()) {
    throw ParameterError("need one stream per label");
  }
  init(initial);
}

CoalescingSystem::CoalescingSystem(std::span<const double> initial, double speed,
                                   RngStream shared)
    : speed_(speed), shared_(std::move(shared)) {
  init(initial);
}

void CoalescingSystem::init(std::span<const double> initial) {
  if (initial.empty()) throw ParameterError("need at least one starting point");
  if (!(speed_ > 0.0) || !std::isfinite(speed_)) throw ParameterError("speed must be positive");
  const std::size_t m = initial.size();
  root_.resize(m);
  std::iota(root_.begin(), root_.end(), 0U);
  position_of_id_.assign(initial.begin(), initial.end());
  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0U);
  for (double x : initial) {
    if (!std::isfinite(x)) throw ParameterError("starting points must be finite");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return initial[a] < initial[b]; });
  for (std::size_t k = 0; k < m;) {
    std::size_t e = k;
    std::uint32_t id = order[k];
    while (e < m && initial[order[e]] == initial[order[k]]) {
      id = std::min(id, order[e]);
      ++e;
    }
    for (std::size_t q = k; q < e; ++q) {
      if (order[q] != id) {
        root_[order[q]] = id;
        merges_.push_back({0.0, id, order[q]});
      }
    }
    groups_.push_back({initial[order[k]], id, id});
    k = e;
  }
}

std::uint32_t CoalescingSystem::group_id(std::size_t label) const {
  auto x = static_cast<std::uint32_t>(label);
  while (root_[x] != x) {
    root_[x] = root_[root_[x]];
    x = root_[x];
  }
  return x;
}

RngStream& CoalescingSystem::stream_for(const Group& g) {
  return shared_ ? *shared_ : label_streams_[g.anchor];
}

void CoalescingSystem::advance(double dt) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  const std::size_t n = groups_.size();
  std::sort(groups_.begin(), groups_.end(), [](const Group& a, const Group& b) {
    return a.position < b.position || (a.position == b.position && a.id < b.id);
  });
  const double sd = std::sqrt(speed_ * dt);
  next_.resize(n);
  for (std::size_t g = 0; g < n; ++g) {
    next_[g] = groups_[g].position + sd * stream_for(groups_[g]).standard_normal();
  }
  join_.assign(n, 0);
  for (std::size_t g = 0; g + 1 < n; ++g) {
    const double d0 = groups_[g + 1].position - groups_[g].position;
    const double d1 = next_[g + 1] - next_[g];
    if (d1 <= 0.0 || d0 <= 0.0) {
      join_[g] = 1;
      continue;
    }
    const double exponent = d0 * d1 / (speed_ * dt);
    if (exponent < 50.0) {
      const double u = stream_for(groups_[g]).uniform();
      join_[g] = u < bridge_hit_probability(d0, d1, speed_, dt) ? 1 : 0;
    }
  }
  const double merge_time = time_ + 0.5 * dt;
  std::size_t out = 0;
  for (std::size_t g = 0; g < n;) {
    Group merged{next_[g], groups_[g].anchor, groups_[g].id};
    std::size_t h = g;
    while (h + 1 < n && join_[h]) {
      merges_.push_back({merge_time, groups_[h].id, groups_[h + 1].id});
      merged.id = std::min(merged.id, groups_[h + 1].id);
      ++h;
    }
    for (std::size_t q = g; q <= h; ++q) root_[groups_[q].id] = merged.id;
    position_of_id_[merged.id] = merged.position;
    groups_[out++] = merged;
    g = h + 1;
  }
  groups_.resize(out);
  time_ += dt;
}

// ---------------------------------------------------------------------------

InteractingSystem::InteractingSystem(std::span<const double> initial, InteractionKernel kernel,
                                     std::vector<RngStream> label_streams)
    : kernel_(std::move(kernel)),
      label_streams_(std::move(label_streams)),
      root_(kEigenvalueClip * kernel_.rho0()) {
  if (label_streams_.size() != initial.size()) {
    throw ParameterError("need one stream per label");
  }
  init(initial);
}

InteractingSystem::InteractingSystem(std::span<const double> initial, InteractionKernel kernel,
                                     RngStream shared)
    : kernel_(std::move(kernel)), shared_(std::move(shared)),
      root_(kEigenvalueClip * kernel_.rho0()) {
  init(initial);
}

void InteractingSystem::init(std::span<const double> initial) {
  if (initial.empty()) throw ParameterError("need at least one starting point");
  group_of_.resize(initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (!std::isfinite(initial[i])) throw ParameterError("starting points must be finite");
    std::size_t g = 0;
    while (g < positions_.size() && positions_[g] != initial[i]) ++g;
    if (g == positions_.size()) {
      positions_.push_back(initial[i]);
      ids_.push_back(static_cast<std::uint32_t>(i));
      anchors_.push_back(static_cast<std::uint32_t>(i));
    }
    group_of_[i] = g;
  }
}

double InteractingSystem::draw(std::size_t g) {
  return (shared_ ? *shared_ : label_streams_[anchors_[g]]).standard_normal();
}

void InteractingSystem::advance(double dt) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  const std::size_t n = positions_.size();
  const double sdt = std::sqrt(dt);
  const double diag = kernel_.rho(0.0);
  if (n == 1) {
    min_eigenvalue_ = std::min(min_eigenvalue_, diag);
    positions_[0] += sdt * std::sqrt(diag) * draw(0);
  } else if (n == 2) {
    // [[a, c], [c, a]] has eigenvectors (1, 1) and (1, -1).
    const double c = kernel_.rho(positions_[0] - positions_[1]);
    const double z0 = draw(0);
    const double z1 = draw(1);
    const double plus = diag + c;
    const double minus = diag - c;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      Eigen::MatrixXd s(2, 2);
      s << diag, c, c, diag;
      throw NumericalError("covariance matrix is not finite", s);
    }
    min_eigenvalue_ = std::min({min_eigenvalue_, plus, minus});
    const double clip = kEigenvalueClip * kernel_.rho0();
    const double rp = plus < clip ? 0.0 : std::sqrt(plus);
    const double rm = minus < clip ? 0.0 : std::sqrt(minus);
    const double s = (z0 + z1) * 0.5;
    const double d = (z0 - z1) * 0.5;
    positions_[0] += sdt * (rp * s + rm * d);
    positions_[1] += sdt * (rp * s - rm * d);
  } else {
    sigma_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    noise_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      sigma_(ii, ii) = diag;
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        sigma_(ii, jj) = sigma_(jj, ii) = kernel_.rho(positions_[i] - positions_[j]);
      }
      noise_(ii) = draw(i);
    }
    const Eigen::VectorXd step = root_.compute(sigma_) * noise_;
    for (std::size_t i = 0; i < n; ++i) positions_[i] += sdt * step(static_cast<Eigen::Index>(i));
  }
  time_ += dt;
}

// ---------------------------------------------------------------------------

LabeledPathBundle simulate_scbm(std::span<const double> initial, double speed, double horizon,
                                double dt, const RngStream& stream) {
  validate_run(initial, speed, horizon, dt);
  return simulate_scbm(initial, speed, horizon, dt, label_streams_of(stream, initial.size()));
}

LabeledPathBundle simulate_scbm(std::span<const double> initial, double speed, double horizon,
                                double dt, std::vector<RngStream> label_streams) {
  validate_run(initial, speed, horizon, dt);
  const TimeGrid grid = TimeGrid::uniform(horizon, dt);
  const std::size_t m = initial.size();
  const std::size_t points = grid.points();
  CoalescingSystem system(initial, speed, std::move(label_streams));
  LabeledPathBundle bundle;
  bundle.grid = grid;
  bundle.speed = speed;
  bundle.labels = m;
  bundle.positions.resize(m * points);
  bundle.groups.resize(m * points);
  auto record = [&](std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
      bundle.positions[i * points + k] = system.position(i);
      bundle.groups[i * points + k] = system.group_id(i);
    }
  };
  record(0);
  const double h = grid.dt();
  for (std::size_t k = 1; k < points; ++k) {
    system.advance(h);
    record(k);
  }
  bundle.merges = system.merges();
  return bundle;
}

void evolve_coalescing(std::span<double> x, double speed, double duration, double dt,
                       RngStream& stream) {
  const std::size_t n = x.size();
  if (n == 0 || duration <= 0.0) return;
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  const double ratio = duration / dt;
  const auto steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio)));
  const double h = duration / static_cast<double>(steps);
  const double sd = std::sqrt(speed * h);

  // owner[i] indexes `pos`, which is kept sorted.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> pos;
  std::vector<std::size_t> owner(n);
  for (std::size_t q = 0; q < n; ++q) {
    if (pos.empty() || x[order[q]] != pos.back()) pos.push_back(x[order[q]]);
    owner[order[q]] = pos.size() - 1;
  }
  std::vector<double> next(pos.size());
  std::vector<std::size_t> remap(pos.size());
  std::vector<std::size_t> order_now;
  std::vector<std::size_t> rank;
  order_now.reserve(pos.size());
  rank.reserve(pos.size());
  std::size_t done = 0;
  while (done < steps && pos.size() > 1) {
    const std::size_t g = pos.size();
    for (std::size_t k = 0; k < g; ++k) next[k] = pos[k] + sd * stream.standard_normal();
    std::size_t out = 0;
    for (std::size_t k = 0; k < g; ++k) {
      bool join = false;
      if (k > 0) {
        const double d0 = pos[k] - pos[k - 1];
        const double d1 = next[k] - next[k - 1];
        if (d1 <= 0.0 || d0 <= 0.0) {
          join = true;
        } else if (d0 * d1 / (speed * h) < 50.0) {
          join = stream.uniform() < bridge_hit_probability(d0, d1, speed, h);
        }
      }
      if (join) {
        remap[k] = out - 1;
      } else {
        remap[k] = out;
        next[out++] = next[k];
      }
    }
    order_now.resize(out);
    std::iota(order_now.begin(), order_now.end(), std::size_t{0});
    std::sort(order_now.begin(), order_now.end(),
              [&](auto a, auto b) { return next[a] < next[b]; });
    rank.resize(out);
    pos.resize(out);
    for (std::size_t q = 0; q < out; ++q) {
      rank[order_now[q]] = q;
      pos[q] = next[order_now[q]];
    }
    for (auto& o : owner) o = rank[remap[o]];
    ++done;
  }
  if (done < steps) {
    pos[0] += std::sqrt(speed * h * static_cast<double>(steps - done)) * stream.standard_normal();
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = pos[owner[i]];
}

LabeledPathBundle extend_flow(const LabeledPathBundle& existing, double start, RngStream stream) {
  if (!std::isfinite(start)) throw ParameterError("extend_flow: start must be finite");
  if (existing.labels == 0) throw ParameterError("extend_flow: empty bundle");
  const std::size_t m = existing.labels;
  const std::size_t points = existing.grid.points();
  LabeledPathBundle out = existing;
  out.labels = m + 1;
  out.positions.resize((m + 1) * points);
  out.groups.resize((m + 1) * points);
  double* pos = out.positions.data() + m * points;
  std::uint32_t* grp = out.groups.data() + m * points;

  for (std::size_t e = 0; e < m; ++e) {
    if (existing.position(e, 0) == start) {
      for (std::size_t k = 0; k < points; ++k) {
        pos[k] = existing.position(e, k);
        grp[k] = existing.group(e, k);
      }
      return out;
    }
  }

  const double speed = existing.speed;
  const double dt = existing.grid.dt();
  const double sd = std::sqrt(speed * dt);
  const auto own_id = static_cast<std::uint32_t>(m);
  pos[0] = start;
  grp[0] = own_id;
  std::optional<std::size_t> host;
  for (std::size_t k = 0; k + 1 < points; ++k) {
    if (host) {
      pos[k + 1] = existing.position(*host, k + 1);
      grp[k + 1] = existing.group(*host, k + 1);
      continue;
    }
    const double x = pos[k];
    std::optional<std::size_t> left;
    std::optional<std::size_t> right;
    for (std::size_t e = 0; e < m; ++e) {
      const double p = existing.position(e, k);
      if (p < x && (!left || p > existing.position(*left, k))) left = e;
      if (p > x && (!right || p < existing.position(*right, k))) right = e;
    }
    const double next = x + sd * stream.standard_normal();
    struct Hit {
      std::size_t label;
      bool flipped;
      double gap;
    };
    std::vector<Hit> hits;
    auto test = [&](std::size_t e, double d0, double d1) {
      if (d1 <= 0.0) {
        hits.push_back({e, true, d0});
      } else if (d0 * d1 / (speed * dt) < 50.0 &&
                 stream.uniform() < bridge_hit_probability(d0, d1, speed, dt)) {
        hits.push_back({e, false, d0});
      }
    };
    if (left) test(*left, x - existing.position(*left, k), next - existing.position(*left, k + 1));
    if (right) {
      test(*right, existing.position(*right, k) - x, existing.position(*right, k + 1) - next);
    }
    if (hits.empty()) {
      pos[k + 1] = next;
      grp[k + 1] = own_id;
      continue;
    }
    const auto best = std::min_element(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      if (a.flipped != b.flipped) return a.flipped;
      return a.gap < b.gap;
    });
    host = best->label;
    pos[k + 1] = existing.position(*host, k + 1);
    grp[k + 1] = existing.group(*host, k + 1);
    const double t_mid = 0.5 * (existing.grid.time(k) + existing.grid.time(k + 1));
    const std::uint32_t other = existing.group(*host, k);
    const bool host_left = existing.position(*host, k) < x;
    out.merges.push_back({t_mid, host_left ? other : own_id, host_left ? own_id : other});
  }
  return out;
}

LabeledPathBundle simulate_sibm(std::span<const double> initial, const InteractionKernel& kernel,
                                double horizon, double dt, const RngStream& stream) {
  validate_run(initial, kernel.rho0(), horizon, dt);
  const TimeGrid grid = TimeGrid::uniform(horizon, dt);
  const std::size_t m = initial.size();
  const std::size_t points = grid.points();
  InteractingSystem system(initial, kernel, label_streams_of(stream, m));
  LabeledPathBundle bundle;
  bundle.grid = grid;
  bundle.speed = kernel.rho0();
  bundle.labels = m;
  bundle.positions.resize(m * points);
  bundle.groups.resize(m * points);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t id = system.group_id(i);
    std::fill_n(bundle.groups.begin() + static_cast<std::ptrdiff_t>(i * points), points, id);
    if (id != i) bundle.merges.push_back({0.0, id, static_cast<std::uint32_t>(i)});
  }
  auto record = [&](std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) bundle.positions[i * points + k] = system.position(i);
  };
  record(0);
  const double h = grid.dt();
  for (std::size_t k = 1; k < points; ++k) {
    system.advance(h);
    record(k);
  }
  bundle.min_eigenvalue = system.min_eigenvalue();
  return bundle;
}

// ---------------------------------------------------------------------------

CovariationAccumulator::CovariationAccumulator(TimeGrid grid, std::size_t i, std::size_t j)
    : grid_(grid), i_(i), j_(j), mean_(grid.points(), 0.0), m2_(grid.points(), 0.0) {}

void CovariationAccumulator::add(const LabeledPathBundle& bundle) {
  if (bundle.grid.steps != grid_.steps || bundle.grid.horizon != grid_.horizon) {
    throw ParameterError("estimate_covariation: bundles have mismatched grids");
  }
  if (i_ >= bundle.labels || j_ >= bundle.labels) {
    throw ParameterError("estimate_covariation: label out of range");
  }
  ++n_;
  const auto a = bundle.path(i_);
  const auto b = bundle.path(j_);
  double running = 0.0;
  const auto n = static_cast<double>(n_);
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    if (k > 0) running += (a[k] - a[k - 1]) * (b[k] - b[k - 1]);
    const double delta = running - mean_[k];
    mean_[k] += delta / n;
    m2_[k] += delta * (running - mean_[k]);
  }
}

std::size_t CovariationAccumulator::count() const { return n_; }

CovariationCurve CovariationAccumulator::result(std::size_t min_replicates) const {
  if (n_ < std::max<std::size_t>(min_replicates, 2)) {
    throw ParameterError("estimate_covariation: too few replicates");
  }
  CovariationCurve c;
  c.replicates = n_;
  c.mean = mean_;
  c.se.resize(mean_.size());
  c.times.resize(mean_.size());
  const auto n = static_cast<double>(n_);
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    c.times[k] = grid_.time(k);
    c.se[k] = std::sqrt(m2_[k] / (n - 1.0) / n);
  }
  return c;
}

CovariationCurve estimate_covariation(std::span<const LabeledPathBundle> bundles, std::size_t i,
                                      std::size_t j) {
  if (bundles.empty()) throw ParameterError("estimate_covariation: no bundles");
  CovariationAccumulator acc(bundles.front().grid, i, j);
  for (const auto& b : bundles) acc.add(b);
  return acc.result();
}

}  // namespace coalflow

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "coalflow/branching.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/scsm.hpp"

namespace coalflow::detail {

struct TimePiece {
  double duration;
  double dt;
};

struct PipelineSetup {
  std::vector<double> location;
  /// Masses at internal time `start_clock`.
  std::vector<double> start_mass;
  double start_clock = 0.0;
  std::vector<TimePiece> pieces;
  std::size_t first_record_piece = 0;
  std::size_t record_every = 1;
  bool prune = true;
  double speed = 0.0;
};

// Carriers are started at the distinct atom locations; `make` builds the
// carrier system from those starting points.
template <class Make>
MeasurePath run_pipeline(const PipelineSetup& setup, Make make, const BranchingRate& sigma,
                         const RngStream& mass_root) {
  const std::size_t n = setup.location.size();
  if (setup.record_every == 0) throw ParameterError("record_every must be positive");
  std::vector<double> starts;
  std::vector<std::size_t> carrier_of(n);
  std::vector<std::uint32_t> first_atom;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    while (c < starts.size() && starts[c] != setup.location[i]) ++c;
    if (c == starts.size()) {
      starts.push_back(setup.location[i]);
      first_atom.push_back(static_cast<std::uint32_t>(i));
    }
    carrier_of[i] = c;
  }

  MeasurePath path;
  path.atoms = n;
  path.location = setup.location;
  path.speed = setup.speed;
  path.prune = setup.prune;
  path.death_time.assign(n, std::numeric_limits<double>::infinity());
  if (n == 0) {
    double t = 0.0;
    for (std::size_t p = 0; p < setup.pieces.size(); ++p) {
      const TimeGrid grid = TimeGrid::uniform(setup.pieces[p].duration, setup.pieces[p].dt);
      for (std::size_t k = 0; k <= grid.steps; ++k) {
        const bool on_stride = k % setup.record_every == 0 || k == grid.steps;
        if (p >= setup.first_record_piece && on_stride && (k > 0 || p == setup.first_record_piece)) {
          path.times.push_back(t + grid.time(k));
        }
      }
      t += setup.pieces[p].duration;
    }
    return path;
  }

  auto carriers = make(std::span<const double>(starts));
  const std::size_t nc = starts.size();
  std::vector<double> rate(nc);
  std::vector<double> clk(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) rate[c] = checked_rate(sigma, carriers.position(c));

  std::vector<double> cur = setup.start_mass;
  std::vector<double> last(n, setup.start_clock);
  std::vector<RngStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    streams.push_back(mass_root.split(i));
    if (!(cur[i] > 0.0)) path.death_time[i] = setup.start_clock;
  }

  auto record = [&](double t) {
    path.times.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = carrier_of[i];
      const double internal = clk[c];
      if (cur[i] > 0.0 && internal > last[i]) {
        const double span = internal - last[i];
        const double next = feller_sample_exact(cur[i], span, streams[i]);
        if (next == 0.0) path.death_time[i] = last[i] + feller_death_time(cur[i], span, streams[i]);
        cur[i] = next;
        last[i] = internal;
      }
      path.position.push_back(carriers.position(c));
      path.mass.push_back(cur[i]);
      path.clock.push_back(std::max(internal, setup.start_clock));
      path.group.push_back(first_atom[carriers.group_id(c)]);
    }
  };

  double t = 0.0;
  for (std::size_t p = 0; p < setup.pieces.size(); ++p) {
    const TimeGrid grid = TimeGrid::uniform(setup.pieces[p].duration, setup.pieces[p].dt);
    const double h = grid.dt();
    if (p == setup.first_record_piece) record(t);
    for (std::size_t k = 1; k <= grid.steps; ++k) {
      carriers.advance(h);
      for (std::size_t c = 0; c < nc; ++c) {
        const double next = checked_rate(sigma, carriers.position(c));
        clk[c] += 0.5 * h * (rate[c] + next);
        rate[c] = next;
      }
      if (p >= setup.first_record_piece && (k % setup.record_every == 0 || k == grid.steps)) {
        record(t + grid.time(k));
      }
    }
    t += setup.pieces[p].duration;
  }
  return path;
}

}  // namespace coalflow::detail

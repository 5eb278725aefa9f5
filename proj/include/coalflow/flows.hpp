#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "coalflow/kernel.hpp"
#include "coalflow/model.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

/// Two groups, identified by their canonical ids, merged at `time`.
struct MergeEvent {
  double time = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
};

/// m position trajectories on a uniform grid together with the coalescence
/// partition at every grid time. A group is identified by its smallest label.
struct LabeledPathBundle {
  TimeGrid grid;
  double speed = 0.0;
  std::size_t labels = 0;
  /// positions[i * grid.points() + k] is label i at grid time k.
  std::vector<double> positions;
  std::vector<std::uint32_t> groups;
  std::vector<MergeEvent> merges;
  /// Smallest raw eigenvalue of any covariance matrix factorised (SIBM only).
  double min_eigenvalue = std::numeric_limits<double>::infinity();

  double position(std::size_t label, std::size_t k) const {
    return positions[label * grid.points() + k];
  }
  std::uint32_t group(std::size_t label, std::size_t k) const {
    return groups[label * grid.points() + k];
  }
  std::span<const double> path(std::size_t label) const {
    return {positions.data() + label * grid.points(), grid.points()};
  }
  /// Recorded merge time of labels i and j: 0 if they start together,
  /// +infinity if they never meet on the grid.
  double coalescence_time(std::size_t i, std::size_t j) const;
};

/// Symmetric positive semidefinite square root. Eigenvalues below
/// `clip_below` are set to zero.
class PsdRoot {
 public:
  explicit PsdRoot(double clip_below) : clip_(clip_below) {}

  /// Factorises `sigma`; throws NumericalError carrying `sigma` on failure.
  const Eigen::MatrixXd& compute(const Eigen::MatrixXd& sigma);
  const Eigen::MatrixXd& root() const { return root_; }
  /// Smallest raw eigenvalue seen so far.
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double clip_;
  Eigen::MatrixXd root_;
  double min_eigenvalue_ = std::numeric_limits<double>::infinity();
};

/// Finite system of coalescing Brownian motions advanced step by step.
///
/// Every group moves with its own Gaussian increment of variance
/// speed * dt. After a step, order-adjacent groups merge when the bridge
/// between their endpoints crosses: always if their order flipped, otherwise
/// with probability exp(-d0 d1 / (speed dt)). A merged group continues from
/// the endpoint of its leftmost member.
///
/// With per-label streams the increment of a group is drawn from the stream
/// of its anchor label, which makes the output exchangeable in the labels.
class CoalescingSystem {
 public:
  CoalescingSystem(std::span<const double> initial, double speed,
                   std::vector<RngStream> label_streams);
  /// All draws from one stream, in position order.
  CoalescingSystem(std::span<const double> initial, double speed, RngStream shared);

  void advance(double dt);

  double time() const { return time_; }
  double speed() const { return speed_; }
  std::size_t labels() const { return root_.size(); }
  std::size_t group_count() const { return groups_.size(); }
  double position(std::size_t label) const { return position_of_id_[group_id(label)]; }
  /// Smallest label of the group containing `label`.
  std::uint32_t group_id(std::size_t label) const;
  const std::vector<MergeEvent>& merges() const { return merges_; }

 private:
  struct Group {
    double position;
    std::uint32_t anchor;
    std::uint32_t id;
  };

  void init(std::span<const double> initial);
  RngStream& stream_for(const Group& g);

  double speed_;
  double time_ = 0.0;
  std::vector<Group> groups_;
  mutable std::vector<std::uint32_t> root_;
  std::vector<double> position_of_id_;
  std::vector<RngStream> label_streams_;
  std::optional<RngStream> shared_;
  std::vector<MergeEvent> merges_;
  std::vector<double> next_;
  std::vector<char> join_;
};

/// Finite system of interacting Brownian motions with covariance
/// rho(x_i - x_j), advanced by Euler-Maruyama steps. Labels with identical
/// starting points form one group and move together; distinct groups never
/// merge.
class InteractingSystem {
 public:
  InteractingSystem(std::span<const double> initial, InteractionKernel kernel,
                    std::vector<RngStream> label_streams);
  InteractingSystem(std::span<const double> initial, InteractionKernel kernel, RngStream shared);

  void advance(double dt);

  double time() const { return time_; }
  std::size_t labels() const { return group_of_.size(); }
  std::size_t group_count() const { return positions_.size(); }
  double position(std::size_t label) const { return positions_[group_of_[label]]; }
  std::uint32_t group_id(std::size_t label) const { return ids_[group_of_[label]]; }
  double min_eigenvalue() const { return std::min(min_eigenvalue_, root_.min_eigenvalue()); }
  const InteractionKernel& kernel() const { return kernel_; }

 private:
  void init(std::span<const double> initial);
  double draw(std::size_t g);

  InteractionKernel kernel_;
  double time_ = 0.0;
  std::vector<double> positions_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::uint32_t> anchors_;
  std::vector<std::size_t> group_of_;
  std::vector<RngStream> label_streams_;
  std::optional<RngStream> shared_;
  PsdRoot root_;
  double min_eigenvalue_ = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd noise_;
};

/// Relative eigenvalue clipping threshold used by the SIBM scheme.
inline constexpr double kEigenvalueClip = 1e-9;

/// m-system of coalescing Brownian motions. Label i draws from stream.split(i).
LabeledPathBundle simulate_scbm(std::span<const double> initial, double speed, double horizon,
                                double dt, const RngStream& stream);
/// Same, with one explicit stream per label.
LabeledPathBundle simulate_scbm(std::span<const double> initial, double speed, double horizon,
                                double dt, std::vector<RngStream> label_streams);

/// Moves the points x forward by `duration` as a coalescing system (all draws
/// from one stream). Steps are of equal size at most dt; a lone group takes
/// one exact Gaussian step for the remaining time.
void evolve_coalescing(std::span<double> x, double speed, double duration, double dt,
                       RngStream& stream);

/// Adds a label starting at `start` to a coalescing bundle: a fresh Brownian
/// path that sticks to the first existing path it meets. A start equal to an
/// existing one reuses that path.
LabeledPathBundle extend_flow(const LabeledPathBundle& existing, double start, RngStream stream);

/// m-system of interacting Brownian motions. Label i draws from stream.split(i).
LabeledPathBundle simulate_sibm(std::span<const double> initial, const InteractionKernel& kernel,
                                double horizon, double dt, const RngStream& stream);

struct CovariationCurve {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> se;
  std::size_t replicates = 0;
};

/// Running average of the realized covariation of labels i and j.
class CovariationAccumulator {
 public:
  CovariationAccumulator(TimeGrid grid, std::size_t i, std::size_t j);
  void add(const LabeledPathBundle& bundle);
  std::size_t count() const;
  /// Requires at least `min_replicates` bundles.
  CovariationCurve result(std::size_t min_replicates = 100) const;

 private:
  TimeGrid grid_;
  std::size_t i_;
  std::size_t j_;
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::size_t n_ = 0;
  std::vector<double> scratch_;
};

CovariationCurve estimate_covariation(std::span<const LabeledPathBundle> bundles, std::size_t i,
                                      std::size_t j);

}  // namespace coalflow

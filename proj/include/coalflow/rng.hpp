#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

namespace coalflow {

/// A deterministic random stream identified by (seed, stream_id).
///
/// The generator is xoshiro256** whose state is derived from the pair by
/// SplitMix64 hashing, so stream k of a run is available without drawing
/// from streams 0..k-1. Child streams obtained with split() are derived the
/// same way from (seed, stream_id, key) and never depend on how many draws
/// the parent has made.
///
/// A stream is a value type. It must not be shared by two concurrent
/// consumers; give each replicate (and each label inside a replicate) its own.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream keyed by `key`.
  RngStream split(std::uint64_t key) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double standard_normal() { return normal_(*this); }

  /// N(mean, variance). A zero variance returns `mean` exactly.
  double gaussian(double mean, double variance);
  double exponential(double mean);
  std::uint64_t poisson(double rate);
  double gamma(double shape, double scale);
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_[4];
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Human-readable description of how replicate streams are derived; written
/// into the header of every output file.
std::string stream_policy_description();

/// SplitMix64 finaliser, exposed for key derivation.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace coalflow

#include "coalflow/rng.hpp"

#include <cmath>

#include "coalflow/errors.hpp"

namespace coalflow {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + kGolden));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t x = combine(seed, stream_id);
  for (auto& s : state_) {
    x += kGolden;
    s = splitmix64(x);
  }
  // xoshiro must not start from the all-zero state
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = kGolden;
}

RngStream RngStream::split(std::uint64_t key) const {
  return RngStream(seed_, combine(stream_id_ ^ 0xD1B54A32D192ED03ULL, key));
}

RngStream::result_type RngStream::operator()() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian(double mean, double variance) {
  if (!std::isfinite(variance) || variance < 0.0) {
    throw ParameterError("gaussian: variance must be finite and non-negative");
  }
  if (variance == 0.0) return mean;
  return mean + std::sqrt(variance) * standard_normal();
}

double RngStream::exponential(double mean) {
  if (!std::isfinite(mean) || mean <= 0.0) {
    throw ParameterError("exponential: mean must be positive");
  }
  return -mean * std::log(uniform());
}

std::uint64_t RngStream::poisson(double rate) {
  if (!std::isfinite(rate) || rate < 0.0) {
    throw ParameterError("poisson: rate must be finite and non-negative");
  }
  if (rate == 0.0) return 0;
  return std::poisson_distribution<std::uint64_t>(rate)(*this);
}

double RngStream::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw ParameterError("gamma: shape and scale must be positive");
  }
  return std::gamma_distribution<double>(shape, scale)(*this);
}

std::size_t RngStream::index(std::size_t n) {
  if (n == 0) throw ParameterError("index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(*this);
}

std::string stream_policy_description() {
  return "xoshiro256** per replicate; replicate k uses stream (seed, k); "
         "sub-streams derived by SplitMix64 key hashing";
}

}  // namespace coalflow

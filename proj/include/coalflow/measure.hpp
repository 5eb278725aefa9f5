#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "coalflow/rng.hpp"

namespace coalflow {

struct Atom {
  double position = 0.0;
  double mass = 0.0;
};

/// Finite sum of point masses.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<Atom> atoms);

  /// "(x1,m1),(x2,m2),..."
  static AtomicMeasure parse(std::string_view text);

  void add(double position, double mass);
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  double total_mass() const;
  /// <phi, mu>
  double integrate(const std::function<double(double)>& phi) const;
  /// A position drawn with probability proportional to mass.
  double sample_position(RngStream& stream) const;
  std::string to_string() const;

 private:
  std::vector<Atom> atoms_;
};

}  // namespace coalflow

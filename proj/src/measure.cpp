#include "coalflow/measure.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "coalflow/errors.hpp"

namespace coalflow {

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
  for (const auto& a : atoms) add(a.position, a.mass);
}

AtomicMeasure AtomicMeasure::parse(std::string_view text) {
  static const std::regex atom_re(R"(\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\))");
  const std::string s(text);
  AtomicMeasure mu;
  std::string rest;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), atom_re); it != std::sregex_iterator();
       ++it) {
    rest += s.substr(last, static_cast<std::size_t>(it->position()) - last);
    last = static_cast<std::size_t>(it->position() + it->length());
    try {
      std::size_t used_x = 0;
      std::size_t used_m = 0;
      const std::string xs = (*it)[1];
      const std::string ms = (*it)[2];
      const double x = std::stod(xs, &used_x);
      const double m = std::stod(ms, &used_m);
      if (used_x != xs.size() || used_m != ms.size()) throw std::invalid_argument(xs);
      mu.add(x, m);
    } catch (const ParameterError&) {
      throw;
    } catch (const std::exception&) {
      throw ParameterError("measure '" + s + "': cannot parse atom " + it->str());
    }
  }
  rest += s.substr(last);
  if (rest.find_first_not_of(", \t") != std::string::npos || mu.empty()) {
    throw ParameterError("measure '" + s + "': expected (x1,m1),(x2,m2),...");
  }
  return mu;
}

void AtomicMeasure::add(double position, double mass) {
  if (!std::isfinite(position)) throw ParameterError("atom position must be finite");
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw ParameterError("atom mass must be >= 0");
  atoms_.push_back({position, mass});
}

double AtomicMeasure::total_mass() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.mass;
  return s;
}

double AtomicMeasure::integrate(const std::function<double(double)>& phi) const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.mass * phi(a.position);
  return s;
}

double AtomicMeasure::sample_position(RngStream& stream) const {
  const double total = total_mass();
  if (!(total > 0.0)) throw ParameterError("cannot sample from a measure of zero mass");
  if (atoms_.size() == 1) return atoms_.front().position;
  double u = stream.uniform() * total;
  for (const auto& a : atoms_) {
    if (u < a.mass) return a.position;
    u -= a.mass;
  }
  auto last = std::find_if(atoms_.rbegin(), atoms_.rend(), [](const Atom& a) { return a.mass > 0; });
  return last->position;
}

std::string AtomicMeasure::to_string() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i) os << ",";
    os << "(" << atoms_[i].position << "," << atoms_[i].mass << ")";
  }
  return os.str();
}

}  // namespace coalflow

#include "coalflow/model.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "coalflow/errors.hpp"

namespace coalflow {

namespace {

std::vector<double> parse_numbers(std::string_view text, std::string_view what) {
  std::vector<double> out;
  std::string buffer(text);
  std::stringstream ss(buffer);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParameterError(std::string(what) + ": cannot parse number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

TimeGrid TimeGrid::uniform(double horizon, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("time grid: dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ParameterError("time grid: horizon must be positive");
  }
  const double ratio = horizon / dt;
  auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
  if (steps == 0) steps = 1;
  return TimeGrid{horizon, steps};
}

BranchingRate BranchingRate::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ModelViolation("branching rate must be bounded below by a positive constant");
  }
  BranchingRate r;
  r.rate_ = [value](double) { return value; };
  r.lower_bound_ = value;
  r.limit_ = value;
  r.constant_ = true;
  std::ostringstream os;
  os << "const:" << value;
  r.description_ = os.str();
  return r;
}

BranchingRate BranchingRate::bump(double base, double amplitude, double width) {
  if (!(width > 0.0)) throw ParameterError("bump branching rate: width must be positive");
  const double inf = amplitude < 0.0 ? base + amplitude : base;
  if (!(inf > 0.0) || !std::isfinite(base) || !std::isfinite(amplitude)) {
    throw ModelViolation("branching rate must be bounded below by a positive constant");
  }
  BranchingRate r;
  r.rate_ = [base, amplitude, width](double x) {
    const double u = x / width;
    return base + amplitude * std::exp(-u * u);
  };
  r.lower_bound_ = inf;
  r.limit_ = base;
  r.constant_ = amplitude == 0.0;
  std::ostringstream os;
  os << "bump:" << base << ":" << amplitude << ":" << width;
  r.description_ = os.str();
  return r;
}

BranchingRate BranchingRate::custom(std::function<double(double)> rate, double lower_bound,
                                    std::optional<double> limit, std::string description) {
  if (!(lower_bound > 0.0)) {
    throw ModelViolation("branching rate must be bounded below by a positive constant");
  }
  BranchingRate r;
  r.rate_ = std::move(rate);
  r.lower_bound_ = lower_bound;
  r.limit_ = limit;
  r.description_ = std::move(description);
  return r;
}

BranchingRate BranchingRate::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw ParameterError("sigma spec '" + std::string(spec) + "': expected kind:params");
  }
  const auto kind = spec.substr(0, colon);
  const auto values = parse_numbers(spec.substr(colon + 1), "sigma spec");
  if (kind == "const" && values.size() == 1) return constant(values[0]);
  if (kind == "bump" && !values.empty() && values.size() <= 3) {
    return bump(values[0], values.size() > 1 ? values[1] : 1.0,
                values.size() > 2 ? values[2] : 1.0);
  }
  throw ParameterError("sigma spec '" + std::string(spec) +
                       "': expected const:<c> or bump:<base>[:<amp>[:<width>]]");
}

BranchingRate BranchingRate::scaled(double theta) const {
  if (!(theta > 0.0)) throw ParameterError("branching rate scaling: theta must be positive");
  BranchingRate r = *this;
  r.scale_ = scale_ * theta;
  return r;
}

std::string BranchingRate::description() const {
  if (scale_ == 1.0) return description_;
  std::ostringstream os;
  os << description_ << "@scale=" << scale_;
  return os.str();
}

SmoothFunction SmoothFunction::constant(double c) {
  std::ostringstream os;
  os << "const:" << c;
  return {c == 1.0 ? "one" : os.str(), [c](double) { return c; }, [](double) { return 0.0; },
          [](double) { return 0.0; }};
}

SmoothFunction SmoothFunction::sine() {
  return {"sin", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
          [](double x) { return -std::sin(x); }};
}

SmoothFunction SmoothFunction::gauss() {
  return {"gauss", [](double x) { return std::exp(-x * x); },
          [](double x) { return -2.0 * x * std::exp(-x * x); },
          [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); }};
}

SmoothFunction SmoothFunction::smooth_square(double level) {
  if (!(level > 0.0)) throw ParameterError("smooth_square: level must be positive");
  const double l2 = level * level;
  std::ostringstream os;
  os << "sq:" << level;
  return {os.str(), [l2](double x) { return l2 * std::tanh(x * x / l2); },
          [l2](double x) {
            const double c = 1.0 / std::cosh(x * x / l2);
            return 2.0 * x * c * c;
          },
          [l2](double x) {
            const double u = x * x / l2;
            const double c = 1.0 / std::cosh(u);
            return 2.0 * c * c * (1.0 - 4.0 * x * x * std::tanh(u) / l2);
          }};
}

SmoothFunction SmoothFunction::parse(std::string_view id) {
  if (id == "one" || id == "1") return constant(1.0);
  if (id == "sin") return sine();
  if (id == "gauss") return gauss();
  if (id.substr(0, 3) == "sq:") {
    const auto v = parse_numbers(id.substr(3), "test function");
    if (v.size() == 1) return smooth_square(v[0]);
  }
  throw ParameterError("unknown test function '" + std::string(id) +
                       "' (expected one, sin, gauss or sq:<L>)");
}

}  // namespace coalflow

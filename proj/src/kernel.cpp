#include "coalflow/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "coalflow/errors.hpp"

namespace coalflow {

struct InteractionKernel::Table {
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
  double range;
  bool flag_outside;
};

namespace {

double triangle(double x, double a) { return std::max(0.0, 1.0 - std::abs(x) / a); }

// Exact: the integrand is piecewise quadratic between the breakpoints, where
// Simpson's rule has no error.
double triangular_autocorrelation(double x, double a) {
  x = std::abs(x);
  const double lo = std::max(-a, x - a);
  const double hi = std::min(a, x + a);
  if (hi <= lo) return 0.0;
  std::vector<double> cuts{lo, hi};
  for (double c : {-a, 0.0, a, x - a, x, x + a}) {
    if (c > lo && c < hi) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double l = cuts[k];
    const double r = cuts[k + 1];
    if (r <= l) continue;
    auto f = [&](double y) { return triangle(y - x, a) * triangle(y, a); };
    total += (r - l) / 6.0 * (f(l) + 4.0 * f(0.5 * (l + r)) + f(r));
  }
  return total;
}

}  // namespace

InteractionKernel InteractionKernel::gaussian(double width) {
  if (!(width > 0.0)) throw ParameterError("gaussian kernel: width must be positive");
  InteractionKernel k;
  k.kind_ = Kind::gaussian;
  k.width_ = width;
  k.rho0_ = std::sqrt(std::numbers::pi) * width;
  return k;
}

InteractionKernel InteractionKernel::triangular(double half_width) {
  if (!(half_width > 0.0)) throw ParameterError("triangular kernel: half width must be positive");
  InteractionKernel k;
  k.kind_ = Kind::triangular;
  k.width_ = half_width;
  const double range = 2.0 * half_width;
  const double pitch = 1e-3 * range;
  std::vector<double> values;
  values.reserve(1001);
  for (int i = 0; i <= 1000; ++i) {
    values.push_back(triangular_autocorrelation(i * pitch, half_width));
  }
  k.rho0_ = values.front();
  k.table_ = std::make_shared<Table>(Table{
      boost::math::interpolators::cardinal_cubic_b_spline<double>(values.data(), values.size(),
                                                                  0.0, pitch, 0.0, 0.0),
      range, false});
  return k;
}

InteractionKernel InteractionKernel::tabulated(double x0, double dx, std::vector<double> h) {
  if (!(dx > 0.0)) throw ParameterError("tabulated kernel: dx must be positive");
  if (h.size() < 4) throw ParameterError("tabulated kernel: need at least 4 samples");
  (void)x0;  // rho depends on h only through its autocorrelation
  const std::size_t n = h.size();
  std::vector<double> values(n, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0.0;
    for (std::size_t j = 0; j + lag < n; ++j) s += h[j] * h[j + lag];
    values[lag] = s * dx;
  }
  if (!(values[0] > 0.0)) throw ParameterError("tabulated kernel: h is identically zero");
  InteractionKernel k;
  k.kind_ = Kind::tabulated;
  k.rho0_ = values[0];
  k.table_ = std::make_shared<Table>(Table{
      boost::math::interpolators::cardinal_cubic_b_spline<double>(values.data(), values.size(),
                                                                  0.0, dx, 0.0),
      static_cast<double>(n - 1) * dx, true});
  k.out_of_support_ = std::make_shared<std::atomic<std::uint64_t>>(0);
  return k;
}

InteractionKernel InteractionKernel::constant(double rho0) {
  if (!(rho0 > 0.0)) throw ParameterError("constant kernel: rho(0) must be positive");
  InteractionKernel k;
  k.kind_ = Kind::constant;
  k.rho0_ = rho0;
  return k;
}

InteractionKernel InteractionKernel::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  const auto kind = spec.substr(0, colon);
  double value = 1.0;
  if (colon != std::string_view::npos) {
    try {
      value = std::stod(std::string(spec.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ParameterError("kernel spec '" + std::string(spec) + "': bad parameter");
    }
  }
  if (kind == "gauss") return gaussian(value);
  if (kind == "tri") return triangular(value);
  if (kind == "const" && colon != std::string_view::npos) return constant(value);
  throw ParameterError("kernel spec '" + std::string(spec) +
                       "': expected gauss[:w], tri[:a] or const:<rho0>");
}

double InteractionKernel::base_rho(double x) const {
  switch (kind_) {
    case Kind::gaussian: {
      const double u = x / width_;
      return rho0_ * std::exp(-0.25 * u * u);
    }
    case Kind::constant:
      return rho0_;
    case Kind::triangular:
    case Kind::tabulated: {
      const double ax = std::abs(x);
      if (ax >= table_->range) {
        if (table_->flag_outside && ax > table_->range) {
          out_of_support_->fetch_add(1, std::memory_order_relaxed);
        }
        return 0.0;
      }
      return table_->spline(ax);
    }
  }
  return 0.0;
}

double InteractionKernel::rho(double x) const { return base_rho(scale_ * x); }

InteractionKernel InteractionKernel::scaled(double theta) const {
  if (!(theta > 0.0)) throw ParameterError("kernel scaling: theta must be positive");
  InteractionKernel k = *this;
  k.scale_ = scale_ * theta;
  return k;
}

std::uint64_t InteractionKernel::out_of_support_queries() const {
  return out_of_support_ ? out_of_support_->load() : 0;
}

std::string InteractionKernel::description() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::gaussian: os << "gauss:" << width_; break;
    case Kind::triangular: os << "tri:" << width_; break;
    case Kind::tabulated: os << "tabulated"; break;
    case Kind::constant: os << "const:" << rho0_; break;
  }
  if (scale_ != 1.0) os << "@scale=" << scale_;
  return os.str();
}

InteractionKernel scale_rho(const InteractionKernel& kernel, double theta) {
  if (!(theta >= 1.0)) throw ParameterError("scale_rho: theta must be at least 1");
  return kernel.scaled(theta);
}

}  // namespace coalflow

#include "coalflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "coalflow/errors.hpp"

namespace coalflow {

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const auto n = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.n_) / n;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / n;
  n_ += other.n_;
}

double RunningStats::se() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

RunningStats summarize(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return s;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // P(K <= lambda) = sqrt(2 pi) / lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double term = std::exp(-(2.0 * k - 1.0) * (2.0 * k - 1.0) * c);
      sum += term;
      if (term < 1e-300) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double stephens_p(double d, double effective_n) {
  const double sn = std::sqrt(effective_n);
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j >= y.size() || (i < x.size() && x[i] <= y[j])) {
      v = x[i];
    } else {
      v = y[j];
    }
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return {d, stephens_p(d, n * m / (n + m)), x.size(), y.size()};
}

KsResult ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf,
                       const std::function<double(double)>& cdf_left) {
  if (samples.empty()) throw ParameterError("ks_one_sample: empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < x.size()) {
    const double v = x[i];
    std::size_t k = i;
    while (k < x.size() && x[k] == v) ++k;
    const double below = static_cast<double>(i) / n;
    const double upto = static_cast<double>(k) / n;
    const double f_left = cdf_left ? cdf_left(v) : cdf(v);
    d = std::max({d, std::abs(upto - cdf(v)), std::abs(below - f_left)});
    i = k;
  }
  return {d, stephens_p(d, n), x.size(), 0};
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0 || !(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("ks_critical_value: bad arguments");
  }
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const auto dn = static_cast<double>(n);
  const auto dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

std::vector<double> realized_qv(std::span<const double> series) {
  std::vector<double> out(series.size(), 0.0);
  for (std::size_t k = 1; k < series.size(); ++k) {
    const double dx = series[k] - series[k - 1];
    out[k] = out[k - 1] + dx * dx;
  }
  return out;
}

std::vector<double> realized_covariation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("realized_covariation: length mismatch");
  std::vector<double> out(a.size(), 0.0);
  for (std::size_t k = 1; k < a.size(); ++k) {
    out[k] = out[k - 1] + (a[k] - a[k - 1]) * (b[k] - b[k - 1]);
  }
  return out;
}

ZTestResult martingale_ztest(const std::vector<std::vector<double>>& replicates, double flag_at) {
  ZTestResult result;
  if (replicates.empty()) return result;
  const std::size_t points = replicates.front().size();
  std::vector<RunningStats> stats(points);
  for (const auto& r : replicates) {
    if (r.size() != points) throw ParameterError("martingale_ztest: ragged replicates");
    for (std::size_t k = 0; k < points; ++k) stats[k].add(r[k]);
  }
  result.z.resize(points, 0.0);
  const double base = points > 0 ? stats[0].mean() : 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double diff = stats[k].mean() - base;
    const double se = stats[k].se();
    double z = 0.0;
    if (se > 0.0) {
      z = diff / se;
    } else if (diff != 0.0) {
      z = std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    result.z[k] = z;
    result.max_abs_z = std::max(result.max_abs_z, std::abs(z));
  }
  result.flagged = result.max_abs_z > flag_at;
  return result;
}

GofResult poisson_gof(std::span<const std::uint64_t> counts, double rate) {
  if (!std::isfinite(rate) || rate < 0.0) throw ParameterError("poisson_gof: rate must be >= 0");
  if (counts.empty()) throw ParameterError("poisson_gof: no counts");
  const auto n = static_cast<double>(counts.size());
  if (rate == 0.0) {
    const bool all_zero = std::all_of(counts.begin(), counts.end(), [](auto c) { return c == 0; });
    return {all_zero ? 0.0 : std::numeric_limits<double>::infinity(), all_zero ? 1.0 : 0.0, 1, 0};
  }
  const std::uint64_t max_count = *std::max_element(counts.begin(), counts.end());
  std::vector<double> observed(max_count + 1, 0.0);
  for (auto c : counts) observed[c] += 1.0;

  const boost::math::poisson_distribution<double> law(rate);
  // Bins [lo, hi); the last bin is open to the right.
  struct Bin {
    double observed = 0.0;
    double expected = 0.0;
  };
  std::vector<Bin> bins;
  Bin current;
  double cumulative = 0.0;
  std::uint64_t k = 0;
  const auto upper = static_cast<std::uint64_t>(std::max<double>(
      static_cast<double>(max_count), rate + 20.0 * std::sqrt(rate) + 20.0));
  for (; k <= upper; ++k) {
    const double p = boost::math::pdf(law, static_cast<double>(k));
    current.expected += n * p;
    cumulative += p;
    if (k < observed.size()) current.observed += observed[k];
    if (current.expected >= 5.0) {
      bins.push_back(current);
      current = Bin{};
    }
  }
  // remaining tail mass goes into the open last bin
  current.expected += n * std::max(0.0, 1.0 - cumulative);
  for (std::uint64_t c = k; c < observed.size(); ++c) current.observed += observed[c];
  if (bins.empty()) {
    bins.push_back(current);
  } else {
    bins.back().expected += current.expected;
    bins.back().observed += current.observed;
  }
  GofResult result;
  result.bins = bins.size();
  if (bins.size() < 2) return result;
  double chi2 = 0.0;
  for (const auto& b : bins) {
    const double diff = b.observed - b.expected;
    chi2 += diff * diff / b.expected;
  }
  result.statistic = chi2;
  result.dof = bins.size() - 1;
  result.p_value = boost::math::gamma_q(0.5 * static_cast<double>(result.dof), 0.5 * chi2);
  return result;
}

bool ComparisonReport::pass() const {
  if (!std::isfinite(value) && !(rule == Rule::at_least && value > 0)) return false;
  for (auto s : sizes) {
    if (s == 0) return false;
  }
  return rule == Rule::at_most ? value <= threshold : value >= threshold;
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["statistic"] = statistic;
  j["value"] = std::isfinite(value) ? nlohmann::json(value) : nlohmann::json(nullptr);
  j["threshold"] = threshold;
  j["rule"] = rule == Rule::at_most ? "at_most" : "at_least";
  j["sizes"] = sizes;
  if (z_score) {
    j["z"] = std::isfinite(*z_score) ? nlohmann::json(*z_score) : nlohmann::json(nullptr);
  }
  if (p_value) j["p"] = *p_value;
  if (!detail.empty()) j["detail"] = detail;
  j["pass"] = pass();
  return j;
}

ComparisonReport within_se(std::string name, double estimate, double target, double se,
                           std::size_t n, double k) {
  const double diff = estimate - target;
  double z = 0.0;
  if (se > 0.0) {
    z = diff / se;
  } else if (diff != 0.0) {
    z = std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  ComparisonReport r;
  r.name = std::move(name);
  r.statistic = "|z|";
  r.value = std::abs(z);
  r.threshold = k;
  r.rule = ComparisonReport::Rule::at_most;
  r.sizes = {n};
  r.z_score = z;
  nlohmann::json d{{"estimate", estimate}, {"target", target}, {"se", se}};
  r.detail = d.dump();
  return r;
}

ComparisonReport at_most(std::string name, std::string statistic, double value, double threshold,
                         std::vector<std::size_t> sizes) {
  ComparisonReport r;
  r.name = std::move(name);
  r.statistic = std::move(statistic);
  r.value = value;
  r.threshold = threshold;
  r.rule = ComparisonReport::Rule::at_most;
  r.sizes = std::move(sizes);
  return r;
}

ComparisonReport at_least(std::string name, std::string statistic, double value, double threshold,
                          std::vector<std::size_t> sizes) {
  ComparisonReport r = at_most(std::move(name), std::move(statistic), value, threshold,
                               std::move(sizes));
  r.rule = ComparisonReport::Rule::at_least;
  return r;
}

}  // namespace coalflow

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace coalflow {

/// Welford running mean and variance.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  void merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  /// Standard error of the mean.
  double se() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

RunningStats summarize(std::span<const double> xs);

double normal_cdf(double x);
/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t m = 0;
};

/// Two-sample Kolmogorov-Smirnov distance with the asymptotic p-value.
/// Ties (atoms) are handled exactly.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample distance sup_x |F_n(x) - F(x)|. `cdf_left` is the left limit
/// F(x-) and may be omitted when F is continuous.
KsResult ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf,
                       const std::function<double(double)>& cdf_left = {});

/// Critical value of the two-sample statistic at level alpha (asymptotic).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

/// Partial sums of squared increments; element k covers increments 1..k.
std::vector<double> realized_qv(std::span<const double> series);
/// Partial sums of products of increments.
std::vector<double> realized_covariation(std::span<const double> a, std::span<const double> b);

struct ZTestResult {
  std::vector<double> z;
  double max_abs_z = 0.0;
  bool flagged = false;
};

/// replicates[r][k] is replicate r at grid time k. Returns
/// (mean_k - mean_0) / SE_k per grid time; flags any |z| above `flag_at`.
ZTestResult martingale_ztest(const std::vector<std::vector<double>>& replicates,
                             double flag_at = 4.0);

struct GofResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t bins = 0;
  std::size_t dof = 0;
};

/// Binned chi-square goodness of fit against Poisson(rate); adjacent bins are
/// merged until every expected count is at least 5.
GofResult poisson_gof(std::span<const std::uint64_t> counts, double rate);

/// One line of a test report.
struct ComparisonReport {
  enum class Rule { at_most, at_least };

  std::string name;
  std::string statistic;
  double value = 0.0;
  double threshold = 0.0;
  Rule rule = Rule::at_most;
  std::vector<std::size_t> sizes;
  std::optional<double> z_score;
  std::optional<double> p_value;
  std::string detail;

  bool pass() const;
  nlohmann::json to_json() const;
};

/// |estimate - target| <= k * se, reported as a z-score.
ComparisonReport within_se(std::string name, double estimate, double target, double se,
                           std::size_t n, double k = 3.0);
ComparisonReport at_most(std::string name, std::string statistic, double value, double threshold,
                         std::vector<std::size_t> sizes);
ComparisonReport at_least(std::string name, std::string statistic, double value, double threshold,
                          std::vector<std::size_t> sizes);

}  // namespace coalflow

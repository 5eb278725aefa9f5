#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "coalflow/stats.hpp"

namespace coalflow {

struct AcceptanceSettings {
  std::string suite = "full";
  /// Multiplier applied to every replicate count.
  double scale = 1.0;
  std::uint64_t seed = 20240601;
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
};

/// "full" runs the criteria at their nominal sizes, "fast" at a tenth.
AcceptanceSettings suite_settings(std::string_view id);

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<ComparisonReport> reports;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string error;

  bool pass() const;
};

CriterionResult run_criterion(int id, const AcceptanceSettings& settings);

/// "[PASS] 3 feller exactness (12.1 s)" style line.
std::string summary_line(const CriterionResult& result);

}  // namespace coalflow

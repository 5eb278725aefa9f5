#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "coalflow/stats.hpp"

namespace coalflow {

inline constexpr const char* kVersion = "1.0.0";

/// One experiment: kind, model, numerics, seed and output directory.
struct RunConfig {
  /// scbm | sibm | feller | excursion | scsm | sdsm | dual-check | scaling
  std::string kind = "scbm";
  std::size_t m = 2;
  double rho = 1.0;
  std::string kernel = "gauss";
  std::string sigma = "const:1";
  /// Atom list "(x,m),..." or "uniform:<a>:<b>[:<atoms>]" (unit mass).
  std::string mu = "(-0.5,1),(0.5,1)";
  std::vector<double> thetas{1.0, 4.0, 16.0, 64.0};
  /// Test function id, a comma separated list for scaling. Empty picks sin
  /// for scsm and sdsm and gauss otherwise.
  std::string phi;
  /// Starting points of the particle systems; default 0, 0.5, 1, ...
  std::vector<double> starts;
  /// Initial mass of the Feller diffusion.
  double x = 1.0;
  double T = 1.0;
  double t = 1.0;
  double dt = 1e-3;
  std::optional<double> r;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::filesystem::path out = "coalflow_out";
  bool check = false;
  /// Zero picks default_threads().
  std::size_t threads = 0;

  /// Everything except the execution fields (out, check, threads).
  nlohmann::json to_json() const;
  /// Fields present in `j` override `base`. Unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig from_json(const nlohmann::json& j);
  /// Throws ParameterError naming the offending field.
  void validate() const;
};

/// Names accepted for RunConfig::kind.
const std::vector<std::string>& experiment_kinds();

struct RunOutcome {
  std::vector<ComparisonReport> reports;
  std::vector<std::filesystem::path> files;
  double seconds = 0.0;

  bool pass() const;
};

/// Validates, runs and writes manifest.json, report.jsonl and the data files
/// into config.out. A NumericalError leaves diagnostic.json behind and is
/// rethrown.
RunOutcome run_experiment(const RunConfig& config);

}  // namespace coalflow

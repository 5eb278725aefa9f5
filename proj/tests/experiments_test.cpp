#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>

#include "coalflow/errors.hpp"
#include "coalflow/experiments.hpp"
#include "coalflow/parallel.hpp"

using namespace coalflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("coalflow_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "manifest.json") out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

}  // namespace

TEST(RunReplicates, SlotOrderIndependentOfWorkers) {
  auto square = [](std::size_t k) { return static_cast<double>(k * k); };
  const auto one = run_replicates<double>(1000, square, 1);
  const auto many = run_replicates<double>(1000, square, 7);
  EXPECT_EQ(one, many);
  EXPECT_EQ(one[31], 961.0);
}

TEST(RunReplicates, RethrowsLowestFailingSlot) {
  auto fail = [](std::size_t k) -> int {
    if (k == 40 || k == 700) throw std::runtime_error("slot " + std::to_string(k));
    return 0;
  };
  try {
    run_replicates<int>(1000, fail, 4);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "slot 40");
  }
}

TEST(ThreadCountScope, OverridesAndRestores) {
  const auto before = default_threads();
  {
    ThreadCountScope scope(3);
    EXPECT_EQ(default_threads(), 3u);
  }
  EXPECT_EQ(default_threads(), before);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.kind = "scsm";
  c.mu = "(0,1),(0,1)";
  c.r = 0.2;
  c.thetas = {1.0, 2.0};
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(RunConfig::from_json(nlohmann::json{{"colour", 1}}), ParameterError);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json{{"n", "many"}}), ParameterError);
}

TEST(RunConfig, RejectsRateNotBoundedBelowBeforeSimulating) {
  RunConfig c;
  c.kind = "scsm";
  c.sigma = "const:0";
  c.out = scratch("rejected");
  try {
    run_experiment(c);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("sigma:", 0), 0u) << e.what();
  }
  EXPECT_FALSE(fs::exists(c.out));
}

TEST(RunConfig, FieldLevelMessages) {
  auto message = [](RunConfig c) {
    try {
      c.validate();
    } catch (const ParameterError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  RunConfig c;
  c.dt = -1.0;
  EXPECT_EQ(message(c).rfind("dt:", 0), 0u);
  c = RunConfig{};
  c.kind = "heat";
  EXPECT_EQ(message(c).rfind("kind:", 0), 0u);
  c = RunConfig{};
  c.mu = "(0,1";
  EXPECT_EQ(message(c).rfind("mu:", 0), 0u);
  c = RunConfig{};
  c.kind = "scaling";
  c.thetas = {0.5};
  EXPECT_EQ(message(c).rfind("thetas:", 0), 0u);
  c = RunConfig{};
  c.kind = "sibm";
  c.m = 3;
  c.starts = {0.0, 1.0};
  EXPECT_EQ(message(c).rfind("starts:", 0), 0u);
  EXPECT_EQ(message(RunConfig{}), "");
}

TEST(RunExperiment, ScbmWritesEchoedOutputs) {
  RunConfig c;
  c.kind = "scbm";
  c.n = 200;
  c.dt = 1e-2;
  c.seed = 7;
  c.out = scratch("scbm");
  const auto outcome = run_experiment(c);
  for (const char* f : {"manifest.json", "report.jsonl", "paths.csv", "covariation.csv", "summary.json"}) {
    EXPECT_TRUE(fs::exists(c.out / f)) << f;
  }
  const auto paths = slurp(c.out / "paths.csv");
  EXPECT_EQ(paths.rfind("# seed=7", 0), 0u);
  EXPECT_NE(paths.find("time,pos_1,pos_2,group_1,group_2"), std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(c.out / "manifest.json"));
  EXPECT_EQ(manifest["config"]["kind"], "scbm");
  EXPECT_TRUE(manifest.contains("wall_seconds"));
  std::ifstream report(c.out / "report.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(report, line);) {
    const auto j = nlohmann::json::parse(line);
    if (lines == 0) {
      EXPECT_TRUE(j.contains("config"));
    }
    ++lines;
  }
  EXPECT_EQ(lines, outcome.reports.size() + 1);
}

TEST(RunExperiment, DualCheckReportsZScore) {
  RunConfig c;
  c.kind = "dual-check";
  c.m = 2;
  c.t = 1.0;
  c.sigma = "const:1";
  c.mu = "(-1,1),(1,1)";
  c.n = 2000;
  c.dt = 1e-2;
  c.out = scratch("dual");
  run_experiment(c);
  const auto j = nlohmann::json::parse(slurp(c.out / "dual_check.json"));
  for (const char* key : {"forward", "dual", "z", "combined_se", "config"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["config"]["phi"], "gauss");
}

TEST(RunExperiment, ScalingTable) {
  RunConfig c;
  c.kind = "scaling";
  c.thetas = {1.0, 4.0};
  c.t = 0.5;
  c.n = 100;
  c.dt = 1e-2;
  c.out = scratch("scaling");
  run_experiment(c);
  const auto csv = slurp(c.out / "scaling.csv");
  EXPECT_NE(csv.find("\ntheta,phi_id,ks,n,seed\n"), std::string::npos);
  EXPECT_NE(csv.find("4,pair_distance,"), std::string::npos);
}

TEST(RunExperiment, OutputsDoNotDependOnWorkerCount) {
  for (const char* kind : {"scbm", "sibm", "feller", "excursion", "scsm", "sdsm", "dual-check", "scaling"}) {
    RunConfig c;
    c.kind = kind;
    c.n = 100;
    c.dt = 2e-2;
    c.T = 0.5;
    c.t = 0.5;
    c.thetas = {1.0, 2.0};
    std::vector<std::map<std::string, std::string>> runs;
    for (std::size_t threads : {1u, 4u}) {
      c.threads = threads;
      c.out = scratch(std::string("det_") + kind + std::to_string(threads));
      run_experiment(c);
      runs.push_back(tree(c.out));
    }
    EXPECT_FALSE(runs[0].empty());
    EXPECT_EQ(runs[0], runs[1]) << kind;
  }
}

// coalflow: run one experiment or the acceptance battery.
//
//   coalflow run scbm --m 2 --rho 1 --T 1 --dt 1e-3 --n 10000 --seed 7
//   coalflow run dual-check --m 2 --t 1 --sigma const:1 --mu "(-1,1),(1,1)" --n 100000
//   coalflow run scaling --thetas 1,4,16,64 --phi gauss --t 0.5 --n 10000
//   coalflow check fast

#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "coalflow/acceptance.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/experiments.hpp"

namespace {

using coalflow::RunConfig;

constexpr int kUsageError = 2;
constexpr int kCheckFailed = 1;
constexpr int kRuntimeError = 3;

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.resize(width, ' ');
  return s;
}

void print_reports(const std::vector<coalflow::ComparisonReport>& reports) {
  for (const auto& r : reports) {
    std::ostringstream value;
    value << std::setprecision(4) << r.value << (r.rule == coalflow::ComparisonReport::Rule::at_most
                                                     ? " <= "
                                                     : " >= ")
          << r.threshold;
    std::cout << "  " << (r.pass() ? "ok   " : "FAIL ") << pad(r.name, 48) << " "
              << pad(r.statistic, 15) << value.str() << "\n";
  }
}

int run_command(const std::string& kind, const std::string& config_file,
                const std::function<void(RunConfig&)>& apply_flags) {
  RunConfig config;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw coalflow::ParameterError("config: cannot read '" + config_file + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw coalflow::ParameterError("config: " + std::string(e.what()));
    }
    config = RunConfig::from_json(j);
  }
  if (!kind.empty()) config.kind = kind;
  apply_flags(config);
  const auto outcome = coalflow::run_experiment(config);
  std::cout << "wrote " << outcome.files.size() + 1 << " files to " << config.out.string() << " ("
            << std::fixed << std::setprecision(1) << outcome.seconds << " s)\n";
  print_reports(outcome.reports);
  if (config.check && !outcome.pass()) {
    std::cerr << "check failed\n";
    return kCheckFailed;
  }
  return 0;
}

int check_command(const std::string& suite, std::uint64_t seed, const std::vector<int>& only) {
  auto settings = coalflow::suite_settings(suite);
  settings.seed = seed;
  if (!only.empty()) settings.criteria = only;
  bool all = true;
  for (int id : settings.criteria) {
    const auto result = coalflow::run_criterion(id, settings);
    std::cout << coalflow::summary_line(result) << "\n";
    print_reports(result.reports);
    std::cout.flush();
    all = all && result.pass();
  }
  std::cout << (all ? "all criteria passed" : "some criteria failed") << "\n";
  return all ? 0 : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for coalescing and interacting superprocesses"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment and write its outputs");
  std::string kind;
  std::string config_file;
  RunConfig flags;
  std::string r_text;
  std::string thetas_text;
  std::string starts_text;
  std::string out_text;
  run->add_option("kind", kind, "scbm | sibm | feller | excursion | scsm | sdsm | dual-check | scaling")
      ->check(CLI::IsMember(coalflow::experiment_kinds()));
  run->add_option("--config", config_file, "JSON config file; flags override its fields");
  auto* m_opt = run->add_option("--m", flags.m, "number of particles or moment order");
  auto* rho_opt = run->add_option("--rho", flags.rho, "speed of the coalescing motion");
  auto* kernel_opt = run->add_option("--kernel", flags.kernel, "gauss[:w], tri[:a] or const:<rho0>");
  auto* sigma_opt = run->add_option("--sigma", flags.sigma, "const:<c> or bump:<base>[:<amp>[:<width>]]");
  auto* mu_opt = run->add_option("--mu", flags.mu, "\"(x,m),...\" or uniform:<a>:<b>[:<atoms>]");
  auto* thetas_opt = run->add_option("--thetas", thetas_text, "comma separated scaling parameters");
  auto* phi_opt = run->add_option("--phi", flags.phi, "test function id(s)");
  auto* starts_opt = run->add_option("--starts", starts_text, "comma separated starting points");
  auto* x_opt = run->add_option("--x", flags.x, "initial Feller mass");
  auto* horizon_opt = run->add_option("--T", flags.T, "path horizon");
  auto* t_opt = run->add_option("--t", flags.t, "observation time");
  auto* dt_opt = run->add_option("--dt", flags.dt, "time step");
  auto* r_opt = run->add_option("--r", r_text, "excursion cutoff");
  auto* n_opt = run->add_option("--n", flags.n, "replicates");
  auto* seed_opt = run->add_option("--seed", flags.seed, "master seed");
  auto* out_opt = run->add_option("--out", out_text, "output directory");
  auto* check_opt = run->add_flag("--check", flags.check, "exit nonzero when a check fails");
  auto* threads_opt = run->add_option("--threads", flags.threads, "worker threads (0: default)");

  auto* check = app.add_subcommand("check", "Run the acceptance criteria");
  std::string suite = "fast";
  std::uint64_t check_seed = coalflow::AcceptanceSettings{}.seed;
  std::vector<int> only;
  check->add_option("suite", suite, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  check->add_option("--seed", check_seed, "master seed");
  check->add_option("--only", only, "criterion ids to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto list = [](const std::string& text, const char* field) {
    std::vector<double> v;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw coalflow::ParameterError(std::string(field) + ": cannot parse '" + item + "'");
      }
    }
    return v;
  };

  try {
    if (*check) return check_command(suite, check_seed, only);
    return run_command(kind, config_file, [&](RunConfig& c) {
      if (*m_opt) c.m = flags.m;
      if (*rho_opt) c.rho = flags.rho;
      if (*kernel_opt) c.kernel = flags.kernel;
      if (*sigma_opt) c.sigma = flags.sigma;
      if (*mu_opt) c.mu = flags.mu;
      if (*thetas_opt) c.thetas = list(thetas_text, "thetas");
      if (*phi_opt) c.phi = flags.phi;
      if (*starts_opt) {
        c.starts = list(starts_text, "starts");
        if (!*m_opt) c.m = c.starts.size();
      }
      if (*x_opt) c.x = flags.x;
      if (*horizon_opt) c.T = flags.T;
      if (*t_opt) c.t = flags.t;
      if (*dt_opt) c.dt = flags.dt;
      if (*r_opt) c.r = list(r_text, "r").at(0);
      if (*n_opt) c.n = flags.n;
      if (*seed_opt) c.seed = flags.seed;
      if (*out_opt) c.out = out_text;
      if (*check_opt) c.check = flags.check;
      if (*threads_opt) c.threads = flags.threads;
    });
  } catch (const coalflow::ParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const coalflow::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << " (see diagnostic.json)\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

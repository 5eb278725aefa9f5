#include "coalflow/acceptance.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coalflow/branching.hpp"
#include "coalflow/dual.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/experiments.hpp"
#include "coalflow/flows.hpp"
#include "coalflow/parallel.hpp"
#include "coalflow/scsm.hpp"
#include "coalflow/sdsm.hpp"

namespace coalflow {

AcceptanceSettings suite_settings(std::string_view id) {
  AcceptanceSettings s;
  if (id == "full") {
    s.suite = "full";
    s.scale = 1.0;
  } else if (id == "fast") {
    s.suite = "fast";
    s.scale = 0.1;
  } else {
    throw ParameterError("unknown suite '" + std::string(id) + "' (expected fast or full)");
  }
  return s;
}

bool CriterionResult::pass() const {
  if (!error.empty() || reports.empty()) return false;
  for (const auto& r : reports) {
    if (!r.pass()) return false;
  }
  return true;
}

std::string summary_line(const CriterionResult& result) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << (result.pass() ? "[PASS] " : "[FAIL] ") << result.id << " " << result.title << " ("
     << result.seconds << " s";
  std::size_t failed = 0;
  for (const auto& r : result.reports) failed += r.pass() ? 0 : 1;
  if (failed) os << ", " << failed << " of " << result.reports.size() << " checks failed";
  if (!result.error.empty()) os << ", error: " << result.error;
  os << ")";
  return os.str();
}

namespace {

std::size_t scaled(std::size_t n, const AcceptanceSettings& s) {
  return std::max<std::size_t>(100, static_cast<std::size_t>(std::llround(n * s.scale)));
}

double ks_threshold(double nominal, const AcceptanceSettings& s) {
  return nominal / std::sqrt(std::min(1.0, s.scale));
}

std::string label(std::string_view base, double value) {
  std::ostringstream os;
  os << base << value;
  return os.str();
}

double merge_probability(double d0, double speed, double t) {
  return 2.0 * (1.0 - normal_cdf(d0 / std::sqrt(2.0 * speed * t)));
}

// ---------------------------------------------------------------------------

void covariation_law(CriterionResult& res, const AcceptanceSettings& s) {
  const std::size_t n = scaled(10000, s);
  const double speed = 1.0;
  const double dt = 1e-3;
  const std::vector<double> starts{0.0, 0.5};
  constexpr std::size_t kChecks = 10;
  struct Row {
    std::array<double, kChecks> cov{};
    std::array<double, kChecks> predicted{};
  };
  const RngStream root(s.seed, 1);
  const auto rows = run_replicates<Row>(n, [&](std::size_t k) {
    const auto b = simulate_scbm(starts, speed, 1.0, dt, root.split(k));
    const auto cov = realized_covariation(b.path(0), b.path(1));
    const double tau = b.coalescence_time(0, 1);
    Row r;
    for (std::size_t c = 0; c < kChecks; ++c) {
      const std::size_t idx = (c + 1) * 100;
      const double t = b.grid.time(idx);
      r.cov[c] = cov[idx];
      r.predicted[c] = speed * (t - std::min(t, tau));
    }
    return r;
  });
  for (std::size_t c = 0; c < kChecks; ++c) {
    RunningStats a;
    RunningStats b;
    for (const auto& r : rows) {
      a.add(r.cov[c]);
      b.add(r.predicted[c]);
    }
    const double t = 0.1 * static_cast<double>(c + 1);
    res.reports.push_back(within_se(label("covariation_vs_merge_time_t=", t), a.mean(), b.mean(),
                                    std::hypot(a.se(), b.se()), n));
    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    const double analytic =
        speed * gk.integrate([&](double u) { return u > 0 ? merge_probability(0.5, speed, u) : 0.0; },
                             0.0, t);
    res.reports.push_back(
        within_se(label("covariation_vs_analytic_t=", t), a.mean(), analytic, a.se(), n));
  }
}

void coalescence_probability(CriterionResult& res, const AcceptanceSettings& s) {
  const std::size_t n = scaled(10000, s);
  const std::vector<double> starts{0.0, 0.5};
  const RngStream root(s.seed, 2);
  const auto merged = run_replicates<int>(n, [&](std::size_t k) {
    const auto b = simulate_scbm(starts, 1.0, 1.0, 1e-3, root.split(k));
    return b.group(0, b.grid.steps) == b.group(1, b.grid.steps) ? 1 : 0;
  });
  RunningStats p;
  for (int m : merged) p.add(m);
  res.reports.push_back(
      within_se("merged_by_T", p.mean(), merge_probability(0.5, 1.0, 1.0), p.se(), n));
}

void feller_exactness(CriterionResult& res, const AcceptanceSettings& s) {
  const std::size_t n = scaled(10000, s);
  const double x = 1.0;
  const double t = 1.0;
  const RngStream exact_root(s.seed, 31);
  const RngStream euler_root(s.seed, 32);
  const auto exact = run_replicates<double>(n, [&](std::size_t k) {
    RngStream r = exact_root.split(k);
    return feller_sample_exact(x, t, r);
  });
  const auto euler = run_replicates<double>(n, [&](std::size_t k) {
    RngStream r = euler_root.split(k);
    return feller_path_euler(x, t, 1e-4, r).back();
  });
  auto ks = at_most("exact_vs_euler_ks", "ks", ks_two_sample(exact, euler).statistic,
                    ks_threshold(0.02, s), {n, n});
  res.reports.push_back(ks);

  const std::size_t big = scaled(100000, s);
  const RngStream lt_root(s.seed, 33);
  const auto draws = run_replicates<double>(big, [&](std::size_t k) {
    RngStream r = lt_root.split(k);
    return feller_sample_exact(x, t, r);
  });
  for (double lambda : {0.5, 1.0, 2.0}) {
    RunningStats e;
    for (double v : draws) e.add(std::exp(-lambda * v));
    res.reports.push_back(within_se(label("laplace_lambda=", lambda), e.mean(),
                                    std::exp(-x * lambda / (1.0 + lambda * t / 2.0)), e.se(), big));
  }
  RunningStats dead;
  for (double v : draws) dead.add(v == 0.0 ? 1.0 : 0.0);
  res.reports.push_back(
      within_se("extinction_frequency", dead.mean(), std::exp(-2.0 * x / t), dead.se(), big));
}

void excursion_ensemble(CriterionResult& res, const AcceptanceSettings& s) {
  const std::size_t n = scaled(10000, s);
  const AtomicMeasure mu({{0.0, 1.0}});
  const auto sigma = BranchingRate::constant(1.0);
  const double r = 0.1;
  ScsmOptions options;
  options.prune = false;
  options.record_every = std::numeric_limits<std::size_t>::max();
  struct Row {
    std::uint64_t count = 0;
    double mass = 0.0;
  };
  const RngStream root(s.seed, 4);
  const auto rows = run_replicates<Row>(n, [&](std::size_t k) {
    const auto path = simulate_scsm_general(mu, sigma, 1.0, r, 2.0 * r, 1e-3, root.split(k), options);
    return Row{path.live_atoms(0), path.total_mass(0)};
  });
  std::vector<std::uint64_t> counts;
  RunningStats mass;
  for (const auto& row : rows) {
    counts.push_back(row.count);
    mass.add(row.mass);
  }
  const auto gof = poisson_gof(counts, 2.0 * mu.total_mass() / r);
  auto rep = at_least("atom_count_poisson_gof", "p", gof.p_value, 1e-3, {n});
  rep.p_value = gof.p_value;
  res.reports.push_back(rep);
  res.reports.push_back(within_se("mean_total_mass_at_r", mass.mean(), mu.total_mass(), mass.se(), n));
}

void martingale_and_qv(CriterionResult& res, const AcceptanceSettings& s) {
  const std::size_t n = scaled(10000, s);
  const AtomicMeasure mu({{0.0, 1.0}, {0.0, 1.0}, {1.0, 1.0}});
  const auto sigma = BranchingRate::bump(1.0, 1.0, 1.0);
  const auto phi = SmoothFunction::sine();
  const double dt = 1e-3;
  constexpr std::array<std::size_t, 4> kIdx{250, 500, 750, 1000};
  struct Row {
    std::array<double, 4> m{};
    std::array<double, 4> realized{};
    std::array<double, 4> predicted{};
  };
  const RngStream root(s.seed, 5);
  const auto rows = run_replicates<Row>(n, [&](std::size_t k) {
    const auto path = simulate_scsm_atomic(mu, sigma, 1.0, 1.0, dt, root.split(k));
    const auto m = martingale_functional(path, phi);
    const auto qv = realized_qv(m);
    const auto pred = qv_predicted(path, phi, sigma);
    Row r;
    for (std::size_t c = 0; c < kIdx.size(); ++c) {
      r.m[c] = m[kIdx[c]];
      r.realized[c] = qv[kIdx[c]];
      r.predicted[c] = pred[kIdx[c]];
    }
    return r;
  });
  for (std::size_t c = 0; c < kIdx.size(); ++c) {
    RunningStats m;
    RunningStats a;
    RunningStats b;
    for (const auto& r : rows) {
      m.add(r.m[c]);
      a.add(r.realized[c]);
      b.add(r.predicted[c]);
    }
    const double t = static_cast<double>(kIdx[c]) * dt;
    res.reports.push_back(within_se(label("martingale_mean_t=", t), m.mean(), 0.0, m.se(), n));
    res.reports.push_back(within_se(label("quadratic_variation_t=", t), a.mean(), b.mean(),
                                    std::hypot(a.se(), b.se()), n));
  }
}

void moment_duality(CriterionResult& res, const AcceptanceSettings& s) {
  const std::size_t n_dual = scaled(100000, s);
  const std::size_t n_fwd = scaled(10000, s);
  const AtomicMeasure mu({{-1.0, 1.0}, {1.0, 1.0}});
  const auto sigma = BranchingRate::constant(1.0);
  const double dt = 1e-3;
  auto compare = [&](const std::string& name, const MomentFunction& f, std::size_t m,
                     std::uint64_t stream_id) {
    const auto fwd = forward_moment_estimate(mu, sigma, 1.0, f, m, 1.0, n_fwd, dt,
                                             RngStream(s.seed, stream_id));
    const auto dual = dual_moment_estimate(mu, sigma, 1.0, f, m, 1.0, n_dual, dt,
                                           RngStream(s.seed, stream_id + 1));
    auto rep = within_se(name, fwd.value, dual.value, std::hypot(fwd.se, dual.se), n_fwd);
    rep.sizes = {n_fwd, n_dual};
    res.reports.push_back(rep);
  };
  compare("forward_vs_dual_m=2_gauss", MomentFunction::gauss(2), 2, 60);
  compare("forward_vs_dual_m=3_one", MomentFunction::one(3), 3, 62);
  const auto anchor = dual_moment_estimate(mu, sigma, 1.0, MomentFunction::one(2), 2, 1.0, n_dual,
                                           dt, RngStream(s.seed, 64));
  const double c = mu.total_mass();
  res.reports.push_back(
      within_se("dual_m=2_one_closed_form", anchor.value, c * c + c * 1.0, anchor.se, n_dual));
}

void flow_scaling(CriterionResult& res, const AcceptanceSettings& s) {
  const std::size_t n = scaled(10000, s);
  const auto kernel = InteractionKernel::gaussian();
  const std::vector<double> thetas{1.0, 4.0, 16.0, 64.0};
  std::vector<double> ks;
  const double step = rescaled_step(1e-3, thetas.back());
  const RngStream root(s.seed, 7);
  for (std::size_t q = 0; q < thetas.size(); ++q) {
    const auto scaled_kernel = kernel.scaled(thetas[q]);
    const auto d = run_replicates<double>(n, [&](std::size_t k) {
      return pair_distance_sample(0.0, 0.5, scaled_kernel, 1.0, step, root.split(k));
    });
    ks.push_back(pair_distance_ks(d, 0.5, kernel.rho0(), 1.0));
    res.reports.push_back(at_most(label("pair_distance_ks_theta=", thetas[q]), "ks", ks.back(),
                                  1.0, {n}));
  }
  for (std::size_t q = 1; q < ks.size(); ++q) {
    res.reports.push_back(at_most(label("ks_non_increasing_to_theta=", thetas[q]), "ks_change",
                                  ks[q] - ks[q - 1], 0.0, {n}));
  }
  res.reports.push_back(at_most("pair_distance_ks_theta=64_below_limit", "ks", ks.back(),
                                ks_threshold(0.05, s), {n}));
}

void superprocess_scaling(CriterionResult& res, const AcceptanceSettings& s) {
  ConvergenceConfig config;
  config.mu = AtomicMeasure({{-0.5, 1.0}, {0.5, 1.0}});
  config.kernel = InteractionKernel::gaussian();
  config.sigma = BranchingRate::bump(1.0, 1.0, 1.0);
  config.cutoff = 0.25;
  config.dt = 1e-3;
  config.replicates = scaled(10000, s);
  config.seed = s.seed + 8;
  config.pair_distances = false;
  const std::vector<double> thetas{1.0, 4.0, 16.0, 64.0};
  const auto rows = convergence_experiment(thetas, {SmoothFunction::gauss()}, 0.5, config);
  const std::size_t n = config.replicates;
  const double noise = 1.63 * std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t q = 0; q < rows.size(); ++q) {
    res.reports.push_back(
        at_most(label("ks_theta=", rows[q].theta), "ks", rows[q].ks, 1.0, {n, n}));
    if (q > 0) {
      res.reports.push_back(at_most(label("ks_non_increasing_within_noise_to_theta=", rows[q].theta),
                                    "ks_change", rows[q].ks - rows[q - 1].ks, noise, {n, n}));
    }
  }
  res.reports.push_back(
      at_most("ks_theta=64_below_limit", "ks", rows.back().ks, ks_threshold(0.05, s), {n, n}));
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[e.path().filename().string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return files;
}

void determinism(CriterionResult& res, const AcceptanceSettings& s) {
  const auto base = std::filesystem::temp_directory_path() /
                    ("coalflow_determinism_" + std::to_string(s.seed));
  std::filesystem::remove_all(base);
  const std::vector<std::string> kinds{"scbm", "feller", "excursion", "scsm", "dual-check"};
  for (const auto& kind : kinds) {
    RunConfig config;
    config.kind = kind;
    config.seed = s.seed + 9;
    config.n = 400;
    config.t = 0.5;
    config.T = 0.5;
    config.dt = 1e-2;
    config.mu = "(-1,1),(1,1)";
    config.r = kind == "scsm" ? std::optional<double>(0.1) : std::nullopt;
    std::vector<std::map<std::string, std::string>> trees;
    for (std::size_t threads : {1, 3}) {
      config.threads = threads;
      config.out = base / (kind + "_" + std::to_string(threads));
      run_experiment(config);
      trees.push_back(read_tree(config.out));
    }
    const bool same = trees[0] == trees[1] && !trees[0].empty();
    res.reports.push_back(
        at_least("byte_identical_outputs_" + kind, "identical", same ? 1.0 : 0.0, 1.0,
                 {trees[0].size()}));
  }
  std::filesystem::remove_all(base);
}

struct Spec {
  const char* title;
  double budget;
  void (*run)(CriterionResult&, const AcceptanceSettings&);
};

constexpr std::array<Spec, 9> kCriteria{{
    {"covariation law", 30.0, covariation_law},
    {"coalescence probability", 30.0, coalescence_probability},
    {"feller exactness", 60.0, feller_exactness},
    {"excursion ensemble", 60.0, excursion_ensemble},
    {"martingale and quadratic variation", 180.0, martingale_and_qv},
    {"moment duality", 600.0, moment_duality},
    {"flow scaling", 300.0, flow_scaling},
    {"superprocess scaling", 900.0, superprocess_scaling},
    {"determinism", 300.0, determinism},
}};

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceSettings& settings) {
  if (id < 1 || id > static_cast<int>(kCriteria.size())) {
    throw ParameterError("unknown acceptance criterion " + std::to_string(id));
  }
  const Spec& spec = kCriteria[static_cast<std::size_t>(id - 1)];
  CriterionResult res;
  res.id = id;
  res.title = spec.title;
  res.budget_seconds = spec.budget;
  const auto start = std::chrono::steady_clock::now();
  try {
    spec.run(res, settings);
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.reports.push_back(at_most("runtime_seconds", "seconds", res.seconds, spec.budget, {1}));
  return res;
}

}  // namespace coalflow

#include "coalflow/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "coalflow/branching.hpp"
#include "coalflow/dual.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/flows.hpp"
#include "coalflow/io.hpp"
#include "coalflow/parallel.hpp"
#include "coalflow/scsm.hpp"
#include "coalflow/sdsm.hpp"

namespace coalflow {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"scbm", "sibm",  "feller",     "excursion",
                                              "scsm", "sdsm",  "dual-check", "scaling"};
  return kinds;
}

bool RunOutcome::pass() const {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass(); });
}

json RunConfig::to_json() const {
  json j{{"kind", kind},   {"m", m},         {"rho", rho},   {"kernel", kernel},
         {"sigma", sigma}, {"mu", mu},       {"thetas", thetas}, {"phi", phi},
         {"starts", starts}, {"x", x},       {"T", T},       {"t", t},
         {"dt", dt},       {"n", n},         {"seed", seed}};
  j["r"] = r ? json(*r) : json(nullptr);
  return j;
}

RunConfig RunConfig::from_json(const json& j) { return from_json(j, RunConfig{}); }

RunConfig RunConfig::from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw ParameterError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "kind") c.kind = value.get<std::string>();
      else if (key == "m") c.m = value.get<std::size_t>();
      else if (key == "rho") c.rho = value.get<double>();
      else if (key == "kernel") c.kernel = value.get<std::string>();
      else if (key == "sigma") c.sigma = value.get<std::string>();
      else if (key == "mu") c.mu = value.get<std::string>();
      else if (key == "thetas") c.thetas = value.get<std::vector<double>>();
      else if (key == "phi") c.phi = value.get<std::string>();
      else if (key == "starts") c.starts = value.get<std::vector<double>>();
      else if (key == "x") c.x = value.get<double>();
      else if (key == "T") c.T = value.get<double>();
      else if (key == "t") c.t = value.get<double>();
      else if (key == "dt") c.dt = value.get<double>();
      else if (key == "n") c.n = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "r") c.r = value.is_null() ? std::nullopt : std::optional(value.get<double>());
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "check") c.check = value.get<bool>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
      else throw ParameterError("unknown config field '" + key + "'");
    } catch (const json::exception& e) {
      throw ParameterError("config field '" + key + "': " + e.what());
    }
  }
  return c;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

AtomicMeasure parse_mu(const std::string& spec) {
  if (spec.rfind("uniform:", 0) != 0) return AtomicMeasure::parse(spec);
  std::vector<double> v;
  std::stringstream ss(spec.substr(8));
  for (std::string item; std::getline(ss, item, ':');) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParameterError("measure '" + spec + "': cannot parse '" + item + "'");
    }
  }
  if (v.size() < 2 || v.size() > 3 || !(v[1] > v[0])) {
    throw ParameterError("measure '" + spec + "': expected uniform:<a>:<b>[:<atoms>] with a < b");
  }
  const auto k = static_cast<std::size_t>(v.size() == 3 ? v[2] : 16.0);
  if (k == 0) throw ParameterError("measure '" + spec + "': atom count must be positive");
  AtomicMeasure mu;
  const double h = (v[1] - v[0]) / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    mu.add(v[0] + (static_cast<double>(i) + 0.5) * h, 1.0 / static_cast<double>(k));
  }
  return mu;
}

std::string default_phi(const std::string& kind) {
  return kind == "scsm" || kind == "sdsm" ? "sin" : "gauss";
}

std::vector<double> starts_of(const RunConfig& c) {
  if (!c.starts.empty()) return c.starts;
  std::vector<double> s(c.m);
  for (std::size_t i = 0; i < c.m; ++i) s[i] = 0.5 * static_cast<double>(i);
  return s;
}

// Fills kind-dependent defaults so that the echoed config is the one run.
RunConfig effective(RunConfig c) {
  if (c.phi.empty()) c.phi = default_phi(c.kind);
  if (!c.r) {
    if (c.kind == "excursion" || c.kind == "sdsm") c.r = 0.1;
    if (c.kind == "scaling") c.r = c.t / 2.0;
  }
  if (c.starts.empty() && (c.kind == "scbm" || c.kind == "sibm" || c.kind == "scaling")) {
    c.starts = starts_of(c);
  }
  return c;
}

template <class Fn>
void field(const char* name, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    throw ParameterError(std::string(name) + ": " + e.what());
  }
}

void require(bool ok, const char* name, const std::string& message) {
  if (!ok) throw ParameterError(std::string(name) + ": " + message);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

void RunConfig::validate() const {
  const auto& kinds = experiment_kinds();
  require(std::find(kinds.begin(), kinds.end(), kind) != kinds.end(), "kind",
          "unknown experiment '" + kind +
              "' (scbm, sibm, feller, excursion, scsm, sdsm, dual-check, scaling)");
  field("sigma", [&] { BranchingRate::parse(sigma); });
  field("kernel", [&] { InteractionKernel::parse(kernel); });
  field("mu", [&] {
    const auto measure = parse_mu(mu);
    if (!(measure.total_mass() > 0.0)) throw ParameterError("total mass must be positive");
  });
  require(positive(rho), "rho", "must be positive");
  require(positive(dt), "dt", "must be positive");
  require(positive(T), "T", "must be positive");
  require(positive(t), "t", "must be positive");
  require(positive(x), "x", "must be positive");
  require(n >= 2, "n", "need at least 2 replicates");
  require(m >= 1, "m", "must be at least 1");
  require(starts.empty() || starts.size() == m, "starts", "expected m values");
  for (double s : starts) require(std::isfinite(s), "starts", "values must be finite");
  require(!r || positive(*r), "r", "must be positive");
  const std::string p = phi.empty() ? default_phi(kind) : phi;
  field("phi", [&] {
    if (kind == "dual-check") {
      MomentFunction::parse(p, m);
    } else {
      for (const auto& id : split_list(p)) SmoothFunction::parse(id);
    }
  });
  if (kind == "scbm" || kind == "sibm") require(m >= 2, "m", "need at least 2 particles");
  if (kind == "dual-check") require(m <= 8, "m", "moment order above 8 is not supported");
  if ((kind == "scsm" && r) || kind == "sdsm") {
    require(r.value_or(0.1) < T, "r", "cutoff must be below the horizon T");
  }
  if (kind == "scaling") {
    require(!thetas.empty(), "thetas", "need at least one value");
    for (double th : thetas) require(th >= 1.0 && std::isfinite(th), "thetas", "values must be >= 1");
    require(r.value_or(t / 2.0) < t, "r", "cutoff must be below t");
    require(starts.empty() || starts.size() >= 2, "starts", "need two starting points");
  }
}

namespace {

constexpr std::size_t kChunk = 512;

std::string short_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Runs fn(k) for k in [0, n) in chunks on the worker pool and hands the
// results to consume(k, result) in replicate order.
template <class T, class F, class G>
void for_each_replicate(std::size_t n, F&& fn, G&& consume) {
  for (std::size_t base = 0; base < n; base += kChunk) {
    const std::size_t len = std::min(kChunk, n - base);
    auto rows = run_replicates<T>(len, [&](std::size_t k) { return fn(base + k); });
    for (std::size_t k = 0; k < len; ++k) consume(base + k, rows[k]);
  }
}

struct Context {
  const RunConfig& config;
  json echo;
  std::string provenance;
  RunOutcome& outcome;

  fs::path file(const std::string& name) {
    outcome.files.push_back(config.out / name);
    return config.out / name;
  }
  void write_json(const std::string& name, json j) {
    j["config"] = echo;
    write_text(file(name), j.dump(2) + "\n");
  }
  std::ofstream open(const std::string& name) {
    std::ofstream out(file(name), std::ios::binary);
    if (!out) throw Error("cannot open " + (config.out / name).string() + " for writing");
    return out;
  }
  void report(ComparisonReport r) { outcome.reports.push_back(std::move(r)); }
};

std::size_t checkpoint(std::size_t points, std::size_t j, std::size_t count) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(j * (points - 1)) /
                                               static_cast<double>(count)));
}

void run_scbm(Context& ctx) {
  const auto& c = ctx.config;
  const auto starts = starts_of(c);
  const TimeGrid grid = TimeGrid::uniform(c.T, c.dt);
  const RngStream root(c.seed, 0);
  CovariationAccumulator cov(grid, 0, 1);
  std::vector<RunningStats> predicted(grid.points());
  RunningStats merged;
  LabeledPathBundle first;
  for_each_replicate<LabeledPathBundle>(
      c.n, [&](std::size_t k) { return simulate_scbm(starts, c.rho, c.T, c.dt, root.split(k)); },
      [&](std::size_t k, const LabeledPathBundle& b) {
        cov.add(b);
        const double tau = b.coalescence_time(0, 1);
        for (std::size_t i = 0; i < grid.points(); ++i) {
          const double t = grid.time(i);
          predicted[i].add(c.rho * (t - std::min(t, tau)));
        }
        merged.add(tau <= c.T ? 1.0 : 0.0);
        if (k == 0) first = b;
      });
  {
    auto out = ctx.open("paths.csv");
    write_bundle_csv(out, first, ctx.provenance);
  }
  const auto curve = cov.result(std::min<std::size_t>(c.n, 100));
  {
    auto out = ctx.open("covariation.csv");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.points(); ++i) {
      rows.push_back({curve.times[i], curve.mean[i], curve.se[i], predicted[i].mean(),
                      predicted[i].se()});
    }
    write_table_csv(out, {"time", "covariation_mean", "covariation_se", "predicted_mean", "predicted_se"},
                    rows, ctx.provenance);
  }
  ctx.write_json("summary.json", {{"first_replicate", bundle_summary(first)},
                                  {"replicates", c.n},
                                  {"merged_fraction_1_2", merged.mean()}});
  for (std::size_t j = 1; j <= 10; ++j) {
    const std::size_t i = checkpoint(grid.points(), j, 10);
    ctx.report(within_se("covariation_1_2_t=" + short_number(grid.time(i)), curve.mean[i], predicted[i].mean(),
                         std::hypot(curve.se[i], predicted[i].se()), c.n));
  }
  const double d0 = std::abs(starts[1] - starts[0]);
  const double p = d0 == 0.0 ? 1.0 : 2.0 * (1.0 - normal_cdf(d0 / std::sqrt(2.0 * c.rho * c.T)));
  ctx.report(within_se("merged_by_T_1_2", merged.mean(), p, merged.se(), c.n));
}

void run_sibm(Context& ctx) {
  const auto& c = ctx.config;
  const auto starts = starts_of(c);
  const auto kernel = InteractionKernel::parse(c.kernel);
  const RngStream root(c.seed, 0);
  std::vector<std::vector<double>> endpoints(c.m);
  std::vector<std::vector<double>> rows;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  LabeledPathBundle first;
  for_each_replicate<LabeledPathBundle>(
      c.n, [&](std::size_t k) { return simulate_sibm(starts, kernel, c.T, c.dt, root.split(k)); },
      [&](std::size_t k, const LabeledPathBundle& b) {
        std::vector<double> row{static_cast<double>(k + 1)};
        for (std::size_t i = 0; i < c.m; ++i) {
          endpoints[i].push_back(b.position(i, b.grid.steps));
          row.push_back(endpoints[i].back());
        }
        rows.push_back(std::move(row));
        min_eigenvalue = std::min(min_eigenvalue, b.min_eigenvalue);
        if (k == 0) first = b;
      });
  {
    auto out = ctx.open("paths.csv");
    write_bundle_csv(out, first, ctx.provenance);
  }
  {
    std::vector<std::string> columns{"replicate"};
    for (std::size_t i = 0; i < c.m; ++i) columns.push_back("pos_" + std::to_string(i + 1));
    auto out = ctx.open("endpoints.csv");
    write_table_csv(out, columns, rows, ctx.provenance);
  }
  json summary{{"first_replicate", bundle_summary(first)}, {"replicates", c.n},
               {"kernel", kernel.description()}};
  if (std::isfinite(min_eigenvalue)) summary["min_eigenvalue"] = min_eigenvalue;
  ctx.write_json("summary.json", summary);
  const double sd = std::sqrt(kernel.rho0() * first.grid.horizon);
  for (std::size_t i = 0; i < c.m; ++i) {
    const double s = starts[i];
    const auto ks = ks_one_sample(endpoints[i], [&](double y) { return normal_cdf((y - s) / sd); });
    auto rep = at_least("endpoint_marginal_" + std::to_string(i + 1), "p", ks.p_value, 1e-3, {c.n});
    rep.detail = "ks=" + format_double(ks.statistic);
    ctx.report(rep);
  }
  if (std::isfinite(min_eigenvalue)) {
    ctx.report(at_least("covariance_psd", "min_eigenvalue", min_eigenvalue,
                        -kEigenvalueClip * kernel.rho0(), {c.n}));
  }
}

void run_feller(Context& ctx) {
  const auto& c = ctx.config;
  const RngStream exact_root(c.seed, 0);
  const RngStream euler_root(c.seed, 1);
  struct Row {
    double exact = 0.0;
    double euler = 0.0;
  };
  std::vector<double> exact;
  std::vector<double> euler;
  std::vector<std::vector<double>> rows;
  for_each_replicate<Row>(
      c.n,
      [&](std::size_t k) {
        RngStream a = exact_root.split(k);
        RngStream b = euler_root.split(k);
        return Row{feller_sample_exact(c.x, c.T, a), feller_path_euler(c.x, c.T, c.dt, b).back()};
      },
      [&](std::size_t k, const Row& r) {
        exact.push_back(r.exact);
        euler.push_back(r.euler);
        rows.push_back({static_cast<double>(k + 1), r.exact, r.euler});
      });
  {
    auto out = ctx.open("samples.csv");
    write_table_csv(out, {"replicate", "exact", "euler"}, rows, ctx.provenance);
  }
  const auto ks = ks_two_sample(exact, euler);
  auto rep = at_least("exact_vs_euler", "p", ks.p_value, 1e-3, {c.n, c.n});
  rep.detail = "ks=" + format_double(ks.statistic);
  ctx.report(rep);
  json laplace = json::array();
  for (double lambda : {0.5, 1.0, 2.0}) {
    RunningStats e;
    for (double v : exact) e.add(std::exp(-lambda * v));
    const double target = std::exp(-c.x * lambda / (1.0 + lambda * c.T / 2.0));
    laplace.push_back({{"lambda", lambda}, {"mean", e.mean()}, {"se", e.se()}, {"target", target}});
    ctx.report(within_se("laplace_lambda=" + format_double(lambda), e.mean(), target, e.se(), c.n));
  }
  RunningStats dead;
  for (double v : exact) dead.add(v == 0.0 ? 1.0 : 0.0);
  const double p0 = std::exp(-2.0 * c.x / c.T);
  ctx.report(within_se("extinction_frequency", dead.mean(), p0, dead.se(), c.n));
  ctx.write_json("summary.json", {{"ks", ks.statistic},
                                  {"ks_p_value", ks.p_value},
                                  {"laplace", laplace},
                                  {"extinction_frequency", dead.mean()},
                                  {"extinction_probability", p0}});
}

void run_excursion(Context& ctx) {
  const auto& c = ctx.config;
  const auto mu = parse_mu(c.mu);
  const double r = *c.r;
  const RngStream root(c.seed, 0);
  std::vector<std::uint64_t> counts;
  RunningStats mass;
  std::vector<std::vector<double>> rows;
  ExcursionEnsemble first;
  for_each_replicate<ExcursionEnsemble>(
      c.n,
      [&](std::size_t k) {
        RngStream s = root.split(k);
        return sample_excursion_ensemble(mu, r, s);
      },
      [&](std::size_t k, const ExcursionEnsemble& e) {
        double total = 0.0;
        for (const auto& a : e.atoms) total += a.mass;
        counts.push_back(e.atoms.size());
        mass.add(total);
        rows.push_back({static_cast<double>(k + 1), static_cast<double>(e.atoms.size()), total});
        if (k == 0) first = e;
      });
  {
    auto out = ctx.open("ensembles.csv");
    write_table_csv(out, {"replicate", "count", "total_mass"}, rows, ctx.provenance);
  }
  const double rate = mu.total_mass() * excursion_survival_mass(r);
  const auto gof = poisson_gof(counts, rate);
  ctx.write_json("summary.json", {{"first_replicate", to_json(first)},
                                  {"expected_count", rate},
                                  {"gof_statistic", gof.statistic},
                                  {"gof_p_value", gof.p_value},
                                  {"mean_total_mass", mass.mean()}});
  auto rep = at_least("atom_count_poisson_gof", "p", gof.p_value, 1e-3, {c.n});
  rep.p_value = gof.p_value;
  ctx.report(rep);
  ctx.report(within_se("mean_total_mass", mass.mean(), mu.total_mass(), mass.se(), c.n));
}

void run_measure(Context& ctx, bool interacting) {
  const auto& c = ctx.config;
  const auto mu = parse_mu(c.mu);
  const auto sigma = BranchingRate::parse(c.sigma);
  const auto phi = SmoothFunction::parse(c.phi);
  const auto kernel = InteractionKernel::parse(c.kernel);
  const RngStream root(c.seed, 0);
  struct Row {
    std::vector<double> times;
    std::vector<double> mass;
    std::vector<double> martingale;
    std::vector<double> qv;
    std::vector<double> predicted;
    std::optional<MeasurePath> path;
  };
  std::vector<double> times;
  std::vector<RunningStats> mass;
  std::vector<RunningStats> martingale;
  std::vector<RunningStats> qv;
  std::vector<RunningStats> predicted;
  MeasurePath first;
  for_each_replicate<Row>(
      c.n,
      [&](std::size_t k) {
        const RngStream s = root.split(k);
        MeasurePath path =
            interacting ? simulate_sdsm(mu, kernel, sigma, *c.r, c.T, c.dt, s)
            : c.r       ? simulate_scsm_general(mu, sigma, c.rho, *c.r, c.T, c.dt, s)
                        : simulate_scsm_atomic(mu, sigma, c.rho, c.T, c.dt, s);
        Row row;
        row.times = path.times;
        for (std::size_t i = 0; i < path.points(); ++i) row.mass.push_back(path.total_mass(i));
        row.martingale = martingale_functional(path, phi);
        row.qv = realized_qv(row.martingale);
        if (!interacting) row.predicted = qv_predicted(path, phi, sigma);
        if (k == 0) row.path = std::move(path);
        return row;
      },
      [&](std::size_t k, Row& row) {
        if (k == 0) {
          times = row.times;
          first = std::move(*row.path);
          mass.resize(times.size());
          martingale.resize(times.size());
          qv.resize(times.size());
          predicted.resize(times.size());
        }
        for (std::size_t i = 0; i < times.size(); ++i) {
          mass[i].add(row.mass[i]);
          martingale[i].add(row.martingale[i]);
          qv[i].add(row.qv[i]);
          if (!interacting) predicted[i].add(row.predicted[i]);
        }
      });
  {
    auto out = ctx.open("measure.csv");
    write_measure_csv(out, first, ctx.provenance);
  }
  {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < times.size(); ++i) {
      rows.push_back({times[i], mass[i].mean(), mass[i].se(), martingale[i].mean(),
                      martingale[i].se(), qv[i].mean(), qv[i].se()});
      if (!interacting) {
        rows.back().push_back(predicted[i].mean());
        rows.back().push_back(predicted[i].se());
      }
    }
    std::vector<std::string> columns{"time",           "mass_mean",     "mass_se",
                                     "martingale_mean", "martingale_se", "qv_mean", "qv_se"};
    if (!interacting) {
      columns.push_back("qv_predicted_mean");
      columns.push_back("qv_predicted_se");
    }
    auto out = ctx.open("functionals.csv");
    write_table_csv(out, columns, rows, ctx.provenance);
  }
  ctx.write_json("summary.json", {{"first_replicate", summary_json(first)}, {"replicates", c.n}});
  const std::size_t last = times.size() - 1;
  ctx.report(within_se("mean_total_mass_at_T", mass[last].mean(), mu.total_mass(), mass[last].se(),
                       c.n));
  for (std::size_t j = 1; j <= 4; ++j) {
    const std::size_t i = checkpoint(times.size(), j, 4);
    const std::string at = "_t=" + short_number(times[i]);
    ctx.report(within_se("martingale_mean" + at, martingale[i].mean(), 0.0, martingale[i].se(), c.n));
    if (!interacting) {
      ctx.report(within_se("quadratic_variation" + at, qv[i].mean(), predicted[i].mean(),
                           std::hypot(qv[i].se(), predicted[i].se()), c.n));
    }
  }
}

void run_dual_check(Context& ctx) {
  const auto& c = ctx.config;
  const auto mu = parse_mu(c.mu);
  const auto sigma = BranchingRate::parse(c.sigma);
  const auto f = MomentFunction::parse(c.phi, c.m);
  const std::size_t n_forward = std::max<std::size_t>(2, c.n / 10);
  const auto forward = forward_moment_estimate(mu, sigma, c.rho, f, c.m, c.t, n_forward, c.dt,
                                               RngStream(c.seed, 0), c.r);
  const auto dual = dual_moment_estimate(mu, sigma, c.rho, f, c.m, c.t, c.n, c.dt,
                                         RngStream(c.seed, 1));
  const double se = std::hypot(forward.se, dual.se);
  auto rep = within_se("forward_vs_dual", forward.value, dual.value, se, n_forward);
  rep.sizes = {n_forward, c.n};
  json j{{"forward", to_json(forward)},
         {"dual", to_json(dual)},
         {"difference", forward.value - dual.value},
         {"combined_se", se},
         {"z", se > 0.0 ? json((forward.value - dual.value) / se) : json(nullptr)}};
  ctx.report(rep);
  if (f.constant && sigma.is_constant() && c.m == 2) {
    const double total = mu.total_mass();
    const double level = f(std::vector<double>(2, 0.0));
    const double exact = level * (total * total + sigma(0.0) * total * c.t);
    j["closed_form"] = exact;
    ctx.report(within_se("dual_vs_closed_form", dual.value, exact, dual.se, c.n));
    ctx.report(within_se("forward_vs_closed_form", forward.value, exact, forward.se, n_forward));
  }
  ctx.write_json("dual_check.json", j);
}

void run_scaling(Context& ctx) {
  const auto& c = ctx.config;
  ConvergenceConfig cc;
  cc.mu = parse_mu(c.mu);
  cc.kernel = InteractionKernel::parse(c.kernel);
  cc.sigma = BranchingRate::parse(c.sigma);
  cc.cutoff = *c.r;
  cc.dt = c.dt;
  cc.replicates = c.n;
  cc.seed = c.seed;
  cc.pair_left = c.starts[0];
  cc.pair_right = c.starts[1];
  cc.pair_horizon = c.T;
  std::vector<SmoothFunction> phis;
  for (const auto& id : split_list(c.phi)) phis.push_back(SmoothFunction::parse(id));
  const auto rows = convergence_experiment(c.thetas, phis, c.t, cc);
  {
    auto out = ctx.open("scaling.csv");
    out << ctx.provenance << "\ntheta,phi_id,ks,n,seed\n";
    for (const auto& row : rows) {
      out << format_double(row.theta) << ',' << row.phi_id << ',' << format_double(row.ks) << ','
          << row.n << ',' << row.seed << "\n";
    }
  }
  const double theta_max = *std::max_element(c.thetas.begin(), c.thetas.end());
  const double two_sample = ks_critical_value(c.n, c.n, 1e-3);
  for (const auto& row : rows) {
    if (row.theta != theta_max) continue;
    const bool pair = row.phi_id == "pair_distance";
    ctx.report(at_most("ks_" + row.phi_id + "_theta=" + format_double(row.theta), "ks", row.ks,
                       pair ? two_sample / std::sqrt(2.0) : two_sample,
                       pair ? std::vector<std::size_t>{row.n} : std::vector<std::size_t>{row.n, row.n}));
  }
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

RunOutcome run_experiment(const RunConfig& input) {
  input.validate();
  const RunConfig config = effective(input);
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(config.out);
  ThreadCountScope threads(config.threads);
  RunOutcome outcome;
  Context ctx{config, config.to_json(), "", outcome};
  ctx.provenance = provenance_line(config.seed, ctx.echo);
  try {
    if (config.kind == "scbm") run_scbm(ctx);
    else if (config.kind == "sibm") run_sibm(ctx);
    else if (config.kind == "feller") run_feller(ctx);
    else if (config.kind == "excursion") run_excursion(ctx);
    else if (config.kind == "scsm") run_measure(ctx, false);
    else if (config.kind == "sdsm") run_measure(ctx, true);
    else if (config.kind == "dual-check") run_dual_check(ctx);
    else run_scaling(ctx);
  } catch (const NumericalError& e) {
    write_text(config.out / "diagnostic.json",
               json{{"error", e.what()}, {"matrix", matrix_json(e.offending())}, {"config", ctx.echo}}
                       .dump(2) +
                   "\n");
    throw;
  }
  {
    std::string lines = json{{"config", ctx.echo},
                             {"seed", config.seed},
                             {"streams", stream_policy_description()}}
                            .dump() +
                        "\n";
    for (const auto& r : outcome.reports) lines += r.to_json().dump() + "\n";
    write_text(ctx.file("report.jsonl"), lines);
  }
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json files = json::array();
  for (const auto& f : outcome.files) files.push_back(f.filename().string());
  const json manifest{
      {"config", ctx.echo},
      {"execution",
       {{"out", config.out.string()}, {"check", config.check}, {"threads", default_threads()}}},
      {"versions",
       {{"coalflow", kVersion},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION}}},
      {"wall_seconds", outcome.seconds},
      {"files", files},
      {"pass", outcome.pass()}};
  write_text(config.out / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

}  // namespace coalflow

#include "spikenet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include "spikenet/coupling.hpp"
#include "spikenet/error.hpp"
#include "spikenet/finite_net.hpp"
#include "spikenet/io.hpp"
#include "spikenet/mean_field.hpp"
#include "spikenet/metrics.hpp"
#include "spikenet/parallel.hpp"
#include "spikenet/stats.hpp"

namespace spikenet {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "phase-sweep", "bound-check", "observables", "chaos-rate", "persistence",
      "oracle-crosscheck", "no-reset", "generator", "simulate"};
  return names;
}

namespace {

[[noreturn]] void config_fail(const std::string& field, const std::string& msg) {
  fail(ErrorCode::ConfigError, "config field '" + field + "': " + msg);
}

template <class T>
T get_field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(key, "has the wrong type");
  }
}

std::size_t get_count(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) config_fail(key, "must be a nonnegative integer");
  return v.get<std::size_t>();
}

double get_number(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_number()) config_fail(key, "must be a number");
  return v.get<double>();
}

std::vector<double> get_numbers(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_array()) config_fail(key, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) config_fail(key, "must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::size_t> get_counts(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_array()) config_fail(key, "must be an array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<long long>() < 1)
      config_fail(key, "must be an array of positive integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

InitLaw parse_init(const json& v) {
  if (!v.is_object()) config_fail("init", "must be an object");
  for (auto it = v.begin(); it != v.end(); ++it) {
    static const std::set<std::string> keys = {"law", "value", "mean", "lo", "hi"};
    if (!keys.count(it.key())) config_fail("init." + it.key(), "unknown key");
  }
  if (!v.contains("law") || !v["law"].is_string()) config_fail("init.law", "required string");
  const std::string law = v["law"].get<std::string>();
  auto num = [&](const char* key) {
    if (!v.contains(key) || !v[key].is_number())
      config_fail(std::string("init.") + key, "required number for law '" + law + "'");
    return v[key].get<double>();
  };
  try {
    if (law == "constant") return InitLaw::constant(num("value"));
    if (law == "exponential") return InitLaw::exponential(num("mean"));
    if (law == "uniform") return InitLaw::uniform(num("lo"), num("hi"));
  } catch (const Error& e) {
    config_fail("init", e.what());
  }
  config_fail("init.law", "must be constant, exponential or uniform");
}

json init_to_json(const InitLaw& law) {
  switch (law.kind()) {
    case InitLaw::Kind::Constant: return {{"law", "constant"}, {"value", law.a()}};
    case InitLaw::Kind::Exponential: return {{"law", "exponential"}, {"mean", law.a()}};
    case InitLaw::Kind::Uniform: return {{"law", "uniform"}, {"lo", law.a()}, {"hi", law.b()}};
  }
  return {};
}

ModelParams parse_params(const json& doc) {
  double mu = 1.0, gamma = 1.0, rho = 1.0;
  int kappa = 2;
  if (doc.contains("benchmark")) {
    if (!doc["benchmark"].is_string()) config_fail("benchmark", "must be SUB, CRIT or SUPER");
    try {
      const ModelParams b = benchmark_params(parse_benchmark(doc["benchmark"].get<std::string>()));
      mu = b.mu();
      gamma = b.gamma();
      kappa = b.kappa();
      rho = b.rho();
    } catch (const Error& e) {
      config_fail("benchmark", e.what());
    }
  } else if (!doc.contains("params")) {
    config_fail("params", "either 'params' or 'benchmark' is required");
  }
  if (doc.contains("params")) {
    const json& p = doc["params"];
    if (!p.is_object()) config_fail("params", "must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      const std::string& k = it.key();
      const std::string field = "params." + k;
      if (k == "kappa") {
        if (!it->is_number_integer()) config_fail(field, "must be an integer");
        kappa = it->get<int>();
      } else if (k == "mu" || k == "gamma" || k == "rho") {
        if (!it->is_number()) config_fail(field, "must be a number");
        (k == "mu" ? mu : k == "gamma" ? gamma : rho) = it->get<double>();
      } else {
        config_fail(field, "unknown key");
      }
    }
  }
  try {
    return ModelParams(mu, gamma, kappa, rho);
  } catch (const Error& e) {
    config_fail("params", e.what());
  }
}

bool is_scenario(const std::string& name) {
  const auto& names = scenario_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  static const std::set<std::string> known = {
      "scenario", "benchmark", "params", "init", "N", "N_list", "horizon", "dt", "replicas",
      "paths", "ensemble_paths", "particles", "eval_times", "gamma_grid", "tracked",
      "coupling_N_list", "coupling_horizon", "coupling_table_dt", "oracle_replicates", "picard_tol", "seed",
      "output_dir", "workers", "format"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) config_fail(it.key(), "unknown key");

  ExperimentConfig c;
  if (!doc.contains("scenario") || !doc["scenario"].is_string())
    config_fail("scenario", "required string");
  c.scenario = doc["scenario"].get<std::string>();
  c.params = parse_params(doc);
  if (doc.contains("benchmark") && !doc.contains("params"))
    c.benchmark = doc["benchmark"].get<std::string>();
  if (doc.contains("init")) c.init = parse_init(doc["init"]);
  if (doc.contains("N")) c.n = get_count(doc, "N");
  if (doc.contains("N_list")) c.n_list = get_counts(doc, "N_list");
  if (doc.contains("horizon")) c.horizon = get_number(doc, "horizon");
  if (doc.contains("dt")) c.dt = get_number(doc, "dt");
  if (doc.contains("replicas")) c.replicas = get_count(doc, "replicas");
  if (doc.contains("paths")) c.paths = get_count(doc, "paths");
  if (doc.contains("ensemble_paths")) c.ensemble_paths = get_count(doc, "ensemble_paths");
  if (doc.contains("particles")) c.particles = get_count(doc, "particles");
  if (doc.contains("eval_times")) c.eval_times = get_numbers(doc, "eval_times");
  if (doc.contains("gamma_grid")) c.gamma_grid = get_numbers(doc, "gamma_grid");
  if (doc.contains("tracked")) c.tracked = get_count(doc, "tracked");
  if (doc.contains("coupling_N_list")) c.coupling_n_list = get_counts(doc, "coupling_N_list");
  if (doc.contains("coupling_horizon")) c.coupling_horizon = get_number(doc, "coupling_horizon");
  if (doc.contains("coupling_table_dt")) c.coupling_table_dt = get_number(doc, "coupling_table_dt");
  if (doc.contains("oracle_replicates")) c.oracle_replicates = get_count(doc, "oracle_replicates");
  if (doc.contains("picard_tol")) c.picard_tol = get_number(doc, "picard_tol");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
      config_fail("seed", "must be a nonnegative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output_dir")) c.output_dir = get_field<std::string>(doc, "output_dir");
  if (doc.contains("workers")) c.workers = static_cast<unsigned>(get_count(doc, "workers"));
  if (doc.contains("format")) c.format = get_field<std::string>(doc, "format");
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& c) {
  if (!is_scenario(c.scenario)) fail(ErrorCode::UnknownScenario, "unknown scenario '" + c.scenario + "'");
  auto positive_count = [](std::size_t v, const char* field) {
    if (v < 1) config_fail(field, "must be >= 1");
  };
  positive_count(c.replicas, "replicas");
  positive_count(c.paths, "paths");
  positive_count(c.particles, "particles");
  positive_count(c.oracle_replicates, "oracle_replicates");
  if (!(c.picard_tol >= 0.0) || !std::isfinite(c.picard_tol))
    config_fail("picard_tol", "must be >= 0 (0 selects twice the noise floor)");
  if (c.workers < 1) config_fail("workers", "must be >= 1");
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) config_fail("horizon", "must be finite and > 0");
  if (!(c.dt > 0.0) || c.dt > c.horizon) config_fail("dt", "must be in (0, horizon]");
  if (c.format != "csv" && c.format != "jsonl") config_fail("format", "must be csv or jsonl");
  const auto min_n = static_cast<std::size_t>(c.params.kappa()) + 1;
  if (c.n < min_n) config_fail("N", "must be at least kappa + 1");
  for (std::size_t n : c.n_list)
    if (n < min_n) config_fail("N_list", "every entry must be at least kappa + 1");
  for (std::size_t n : c.coupling_n_list)
    if (n < 3) config_fail("coupling_N_list", "every entry must be at least 3");
  for (double t : c.eval_times)
    if (!(t >= 0.0 && t <= c.horizon)) config_fail("eval_times", "every time must lie in [0, horizon]");
  if (!std::is_sorted(c.eval_times.begin(), c.eval_times.end()))
    config_fail("eval_times", "must be ascending");
  for (double g : c.gamma_grid)
    if (!(g > 0.0) || !std::isfinite(g)) config_fail("gamma_grid", "entries must be finite and > 0");
  if (c.tracked > 0 && !c.coupling_n_list.empty())
    for (std::size_t n : c.coupling_n_list)
      if (c.tracked > n) config_fail("tracked", "cannot exceed the smallest coupling N");

  const std::string& s = c.scenario;
  if (s == "phase-sweep" && c.gamma_grid.empty()) config_fail("gamma_grid", "required for phase-sweep");
  if ((s == "chaos-rate" || s == "persistence") && c.n_list.size() < 2)
    config_fail("N_list", "needs at least two entries for " + s);
  if ((s == "chaos-rate" || s == "generator") && c.eval_times.empty())
    config_fail("eval_times", "required for " + s);
  if (s == "chaos-rate") {
    if (!c.coupling_n_list.empty() && c.params.kappa() != 2)
      config_fail("coupling_N_list", "the coupled system needs kappa = 2");
    if (!(c.coupling_table_dt > 0.0) || !(c.coupling_horizon > 0.0))
      config_fail("coupling_horizon", "coupling horizon and table dt must be > 0");
  }
  if (s == "generator")
    for (double t : c.eval_times)
      if (t - c.dt < 0.0 || t + c.dt > c.horizon)
        config_fail("eval_times", "generator needs t - dt >= 0 and t + dt <= horizon");
}

std::string config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["scenario"] = c.scenario;
  if (!c.benchmark.empty()) doc["benchmark"] = c.benchmark;
  doc["params"] = {{"mu", c.params.mu()}, {"gamma", c.params.gamma()},
                   {"kappa", c.params.kappa()}, {"rho", c.params.rho()}};
  doc["init"] = init_to_json(c.init);
  doc["N"] = c.n;
  doc["N_list"] = c.n_list;
  doc["horizon"] = c.horizon;
  doc["dt"] = c.dt;
  doc["replicas"] = c.replicas;
  doc["paths"] = c.paths;
  doc["ensemble_paths"] = c.ensemble_paths;
  doc["particles"] = c.particles;
  doc["eval_times"] = c.eval_times;
  doc["gamma_grid"] = c.gamma_grid;
  doc["tracked"] = c.tracked;
  doc["coupling_N_list"] = c.coupling_n_list;
  doc["coupling_horizon"] = c.coupling_horizon;
  doc["coupling_table_dt"] = c.coupling_table_dt;
  doc["oracle_replicates"] = c.oracle_replicates;
  doc["picard_tol"] = c.picard_tol;
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["workers"] = c.workers;
  doc["format"] = c.format;
  return doc.dump(2);
}

bool RunManifest::all_passed() const noexcept {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

std::string RunManifest::to_json(const ExperimentConfig& config) const {
  json doc;
  doc["artifact"] = "spikenet";
  doc["version"] = kArtifactVersion;
  doc["scenario"] = scenario;
  doc["config"] = json::parse(config_to_json(config));
  doc["summary"] = summary_json.empty() ? json::object() : json::parse(summary_json);
  json checks = json::array();
  for (const auto& a : assertions) checks.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  doc["assertions"] = checks;
  doc["passed"] = all_passed();
  doc["files"] = files;
  doc["wall_clock_seconds"] = wall_clock_seconds;
  return doc.dump(2) + "\n";
}

fs::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  const std::string leaf = config.scenario + "-" + std::to_string(config.seed);
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / leaf;
  return fs::path("spikenet-out") / leaf;
}

namespace {

// Result files go to a sibling staging directory; `promote` swaps it in.
class Staging {
 public:
  explicit Staging(fs::path target) : target_(std::move(target)) {
    static std::atomic<unsigned> counter{0};
    const std::string tag = ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
    std::error_code ec;
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path(), ec);
    dir_ = target_;
    dir_ += tag;
    fs::remove_all(dir_, ec);
    if (!fs::create_directories(dir_, ec) || ec)
      fail(ErrorCode::IoError, "cannot create staging directory " + dir_.string());
  }
  ~Staging() {
    if (!promoted_) {
      std::error_code ec;
      fs::remove_all(dir_, ec);
    }
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic(dir_ / name, contents);
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const noexcept { return files_; }

  void promote() {
    std::error_code ec;
    fs::path old;
    if (fs::exists(target_)) {
      old = target_;
      old += ".old-" + std::to_string(::getpid());
      fs::remove_all(old, ec);
      fs::rename(target_, old, ec);
      if (ec) fail(ErrorCode::IoError, "cannot move aside " + target_.string() + ": " + ec.message());
    }
    fs::rename(dir_, target_, ec);
    if (ec) fail(ErrorCode::IoError, "cannot promote outputs to " + target_.string() + ": " + ec.message());
    promoted_ = true;
    if (!old.empty()) fs::remove_all(old, ec);
  }

 private:
  fs::path target_;
  fs::path dir_;
  std::vector<std::string> files_;
  bool promoted_ = false;
};

std::string d(double v) { return fmt_double(v); }

struct Context {
  const ExperimentConfig& cfg;
  Staging& out;
  json summary = json::object();
  std::vector<Assertion> checks;
  RngStream rng;

  void check(std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }
};

double json_safe(double v) { return std::isfinite(v) ? v : (v > 0 ? 1e308 : -1e308); }

std::vector<double> default_grid(double horizon, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k)
    g[k] = horizon * static_cast<double>(k) / static_cast<double>(points - 1);
  return g;
}

std::size_t node_index(const EnsembleCurves& c, double t) {
  const auto it = std::lower_bound(c.times.begin(), c.times.end(), t - 1e-9);
  if (it == c.times.end()) return c.times.size() - 1;
  return static_cast<std::size_t>(it - c.times.begin());
}

PicardOptions picard_options(const ExperimentConfig& cfg) {
  PicardOptions o;
  o.paths = cfg.paths;
  o.tol = cfg.picard_tol;
  o.ensemble_paths = cfg.ensemble_paths;
  o.workers = cfg.workers;
  return o;
}

// phase-sweep: mean-field regime over a gamma grid. Subcritical points
// must lose activity, supercritical ones keep it bounded away from 0.
void run_phase_sweep(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::ostringstream csv;
  csv << "gamma,theta,theta_c,regime,r0,r_final,r_min,R_final,h_final,h_limit,picard_iters,residual,tol\n";
  json points = json::array();
  for (std::size_t k = 0; k < cfg.gamma_grid.size(); ++k) {
    const ModelParams p = cfg.params.with_gamma(cfg.gamma_grid[k]);
    const Regime regime = classify_regime(p);
    const MeanFieldSolution sol =
        picard_solve(p, cfg.init, cfg.horizon, cfg.dt, ctx.rng.child(k), picard_options(cfg));
    const auto r = sol.rate.values();
    const double r0 = r.front(), rT = r.back();
    const double rmin = *std::min_element(r.begin(), r.end());
    const double RT = sol.rate.cumulative(sol.rate.t_end());
    const double hT = sol.curves.h.back();
    const double hlim = std::min(1.0, 1.0 / p.theta());
    csv << d(p.gamma()) << ',' << d(p.theta()) << ',' << d(p.theta_c()) << ','
        << regime_name(regime.tag) << ',' << d(r0) << ',' << d(rT) << ',' << d(rmin) << ','
        << d(RT) << ',' << d(hT) << ',' << d(hlim) << ',' << sol.picard_iters << ','
        << d(sol.residual) << ',' << d(sol.tol) << '\n';
    points.push_back({{"gamma", p.gamma()}, {"theta", p.theta()}, {"regime", regime_name(regime.tag)},
                      {"r_final", rT}, {"r_min", rmin}, {"R_final", RT}});
    const std::string tag = "gamma=" + d(p.gamma());
    ctx.check(tag + " converged", sol.residual <= sol.tol,
              "residual " + d(sol.residual) + " tol " + d(sol.tol));
    if (regime.tag == RegimeTag::Subcritical)
      ctx.check(tag + " activity decays", rT < r0, "r_T " + d(rT) + " r_0 " + d(r0));
    else if (regime.tag == RegimeTag::Supercritical)
      ctx.check(tag + " activity persists", rmin > 0.0, "min r " + d(rmin));
  }
  ctx.out.write("sweep.csv", csv.str());
  ctx.summary["points"] = points;
}

// bound-check: omega envelope for one network neuron and for the
// mean-field process. The envelope only holds for theta < 1.
void run_bound_check(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  const std::vector<double> times = cfg.eval_times.empty() ? default_grid(cfg.horizon, 6) : cfg.eval_times;
  const double omega0 = 1.0 - cfg.init.laplace(p.gamma_over_mu());
  const bool applies = p.theta() < 1.0;
  auto envelope = [&](double t) { return omega0 * std::exp(-(1.0 - p.theta()) * p.mu() * t); };

  std::vector<std::vector<double>> per(times.size(), std::vector<double>(cfg.replicas));
  const RngStream net_rng = ctx.rng.child(1);
  parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
    RngStream init_rng = net_rng.child(r, stream_id::kInit);
    RngStream dyn = net_rng.child(r, stream_id::kDynamics);
    const auto x0 = sample_initial_potentials(cfg.init, cfg.n, init_rng);
    SimulationOptions so;
    so.record_events = false;
    const Trajectory tr = simulate_embedded(p, x0, cfg.horizon, times, dyn, so);
    for (std::size_t k = 0; k < times.size(); ++k)
      per[k][r] = omega_distance(tr.snapshots[k].potentials[0], 0.0, p);
  });

  PicardOptions po = picard_options(cfg);
  const MeanFieldSolution sol = picard_solve(p, cfg.init, cfg.horizon, cfg.dt, ctx.rng.child(2), po);

  std::ostringstream csv;
  csv << "source,t,omega_mean,se,bound,holds\n";
  bool net_ok = true, mf_ok = true;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Estimate e = mean_estimate(per[k]);
    const bool ok = e.value <= envelope(times[k]) + 3.0 * e.se;
    net_ok &= ok;
    csv << "network," << d(times[k]) << ',' << d(e.value) << ',' << d(e.se) << ','
        << d(envelope(times[k])) << ',' << (ok ? 1 : 0) << '\n';
  }
  for (double t : times) {
    const std::size_t j = node_index(sol.curves, t);
    const double w = 1.0 - sol.curves.h[j];
    const double se = sol.curves.h_se[j];
    const bool ok = w <= envelope(t) + 3.0 * se;
    mf_ok &= ok;
    csv << "mean-field," << d(t) << ',' << d(w) << ',' << d(se) << ',' << d(envelope(t)) << ','
        << (ok ? 1 : 0) << '\n';
  }
  ctx.out.write("bound.csv", csv.str());
  ctx.summary["theta"] = p.theta();
  ctx.summary["envelope_applies"] = applies;
  if (applies) {
    ctx.check("network omega envelope", net_ok, "mean <= envelope + 3 SE at every time");
    ctx.check("mean-field omega envelope", mf_ok, "mean <= envelope + 3 SE at every time");
  }
}

// Snapshot triples (t - dt, t, t + dt) around the interior eval times.
std::vector<double> moment_snapshot_times(const ExperimentConfig& cfg) {
  std::vector<double> out;
  for (double t : cfg.eval_times)
    if (t - cfg.dt > -1e-12 && t + cfg.dt <= cfg.horizon + 1e-12) {
      out.push_back(t - cfg.dt);
      out.push_back(t);
      out.push_back(t + cfg.dt);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
            out.end());
  return out;
}

const EnsembleSnapshot& snapshot_at(const std::vector<EnsembleSnapshot>& snaps, double t) {
  for (const auto& s : snaps)
    if (std::abs(s.time - t) < 1e-6) return s;
  fail(ErrorCode::OutOfDomain, "no snapshot at t=" + fmt_double(t));
}

// observables: closed-form h_t and p_t against the Picard ensemble, the
// moment identity at the eval times and the explicit moment bounds.
void run_observables(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  PicardOptions po = picard_options(cfg);
  po.snapshot_times = moment_snapshot_times(cfg);
  po.table_times = cfg.eval_times;
  const MeanFieldSolution sol = picard_solve(p, cfg.init, cfg.horizon, cfg.dt, ctx.rng, po);

  std::ostringstream rate_csv, obs_csv;
  sol.rate.write_csv(rate_csv);
  write_observables_csv(obs_csv, sol);
  ctx.out.write("rate.csv", rate_csv.str());
  ctx.out.write("observables.csv", obs_csv.str());
  if (!sol.table.empty()) {
    std::ostringstream q;
    sol.table.write(q);
    ctx.out.write("quantiles.csv", q.str());
  }

  const ObservableCurve hc = h_curve_closed_form(p, sol.rate, cfg.init.laplace(p.gamma_over_mu()));
  const ObservableCurve pc = resting_fraction_closed_form(p, sol.rate, cfg.init.p_zero());
  double dh = 0.0, dp = 0.0;
  for (std::size_t k = 0; k < sol.curves.nodes(); ++k) {
    dh = std::max(dh, std::abs(sol.curves.h[k] - hc.values[k]));
    dp = std::max(dp, std::abs(sol.curves.p[k] - pc.values[k]));
  }
  const double p_final = sol.curves.p.back();
  const double target = 1.0 / p.kappa();
  ctx.check("picard converged", sol.residual <= sol.tol,
            "residual " + d(sol.residual) + " tol " + d(sol.tol));
  ctx.check("h closed form", dh <= 0.02, "max |h_mc - h_closed| = " + d(dh));
  ctx.check("p closed form", dp <= 0.02, "max |p_mc - p_closed| = " + d(dp));
  if (p.theta() > 1.0 && std::abs(pc.values.back() - target) <= 0.01)
    ctx.check("resting fraction limit", std::abs(p_final - target) <= 0.02,
              "p(T) = " + d(p_final) + " vs 1/kappa");

  const MomentBounds mb = moment_bounds(p, cfg.init);
  const double sup_m3 = *std::max_element(sol.curves.m3.begin(), sol.curves.m3.end());
  ctx.check("m3 below explicit bound", sup_m3 < mb.c3, "sup m3 " + d(sup_m3) + " c3 " + d(mb.c3));

  std::ostringstream mom;
  mom << "t,r,residual,ci_half,contains_zero\n";
  for (double t : cfg.eval_times) {
    if (!(t - cfg.dt > -1e-12 && t + cfg.dt <= cfg.horizon + 1e-12)) continue;
    const auto& b = snapshot_at(sol.snapshots, t - cfg.dt);
    const auto& a = snapshot_at(sol.snapshots, t);
    const auto& f = snapshot_at(sol.snapshots, t + cfg.dt);
    for (int r = 1; r <= 3; ++r) {
      const Estimate e = moment_residual(p, b, a, f, r);
      const bool z = e.contains(0.0);
      mom << d(t) << ',' << r << ',' << d(e.value) << ',' << d(e.ci_half) << ',' << (z ? 1 : 0) << '\n';
      if (r == 1) ctx.check("moment identity r=1 at t=" + d(t), z, "residual " + d(e.value) + " +- " + d(e.ci_half));
    }
  }
  if (!cfg.eval_times.empty()) ctx.out.write("moments.csv", mom.str());

  ctx.summary["picard_iters"] = sol.picard_iters;
  ctx.summary["residual"] = sol.residual;
  ctx.summary["tol"] = sol.tol;
  ctx.summary["max_abs_dh"] = dh;
  ctx.summary["max_abs_dp"] = dp;
  ctx.summary["p_final"] = p_final;
  ctx.summary["r_min"] = *std::min_element(sol.rate.values().begin(), sol.rate.values().end());
  ctx.summary["sup_m3"] = sup_m3;
  ctx.summary["moment_bounds"] = {{"c1", mb.c1}, {"c2", mb.c2}, {"c3", mb.c3}};
}

// chaos-rate: E[W1] between the empirical network law and the mean-field
// table at each (N, t), plus the coupled-system pair distance.
void run_chaos_rate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  PicardOptions po = picard_options(cfg);
  po.table_times = cfg.eval_times;
  const MeanFieldSolution sol = picard_solve(p, cfg.init, cfg.horizon, cfg.dt, ctx.rng.child(1), po);
  ChaosOptions co;
  co.replicas = cfg.replicas;
  co.workers = cfg.workers;
  const auto rows = chaos_error_curve(p, cfg.n_list, cfg.eval_times, cfg.init, sol.table, ctx.rng.child(2), co);
  std::ostringstream csv;
  write_chaos_csv(csv, rows);
  ctx.out.write("chaos.csv", csv.str());

  json slopes = json::array();
  for (double t : cfg.eval_times) {
    std::vector<double> ns, ws, ses;
    for (const auto& row : rows)
      if (std::abs(row.t - t) < 1e-9) {
        ns.push_back(static_cast<double>(row.n));
        ws.push_back(row.w1.value);
        ses.push_back(row.w1.se);
      }
    bool decreasing = true;
    for (std::size_t k = 1; k < ws.size(); ++k) decreasing &= ws[k] < ws[k - 1];
    ctx.check("W1 decreasing in N at t=" + d(t), decreasing, "means over N_list");
    if (ns.size() >= 3 && std::all_of(ws.begin(), ws.end(), [](double w) { return w > 0.0; })) {
      const FitResult f = fit_log_scaling(ns, ws, FitMode::LogLog);
      slopes.push_back({{"t", t}, {"slope", f.slope}, {"slope_ci_half", f.slope_ci_half}});
    }
  }
  ctx.summary["loglog_slopes"] = slopes;
  ctx.summary["table_M"] = sol.table.min_row_size();

  std::vector<std::size_t> cn = cfg.coupling_n_list;
  if (cn.empty() && p.kappa() == 2) cn = cfg.n_list;
  if (cn.empty()) return;
  const double ch = cfg.coupling_horizon;
  const auto steps = static_cast<std::size_t>(std::llround(ch / cfg.coupling_table_dt));
  const std::vector<double> grid = default_grid(ch, steps + 1);
  PicardOptions cpo = picard_options(cfg);
  cpo.ensemble_paths = 0;
  cpo.table_times = grid;
  const MeanFieldSolution csol = picard_solve(p, cfg.init, ch, cfg.dt, ctx.rng.child(3), cpo);
  CoupledOptions opt;
  opt.replicas = cfg.replicas;
  opt.eval_times = grid;
  opt.workers = cfg.workers;
  std::vector<CouplingCurve> curves;
  for (std::size_t k = 0; k < cn.size(); ++k) {
    const std::size_t tracked = cfg.tracked == 0 ? cn[k] : cfg.tracked;
    curves.push_back(simulate_coupled_system(p, cn[k], cfg.init, csol.table, ch, tracked,
                                             ctx.rng.child(4).child(k), opt));
  }
  std::ostringstream cc;
  write_coupling_csv(cc, curves);
  ctx.out.write("coupling.csv", cc.str());
  bool zero = true, decreasing = true;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    zero &= curves[k].h_hat.front() == 0.0;
    if (k > 0) decreasing &= curves[k].h_hat.back() < curves[k - 1].h_hat.back();
  }
  ctx.check("coupling starts at distance 0", zero, "h_hat(0) over coupling_N_list");
  ctx.check("coupling distance decreasing in N", decreasing, "h_hat at the coupling horizon");
}

// persistence: median last-firing time against ln N.
void run_persistence(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  std::ostringstream deaths, table;
  deaths << "N,replica,death_time,censored\n";
  table << "N,median,ci_lo,ci_hi,censored\n";
  std::vector<double> ns, meds;
  bool finite = true;
  for (std::size_t k = 0; k < cfg.n_list.size(); ++k) {
    const std::size_t n = cfg.n_list[k];
    const auto s = death_time_samples(p, n, cfg.init, cfg.horizon, cfg.replicas, ctx.rng.child(k), cfg.workers);
    std::vector<double> times(s.size());
    std::size_t censored = 0;
    for (std::size_t r = 0; r < s.size(); ++r) {
      times[r] = s[r].time;
      censored += s[r].censored ? 1 : 0;
      deaths << n << ',' << r << ',' << d(s[r].time) << ',' << (s[r].censored ? 1 : 0) << '\n';
    }
    const Estimate m = median_estimate(times);
    table << n << ',' << d(m.value) << ',' << d(m.lo()) << ',' << d(m.hi()) << ',' << censored << '\n';
    ns.push_back(static_cast<double>(n));
    meds.push_back(m.value);
    finite &= std::isfinite(m.value);
  }
  ctx.out.write("deaths.csv", deaths.str());
  ctx.out.write("persistence.csv", table.str());
  const Regime regime = classify_regime(p);
  ctx.summary["regime"] = regime_name(regime.tag);
  json med = json::array();
  for (double m : meds) med.push_back(json_safe(m));
  ctx.summary["medians"] = med;
  if (!finite) {
    ctx.summary["slope"] = nullptr;
    if (regime.tag != RegimeTag::Critical)
      ctx.check("log-N slope of the median death time", false,
                "a median is censored at the horizon cap, so no slope can be fitted");
    return;
  }
  bool increasing = true;
  for (std::size_t k = 1; k < meds.size(); ++k) increasing &= meds[k] > meds[k - 1];
  std::optional<FitResult> fit;
  if (ns.size() >= 3) fit = fit_log_scaling(ns, meds, FitMode::LogX);
  if (fit) {
    ctx.summary["slope"] = fit->slope;
    ctx.summary["slope_ci_half"] = fit->slope_ci_half;
  }
  const std::string detail =
      fit ? "slope " + d(fit->slope) + " CI [" + d(fit->slope_lo()) + ", " + d(fit->slope_hi()) + "]"
          : "fewer than 3 N values";
  if (regime.tag == RegimeTag::Supercritical) {
    ctx.check("median death time increasing in N", increasing, "medians over N_list");
    ctx.check("positive log-N slope", fit && fit->slope_lo() > 0.0, detail);
  } else if (regime.tag == RegimeTag::Subcritical) {
    ctx.check("log-N slope CI contains 0", fit && fit->slope_lo() <= 0.0 && 0.0 <= fit->slope_hi(), detail);
  }
}

std::vector<double> norms_at_horizon(const ModelParams& p, const ExperimentConfig& cfg, const RngStream& base,
                                     bool thinning, std::vector<double>* first) {
  std::vector<double> norm(cfg.replicas);
  if (first) first->assign(cfg.replicas, 0.0);
  parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
    RngStream init_rng = base.child(r, stream_id::kInit);
    RngStream dyn = base.child(r, stream_id::kDynamics);
    const auto x0 = sample_initial_potentials(cfg.init, cfg.n, init_rng);
    SimulationOptions so;
    so.record_events = false;
    so.store_snapshots = false;
    const Trajectory tr = thinning ? simulate_thinning(p, x0, cfg.horizon, {}, dyn, so)
                                   : simulate_embedded(p, x0, cfg.horizon, {}, dyn, so);
    norm[r] = tr.final_state.total();
    if (first) (*first)[r] = tr.final_state.potentials[0];
  });
  return norm;
}

// oracle-crosscheck: embedded chain vs thinning at the horizon, then the
// Picard rate vs the self-consistent particle system over replicate runs.
void run_oracle_crosscheck(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  std::vector<double> e1, t1;
  const auto en = norms_at_horizon(p, cfg, ctx.rng.child(1), false, &e1);
  const auto tn = norms_at_horizon(p, cfg, ctx.rng.child(2), true, &t1);
  std::ostringstream ks;
  ks << "quantity,statistic,p_value,embedded_mean,thinning_mean\n";
  double norm_p = 1.0;
  if (cfg.replicas >= 25) {
    const KsResult a = ks_two_sample(EmpiricalDistribution(en), EmpiricalDistribution(tn));
    const KsResult b = ks_two_sample(EmpiricalDistribution(e1), EmpiricalDistribution(t1));
    norm_p = a.p_value;
    ks << "norm," << d(a.statistic) << ',' << d(a.p_value) << ',' << d(mean_estimate(en).value) << ','
       << d(mean_estimate(tn).value) << '\n';
    ks << "first," << d(b.statistic) << ',' << d(b.p_value) << ',' << d(mean_estimate(e1).value) << ','
       << d(mean_estimate(t1).value) << '\n';
    ctx.check("embedded vs thinning KS on the norm", a.p_value >= 0.01, "p = " + d(a.p_value));
    ctx.summary["ks_norm_p"] = a.p_value;
    ctx.summary["ks_first_p"] = b.p_value;
  }
  ctx.out.write("ks.csv", ks.str());
  (void)norm_p;

  const std::size_t B = cfg.oracle_replicates;
  std::vector<std::vector<double>> rp(B), rs(B);
  std::vector<double> se_p, se_s;
  for (std::size_t b = 0; b < B; ++b) {
    const MeanFieldSolution sol = picard_solve(p, cfg.init, cfg.horizon, cfg.dt, ctx.rng.child(3).child(b), picard_options(cfg));
    const SelfConsistentResult sc = simulate_self_consistent(p, cfg.particles, cfg.init, cfg.horizon, cfg.dt,
                                                              ctx.rng.child(4).child(b), {}, cfg.workers);
    rp[b].assign(sol.rate.values().begin(), sol.rate.values().end());
    rs[b] = sc.curves.m1;
    if (b == 0) {
      se_p = sol.curves.m1_se;
      se_s = sc.curves.m1_se;
    }
  }
  const auto cmp = compare_replicated_rates(rp, rs, se_p, se_s, cfg.dt);
  std::ostringstream rc;
  rc << "t,r_picard,r_sc,diff,combined_se,allowed\n";
  bool ok = true;
  double worst = 0.0;
  for (std::size_t k = 0; k < cmp.diff.size(); ++k) {
    const double allowed = std::max(0.02, 4.0 * cmp.combined_se[k]);
    ok &= cmp.diff[k] <= allowed;
    worst = std::max(worst, cmp.diff[k] / allowed);
    rc << d(cfg.dt * static_cast<double>(k)) << ',' << d(cmp.mean_a[k]) << ',' << d(cmp.mean_b[k]) << ','
       << d(cmp.diff[k]) << ',' << d(cmp.combined_se[k]) << ',' << d(allowed) << '\n';
  }
  ctx.out.write("rate_compare.csv", rc.str());
  ctx.check("picard vs self-consistent rate", ok, "worst diff / allowed = " + d(worst));
  ctx.summary["rate_worst_ratio"] = worst;
  ctx.summary["oracle_replicates"] = B;
}

// no-reset: fitted exponential growth of the mean norm against
// rho*kappa*gamma - mu.
void run_no_reset(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  const std::vector<double> times = cfg.eval_times.empty() ? default_grid(cfg.horizon, 13) : cfg.eval_times;
  std::vector<std::vector<double>> norms(times.size(), std::vector<double>(cfg.replicas));
  parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
    RngStream init_rng = ctx.rng.child(r, stream_id::kInit);
    RngStream dyn = ctx.rng.child(r, stream_id::kDynamics);
    const auto x0 = sample_initial_potentials(cfg.init, cfg.n, init_rng);
    SimulationOptions so;
    so.record_events = false;
    const Trajectory tr = simulate_no_reset(p, x0, cfg.horizon, times, dyn, so);
    for (std::size_t k = 0; k < times.size(); ++k) norms[k][r] = tr.snapshots[k].total();
  });
  const double expected = p.rho() * p.kappa() * p.gamma() - p.mu();
  const double y0 = static_cast<double>(cfg.n) * cfg.init.mean();
  std::ostringstream csv;
  csv << "t,mean_norm,se,expected\n";
  std::vector<double> means, ses;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Estimate e = mean_estimate(norms[k]);
    means.push_back(e.value);
    ses.push_back(e.se);
    csv << d(times[k]) << ',' << d(e.value) << ',' << d(e.se) << ',' << d(y0 * std::exp(expected * times[k])) << '\n';
  }
  ctx.out.write("growth.csv", csv.str());
  const FitResult f = fit_log_scaling(times, means, FitMode::LogY);
  const double allowed = 0.05 * std::max(std::abs(expected), 1e-12);
  ctx.summary["fitted_rate"] = f.slope;
  ctx.summary["expected_rate"] = expected;
  ctx.check("no-reset growth rate", std::abs(f.slope - expected) <= allowed,
            "fitted " + d(f.slope) + " expected " + d(expected));
}

// generator: finite-difference drift of two test functions at eval times.
void run_generator(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  std::vector<double> obs;
  for (double t : cfg.eval_times) {
    obs.push_back(t - cfg.dt);
    obs.push_back(t);
    obs.push_back(t + cfg.dt);
  }
  const std::size_t m = obs.size();
  std::vector<std::vector<std::vector<double>>> states(m, std::vector<std::vector<double>>(cfg.replicas));
  parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
    RngStream init_rng = ctx.rng.child(r, stream_id::kInit);
    RngStream dyn = ctx.rng.child(r, stream_id::kDynamics);
    const auto x0 = sample_initial_potentials(cfg.init, cfg.n, init_rng);
    SimulationOptions so;
    so.record_events = false;
    std::vector<double> sorted = obs;
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return obs[a] < obs[b]; });
    for (std::size_t k = 0; k < m; ++k) sorted[k] = obs[order[k]];
    const Trajectory tr = simulate_embedded(p, x0, cfg.horizon, sorted, dyn, so);
    for (std::size_t k = 0; k < m; ++k) states[order[k]][r] = tr.snapshots[k].potentials;
  });
  std::ostringstream csv;
  csv << "phi,t,residual,ci_half,contains_zero\n";
  for (std::size_t j = 0; j < cfg.eval_times.size(); ++j) {
    for (auto [phi, name] : {std::pair{TestFunction::Sum, "sum"}, std::pair{TestFunction::ExpNegFirst, "exp_neg_first"}}) {
      const ResidualEstimate e =
          generator_residual(p, states[3 * j], states[3 * j + 1], states[3 * j + 2], phi, cfg.dt);
      const bool z = e.ci_contains_zero();
      csv << name << ',' << d(cfg.eval_times[j]) << ',' << d(e.value) << ',' << d(e.ci_half) << ',' << (z ? 1 : 0) << '\n';
      ctx.check(std::string("generator residual ") + name + " at t=" + d(cfg.eval_times[j]), z,
                "residual " + d(e.value) + " +- " + d(e.ci_half));
    }
  }
  ctx.out.write("generator.csv", csv.str());
}

// simulate: raw replicas with event logs and state snapshots.
void run_simulate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams& p = cfg.params;
  std::vector<Trajectory> runs(cfg.replicas);
  parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
    RngStream init_rng = ctx.rng.child(r, stream_id::kInit);
    RngStream dyn = ctx.rng.child(r, stream_id::kDynamics);
    const auto x0 = sample_initial_potentials(cfg.init, cfg.n, init_rng);
    runs[r] = simulate_embedded(p, x0, cfg.horizon, cfg.eval_times, dyn);
  });
  const bool jsonl = cfg.format == "jsonl";
  std::ostringstream ev, snap, sum;
  if (!jsonl) ev << "replica,k,t,firer,excited\n";
  if (!jsonl) snap << "replica,t,neuron,x\n";
  sum << "replica,firings,death_time,censored,final_total\n";
  std::uint64_t total = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const Trajectory& tr = runs[r];
    for (const auto& e : tr.events) {
      if (jsonl) {
        ev << "{\"replica\":" << r << ",\"k\":" << e.k << ",\"t\":" << d(e.time) << ",\"firer\":" << e.firer
           << ",\"excited\":[";
        for (std::size_t j = 0; j < e.excited.size(); ++j) ev << (j ? "," : "") << e.excited[j];
        ev << "]}\n";
      } else {
        ev << r << ',' << e.k << ',' << d(e.time) << ',' << e.firer << ',';
        for (std::size_t j = 0; j < e.excited.size(); ++j) ev << (j ? ";" : "") << e.excited[j];
        ev << '\n';
      }
    }
    for (const auto& s : tr.snapshots) {
      if (jsonl) {
        snap << "{\"replica\":" << r << ",\"t\":" << d(s.time) << ",\"x\":[";
        for (std::size_t i = 0; i < s.potentials.size(); ++i) snap << (i ? "," : "") << d(s.potentials[i]);
        snap << "]}\n";
      } else {
        for (std::size_t i = 0; i < s.potentials.size(); ++i)
          snap << r << ',' << d(s.time) << ',' << i << ',' << d(s.potentials[i]) << '\n';
      }
    }
    sum << r << ',' << tr.firings << ',' << d(tr.death_time) << ',' << (tr.censored() ? 1 : 0) << ','
        << d(tr.final_state.total()) << '\n';
    total += tr.firings;
  }
  ctx.out.write(jsonl ? "events.jsonl" : "events.csv", ev.str());
  if (!cfg.eval_times.empty()) ctx.out.write(jsonl ? "snapshots.jsonl" : "snapshots.csv", snap.str());
  ctx.out.write("runs.csv", sum.str());
  ctx.summary["firings"] = total;
}

}  // namespace

RunManifest run_scenario(const ExperimentConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.scenario = config.scenario;
  m.output_dir = resolve_output_dir(config);
  Staging stage(m.output_dir);
  Context ctx{config, stage, json::object(), {}, RngStream(config.seed)};
  const std::string& s = config.scenario;
  if (s == "phase-sweep") run_phase_sweep(ctx);
  else if (s == "bound-check") run_bound_check(ctx);
  else if (s == "observables") run_observables(ctx);
  else if (s == "chaos-rate") run_chaos_rate(ctx);
  else if (s == "persistence") run_persistence(ctx);
  else if (s == "oracle-crosscheck") run_oracle_crosscheck(ctx);
  else if (s == "no-reset") run_no_reset(ctx);
  else if (s == "generator") run_generator(ctx);
  else if (s == "simulate") run_simulate(ctx);
  else fail(ErrorCode::UnknownScenario, "unknown scenario '" + s + "'");
  m.assertions = std::move(ctx.checks);
  m.summary_json = ctx.summary.dump();
  m.files = stage.files();
  m.files.push_back("manifest.json");
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  stage.write("manifest.json", m.to_json(config));
  stage.promote();
  return m;
}

}  // namespace spikenet

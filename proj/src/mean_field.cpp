#include "spikenet/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "spikenet/error.hpp"
#include "spikenet/io.hpp"
#include "spikenet/parallel.hpp"

namespace spikenet {

namespace {

// Paths are reduced in fixed-size chunks so sums never depend on workers.
constexpr std::size_t kChunk = 256;
constexpr std::uint64_t kFireStream = 1;
constexpr std::uint64_t kExciteStream = 2;

struct NodeStats {
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0, sh = 0, sh2 = 0, zeros = 0;

  void push(double z, double c) noexcept {
    const double z2 = z * z;
    s1 += z;
    s2 += z2;
    s3 += z2 * z;
    s4 += z2 * z2;
    const double e = std::exp(-c * z);
    sh += e;
    sh2 += e * e;
    zeros += z == 0.0;
  }
  void merge(const NodeStats& o) noexcept {
    s1 += o.s1;
    s2 += o.s2;
    s3 += o.s3;
    s4 += o.s4;
    sh += o.sh;
    sh2 += o.sh2;
    zeros += o.zeros;
  }
};

double se_of(double sum, double sum_sq, double n) {
  if (n < 2) return 0.0;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
  return std::sqrt(var / n);
}

void append_node(EnsembleCurves& c, double t, const NodeStats& s, double n) {
  c.times.push_back(t);
  c.m1.push_back(s.s1 / n);
  c.m1_se.push_back(se_of(s.s1, s.s2, n));
  c.m2.push_back(s.s2 / n);
  c.m3.push_back(s.s3 / n);
  c.m4.push_back(s.s4 / n);
  c.h.push_back(s.sh / n);
  c.h_se.push_back(se_of(s.sh, s.sh2, n));
  const double p = s.zeros / n;
  c.p.push_back(p);
  c.p_se.push_back(n > 1 ? std::sqrt(p * (1 - p) / n) : 0.0);
}

// One linearized path across the nodes t_a + j*dt, j < nodes. `rec(j, z)`
// sees the right-continuous state at each node. Returns the state at the
// last node.
template <class Rec>
double run_path(const ModelParams& params, const RateCurve& curve, double z, double t_a,
                std::size_t nodes, double dt, double decay_dt, RngStream& fire, RngStream& excite,
                bool firing, Rec&& rec) {
  const double mu = params.mu();
  const double gk = params.gamma() * params.kappa();
  auto next_excitation = [&](double from) {
    const double xi = excite.exponential();
    if (auto t = curve.time_at_increment(from, xi / gk)) return *t;
    return kInf;
  };
  auto next_firing = [&](double from, double level) {
    return firing ? from + firing_wait_from_exponential(level, params, fire.exponential()) : kInf;
  };
  double t = t_a;
  double tf = z > 0.0 ? next_firing(t, z) : kInf;
  double te = next_excitation(t);
  std::size_t j = 0;
  for (;;) {
    const double next = std::min(tf, te);
    // Nodes before the next event, by closed-form decay.
    if (j < nodes) {
      double tj = t_a + dt * static_cast<double>(j);
      if (tj < next) {
        double v = z * std::exp(-mu * (tj - t));
        for (;;) {
          rec(j, v);
          if (++j == nodes) break;
          tj = t_a + dt * static_cast<double>(j);
          if (!(tj < next)) break;
          v *= decay_dt;
        }
      }
    }
    if (j == nodes) break;
    z *= std::exp(-mu * (next - t));
    t = next;
    if (tf <= te) {
      z = 0.0;
      tf = kInf;
    } else {
      z += params.rho();
      te = next_excitation(t);
      tf = next_firing(t, z);
    }
  }
  const double t_b = t_a + dt * static_cast<double>(nodes - 1);
  return z * std::exp(-mu * (t_b - t));
}

struct Capture {
  // slot per local node, -1 when the node is not captured.
  std::vector<int> slot;
  std::vector<std::vector<double>>* out = nullptr;
};

// All paths across one window. Node j = 0 is skipped in the statistics
// when `skip_first` (it closed the previous window).
void run_window(const ModelParams& params, const RateCurve& curve, std::uint64_t window_id,
                double t_a, std::size_t nodes, double dt, std::span<const double> z_start,
                std::span<double> z_end, const RngStream& rng, bool firing, bool skip_first,
                const Capture& capture, std::vector<NodeStats>& stats, unsigned workers) {
  const std::size_t paths = z_start.size();
  const std::size_t chunks = (paths + kChunk - 1) / kChunk;
  const double c = params.gamma_over_mu();
  const double decay_dt = std::exp(-params.mu() * dt);
  std::vector<std::vector<NodeStats>> partial(chunks);
  parallel_for(chunks, workers, [&](std::size_t ch) {
    auto& local = partial[ch];
    local.assign(nodes, NodeStats{});
    const std::size_t hi = std::min(paths, (ch + 1) * kChunk);
    for (std::size_t i = ch * kChunk; i < hi; ++i) {
      const RngStream base = rng.child(i, stream_id::kDynamics).child(window_id);
      RngStream fire = base.child(kFireStream);
      RngStream excite = base.child(kExciteStream);
      z_end[i] = run_path(params, curve, z_start[i], t_a, nodes, dt, decay_dt, fire, excite, firing,
                          [&](std::size_t j, double v) {
                            if (j == 0 && skip_first) return;
                            local[j].push(v, c);
                            if (capture.out && capture.slot[j] >= 0)
                              (*capture.out)[static_cast<std::size_t>(capture.slot[j])][i] = v;
                          });
    }
  });
  stats.assign(nodes, NodeStats{});
  for (const auto& local : partial)
    for (std::size_t j = 0; j < nodes; ++j) stats[j].merge(local[j]);
}

std::size_t grid_steps(double horizon, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "dt must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    fail(ErrorCode::InvalidArgument, "horizon must be finite and > 0");
  const double k = std::round(horizon / dt);
  if (std::abs(k * dt - horizon) > 1e-9 * horizon)
    fail(ErrorCode::InvalidArgument, "horizon must be a whole number of grid steps");
  return static_cast<std::size_t>(k);
}

// Grid node of t; OutOfDomain outside [0, K].
std::size_t node_of(double t, double t0, double dt, std::size_t last) {
  const double pos = (t - t0) / dt;
  const double k = std::round(pos);
  if (!(k >= 0.0) || k > static_cast<double>(last) || std::abs(pos - k) > 1e-6)
    fail(ErrorCode::OutOfDomain, "time " + fmt_double(t) + " is not a grid node of the run");
  return static_cast<std::size_t>(k);
}

// Requested snapshot/table times mapped to grid nodes. Each distinct node
// owns one capture buffer.
struct CapturePlan {
  std::vector<std::size_t> nodes;  // distinct, ascending
  std::vector<std::size_t> snapshot_refs;
  std::vector<std::size_t> table_refs;
  std::vector<std::vector<double>> buffers;

  CapturePlan(const std::vector<double>& snaps, const std::vector<double>& tables, double t0,
              double dt, std::size_t last, std::size_t paths) {
    std::vector<std::size_t> s, t;
    for (double v : snaps) s.push_back(node_of(v, t0, dt, last));
    for (double v : tables) t.push_back(node_of(v, t0, dt, last));
    nodes = s;
    nodes.insert(nodes.end(), t.begin(), t.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    auto ref = [&](std::size_t k) {
      return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), k) - nodes.begin());
    };
    for (auto k : s) snapshot_refs.push_back(ref(k));
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    for (auto k : t) table_refs.push_back(ref(k));
    buffers.assign(nodes.size(), std::vector<double>(paths, 0.0));
  }

  // Local view for the window whose first node is k_a; node k_a itself
  // belongs to the window only when `owns_first`.
  Capture window(std::size_t k_a, std::size_t count, bool owns_first) {
    Capture c;
    c.slot.assign(count, -1);
    c.out = &buffers;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const std::size_t k = nodes[q];
      if (k >= k_a && k < k_a + count && (k > k_a || owns_first))
        c.slot[k - k_a] = static_cast<int>(q);
    }
    return c;
  }

  void finish(double t0, double dt, std::vector<EnsembleSnapshot>& snaps, QuantileTable& table) {
    for (auto q : snapshot_refs) snaps.push_back({t0 + dt * static_cast<double>(nodes[q]), buffers[q]});
    for (auto q : table_refs) table.add_row(t0 + dt * static_cast<double>(nodes[q]), buffers[q]);
  }
};

std::vector<double> initial_states(const InitLaw& init, std::size_t paths, const RngStream& rng) {
  std::vector<double> z(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    RngStream r = rng.child(i, stream_id::kInit);
    z[i] = init.sample(r);
  }
  return z;
}

}  // namespace

ObservableCurve EnsembleCurves::omega() const {
  ObservableCurve o{times, {}, {}};
  for (std::size_t k = 0; k < h.size(); ++k) {
    o.values.push_back(1.0 - h[k]);
    o.ci_half.push_back(kCiZ * h_se[k]);
  }
  return o;
}

ObservableCurve EnsembleCurves::mean() const {
  ObservableCurve o{times, m1, {}};
  for (double s : m1_se) o.ci_half.push_back(kCiZ * s);
  return o;
}

double EnsembleCurves::max_mean_se() const noexcept {
  double m = 0.0;
  for (double s : m1_se) m = std::max(m, s);
  return m;
}

LinearizedResult simulate_linearized(const ModelParams& params, const RateCurve& rate,
                                     const InitLaw& init, std::size_t paths, double horizon,
                                     const RngStream& rng, const LinearizedOptions& options) {
  if (paths < 1) fail(ErrorCode::InvalidArgument, "paths must be >= 1");
  if (rate.nodes() < 2) fail(ErrorCode::InvalidArgument, "rate curve is empty");
  if (!(horizon > rate.t0())) fail(ErrorCode::InvalidArgument, "horizon must exceed the curve start");
  if (!rate.contains(horizon)) fail(ErrorCode::OutOfDomain, "horizon exceeds the rate curve");
  const double dt = rate.dt();
  const auto last =
      static_cast<std::size_t>(std::floor((horizon - rate.t0()) / dt + 1e-9));
  const std::size_t nodes = last + 1;

  CapturePlan plan(options.snapshot_times, options.table_times, rate.t0(), dt, last, paths);
  const Capture cap = plan.window(0, nodes, true);
  auto z = initial_states(init, paths, rng);
  std::vector<double> z_end(paths);
  std::vector<NodeStats> stats;
  run_window(params, rate, 0, rate.t0(), nodes, dt, z, z_end, rng, !options.disable_firing, false,
             cap, stats, options.workers);

  LinearizedResult out;
  out.curves.paths = paths;
  for (std::size_t j = 0; j < nodes; ++j)
    append_node(out.curves, rate.time_at(j), stats[j], static_cast<double>(paths));
  plan.finish(rate.t0(), dt, out.snapshots, out.table);
  return out;
}

MeanFieldSolution picard_solve(const ModelParams& params, const InitLaw& init, double horizon,
                               double dt, const RngStream& rng, const PicardOptions& options) {
  if (options.paths < 1) fail(ErrorCode::InvalidArgument, "paths must be >= 1");
  if (options.max_iters < 1) fail(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(options.window > 0.0)) fail(ErrorCode::InvalidArgument, "window must be > 0");
  const std::size_t steps = grid_steps(horizon, dt);
  const std::size_t per_window =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.window / dt)));
  const std::size_t windows = (steps + per_window - 1) / per_window;
  const std::size_t paths = options.paths;
  const std::size_t ens_paths = std::max(options.ensemble_paths, paths);
  const bool final_pass = ens_paths > paths;
  const double np = static_cast<double>(paths);

  MeanFieldSolution sol{params, init, {}, {}, {}, {}, 0, 0, 0.0, 0.0, 0.0, {}, options.window};
  std::vector<double> rate(steps + 1, 0.0);
  rate[0] = init.mean();
  std::vector<NodeStats> global(steps + 1);

  CapturePlan plan(final_pass ? std::vector<double>{} : options.snapshot_times,
                   final_pass ? std::vector<double>{} : options.table_times, 0.0, dt, steps, paths);
  auto z = initial_states(init, paths, rng);
  std::vector<double> z_end(paths);
  std::vector<NodeStats> stats;

  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t k_a = w * per_window;
    const std::size_t k_b = std::min(steps, k_a + per_window);
    const std::size_t nodes = k_b - k_a + 1;
    const double t_a = dt * static_cast<double>(k_a);
    const Capture cap = plan.window(k_a, nodes, w == 0);
    std::vector<double> guess(nodes, rate[k_a]);
    std::vector<double> changes;
    for (std::size_t it = 1;; ++it) {
      const RateCurve curve(t_a, dt, guess);
      run_window(params, curve, w, t_a, nodes, dt, z, z_end, rng, true, w > 0, cap, stats,
                 options.workers);
      double change = 0.0;
      double se = 0.0;
      std::vector<double> image(nodes);
      for (std::size_t j = 0; j < nodes; ++j) {
        image[j] = stats[j].s1 / np;
        if (j == 0 && w > 0) continue;
        change = std::max(change, std::abs(image[j] - guess[j]));
        se = std::max(se, se_of(stats[j].s1, stats[j].s2, np));
      }
      changes.push_back(change);
      const double tol = options.tol > 0.0 ? options.tol : 2.0 * se;
      if (change <= tol) {
        sol.total_iters += it;
        sol.picard_iters = std::max(sol.picard_iters, it);
        sol.residual = std::max(sol.residual, change);
        sol.tol = std::max(sol.tol, tol);
        sol.noise_floor = std::max(sol.noise_floor, se);
        for (std::size_t j = (w > 0 ? 1 : 0); j < nodes; ++j) {
          rate[k_a + j] = guess[j];
          global[k_a + j] = stats[j];
        }
        break;
      }
      if (it >= options.max_iters)
        fail(ErrorCode::NoConvergence,
             "Picard iteration did not converge on window starting at t=" + fmt_double(t_a) +
                 ": residual " + fmt_double(change) + " > tol " + fmt_double(tol));
      // The window's first node is pinned to the previous window's rate.
      for (std::size_t j = (w > 0 ? 1 : 0); j < nodes; ++j) guess[j] = image[j];
    }
    sol.contraction.push_back(std::move(changes));
    z.swap(z_end);
  }
  sol.rate = RateCurve(0.0, dt, rate);

  if (!final_pass) {
    sol.curves.paths = paths;
    for (std::size_t k = 0; k <= steps; ++k)
      append_node(sol.curves, dt * static_cast<double>(k), global[k], np);
    plan.finish(0.0, dt, sol.snapshots, sol.table);
    return sol;
  }

  // Larger ensemble under the solved rate, same per-(path, window) streams.
  CapturePlan big(options.snapshot_times, options.table_times, 0.0, dt, steps, ens_paths);
  auto zz = initial_states(init, ens_paths, rng);
  std::vector<double> zz_end(ens_paths);
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t k_a = w * per_window;
    const std::size_t k_b = std::min(steps, k_a + per_window);
    const std::size_t nodes = k_b - k_a + 1;
    const double t_a = dt * static_cast<double>(k_a);
    const RateCurve curve(t_a, dt, std::vector<double>(rate.begin() + k_a, rate.begin() + k_b + 1));
    run_window(params, curve, w, t_a, nodes, dt, zz, zz_end, rng, true, w > 0,
               big.window(k_a, nodes, w == 0), stats, options.workers);
    for (std::size_t j = (w > 0 ? 1 : 0); j < nodes; ++j) global[k_a + j] = stats[j];
    zz.swap(zz_end);
  }
  sol.curves.paths = ens_paths;
  for (std::size_t k = 0; k <= steps; ++k)
    append_node(sol.curves, dt * static_cast<double>(k), global[k], static_cast<double>(ens_paths));
  big.finish(0.0, dt, sol.snapshots, sol.table);
  return sol;
}

SelfConsistentResult simulate_self_consistent(const ModelParams& params, std::size_t particles,
                                              const InitLaw& init, double horizon, double dt,
                                              const RngStream& rng,
                                              const std::vector<double>& table_times,
                                              unsigned workers) {
  if (particles < 100) fail(ErrorCode::InvalidArgument, "self-consistent run needs >= 100 particles");
  const std::size_t steps = grid_steps(horizon, dt);
  const double mu = params.mu();
  const double c = params.gamma_over_mu();
  const double gk = params.gamma() * params.kappa();
  const double n = static_cast<double>(particles);

  std::vector<double> z = initial_states(init, particles, rng);
  std::vector<double> t_last(particles, 0.0);
  std::vector<double> budget(particles);  // remaining unit-exponential excitation clock
  std::vector<double> tf(particles);
  std::vector<RngStream> fire(particles), excite(particles);
  for (std::size_t i = 0; i < particles; ++i) {
    const RngStream base = rng.child(i, stream_id::kDynamics);
    fire[i] = base.child(kFireStream);
    excite[i] = base.child(kExciteStream);
    budget[i] = excite[i].exponential();
    tf[i] = z[i] > 0.0 ? firing_wait_from_exponential(z[i], params, fire[i].exponential()) : kInf;
  }

  std::vector<std::size_t> table_nodes;
  for (double t : table_times) table_nodes.push_back(node_of(t, 0.0, dt, steps));
  std::sort(table_nodes.begin(), table_nodes.end());
  table_nodes.erase(std::unique(table_nodes.begin(), table_nodes.end()), table_nodes.end());

  SelfConsistentResult out;
  out.curves.paths = particles;
  std::size_t next_table = 0;
  std::vector<double> now(particles);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t_k = dt * static_cast<double>(k);
    NodeStats s;
    for (std::size_t i = 0; i < particles; ++i) {
      now[i] = z[i] * std::exp(-mu * (t_k - t_last[i]));
      s.push(now[i], c);
    }
    append_node(out.curves, t_k, s, n);
    if (next_table < table_nodes.size() && table_nodes[next_table] == k) {
      out.table.add_row(t_k, now);
      ++next_table;
    }
    if (k == steps) break;
    const double lambda = gk * s.s1 / n;
    const double t_end = t_k + dt;
    const std::size_t chunks = (particles + kChunk - 1) / kChunk;
    parallel_for(chunks, workers, [&](std::size_t ch) {
      const std::size_t hi = std::min(particles, (ch + 1) * kChunk);
      for (std::size_t i = ch * kChunk; i < hi; ++i) {
        double t = t_k;
        for (;;) {
          const double te = lambda > 0.0 ? t + budget[i] / lambda : kInf;
          const double next = std::min(te, tf[i]);
          if (next >= t_end) {
            if (lambda > 0.0) budget[i] -= lambda * (t_end - t);
            break;
          }
          z[i] *= std::exp(-mu * (next - t_last[i]));
          t_last[i] = next;
          if (tf[i] <= te) {
            z[i] = 0.0;
            tf[i] = kInf;
            if (lambda > 0.0) budget[i] -= lambda * (next - t);
          } else {
            z[i] += params.rho();
            budget[i] = excite[i].exponential();
            tf[i] = next + firing_wait_from_exponential(z[i], params, fire[i].exponential());
          }
          t = next;
        }
      }
    });
  }
  return out;
}

ObservableCurve h_curve_closed_form(const ModelParams& params, const RateCurve& rate, double h0) {
  if (!(h0 >= 0.0 && h0 <= 1.0)) fail(ErrorCode::InvalidArgument, "h0 must lie in [0,1]");
  ObservableCurve out;
  const double theta = params.theta();
  const auto cum = rate.cumulative_nodes();
  for (std::size_t k = 0; k < rate.nodes(); ++k) {
    const double e = std::exp(-params.gamma() * theta * cum[k]);
    out.times.push_back(rate.time_at(k));
    out.values.push_back(e * h0 + (1.0 - e) / theta);
  }
  return out;
}

ObservableCurve resting_fraction_closed_form(const ModelParams& params, const RateCurve& rate,
                                             double p0) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) fail(ErrorCode::InvalidArgument, "p0 must lie in [0,1]");
  ObservableCurve out;
  const double inv_k = 1.0 / params.kappa();
  const auto cum = rate.cumulative_nodes();
  for (std::size_t k = 0; k < rate.nodes(); ++k) {
    out.times.push_back(rate.time_at(k));
    out.values.push_back(inv_k +
                         (p0 - inv_k) * std::exp(-params.gamma() * params.kappa() * cum[k]));
  }
  return out;
}

namespace {

double binomial(int n, int k) {
  double b = 1.0;
  for (int q = 1; q <= k; ++q) b = b * (n - k + q) / q;
  return b;
}

// Right side of the moment identity from moments m[0..r+1].
double moment_drift(const ModelParams& params, const std::vector<double>& m, int r) {
  double excite = 0.0;
  for (int q = 0; q < r; ++q) excite += binomial(r, q) * std::pow(params.rho(), r - q) * m[q];
  return -params.mu() * r * m[r] - params.gamma() * m[r + 1] +
         params.kappa() * params.gamma() * m[1] * excite;
}

}  // namespace

Estimate moment_residual(const ModelParams& params, const EnsembleSnapshot& before,
                         const EnsembleSnapshot& at, const EnsembleSnapshot& after, int r) {
  if (r < 1 || r > 3) fail(ErrorCode::InvalidArgument, "moment order must be 1, 2 or 3");
  const std::size_t n = at.values.size();
  if (before.values.size() != n || after.values.size() != n)
    fail(ErrorCode::InvalidArgument, "moment residual needs path-aligned snapshots");
  if (n < 1000) fail(ErrorCode::TooFewSamples, "moment residual needs >= 1000 particles");
  const double h = 0.5 * (after.time - before.time);
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "snapshots must straddle the evaluation time");

  auto residual_over = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> m(static_cast<std::size_t>(r) + 2, 0.0);
    double fd = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      fd += std::pow(after.values[i], r) - std::pow(before.values[i], r);
      double p = 1.0;
      for (int q = 0; q <= r + 1; ++q) {
        m[static_cast<std::size_t>(q)] += p;
        p *= at.values[i];
      }
    }
    const double cnt = static_cast<double>(hi - lo);
    for (auto& v : m) v /= cnt;
    return fd / cnt / (2.0 * h) - moment_drift(params, m, r);
  };

  constexpr std::size_t kBatches = 50;
  RunningStats batches;
  for (std::size_t b = 0; b < kBatches; ++b)
    batches.push(residual_over(b * n / kBatches, (b + 1) * n / kBatches));
  Estimate e;
  e.value = residual_over(0, n);
  e.se = batches.standard_error();
  e.ci_half = kZeroCheckZ * e.se;
  e.samples = n;
  return e;
}

MomentBounds moment_bounds(const ModelParams& params, const InitLaw& init) {
  const double k = params.kappa();
  const double g = params.gamma();
  const double mu = params.mu();
  const double rho = params.rho();
  MomentBounds b;
  b.c1 = std::max(init.moment(1), k * rho - mu / g);
  b.c2 = std::max(init.moment(2), k * g * std::pow(b.c1 + rho, 3) / (2.0 * mu));
  b.c3 = std::max(init.moment(3), k * g * std::pow(std::max(b.c1, b.c2) + rho, 4) / (3.0 * mu));
  return b;
}

RateComparison compare_replicated_rates(const std::vector<std::vector<double>>& a,
                                        const std::vector<std::vector<double>>& b,
                                        std::span<const double> nominal_se_a,
                                        std::span<const double> nominal_se_b, double dt,
                                        double pool_halfwidth) {
  if (a.empty() || a.size() != b.size())
    fail(ErrorCode::InvalidArgument, "rate comparison needs the same nonzero replicate count");
  const std::size_t reps = a.size();
  const std::size_t nodes = a[0].size();
  for (std::size_t k = 0; k < reps; ++k)
    if (a[k].size() != nodes || b[k].size() != nodes)
      fail(ErrorCode::InvalidArgument, "rate comparison curves differ in length");
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "rate comparison needs dt > 0");
  RateComparison c;
  c.mean_a.assign(nodes, 0.0);
  c.mean_b.assign(nodes, 0.0);
  c.diff.assign(nodes, 0.0);
  c.combined_se.assign(nodes, 0.0);
  std::vector<double> var(nodes, 0.0);
  for (std::size_t j = 0; j < nodes; ++j) {
    RunningStats sa, sb;
    for (std::size_t k = 0; k < reps; ++k) {
      sa.push(a[k][j]);
      sb.push(b[k][j]);
    }
    c.mean_a[j] = sa.mean();
    c.mean_b[j] = sb.mean();
    c.diff[j] = std::abs(sa.mean() - sb.mean());
    var[j] = sa.variance() + sb.variance();
  }
  if (reps == 1) {
    if (nominal_se_a.size() != nodes || nominal_se_b.size() != nodes)
      fail(ErrorCode::InvalidArgument, "single-replicate comparison needs nominal errors per node");
    for (std::size_t j = 0; j < nodes; ++j)
      c.combined_se[j] = std::hypot(nominal_se_a[j], nominal_se_b[j]);
    return c;
  }
  const auto half = static_cast<std::size_t>(std::llround(std::max(0.0, pool_halfwidth) / dt));
  std::vector<double> prefix(nodes + 1, 0.0);
  for (std::size_t j = 0; j < nodes; ++j) prefix[j + 1] = prefix[j] + var[j];
  for (std::size_t j = 0; j < nodes; ++j) {
    const std::size_t lo = j > half ? j - half : 0;
    const std::size_t hi = std::min(nodes, j + half + 1);
    const double pooled = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    c.combined_se[j] = std::sqrt(pooled / static_cast<double>(reps));
  }
  return c;
}

void write_observables_csv(std::ostream& out, const MeanFieldSolution& sol) {
  const auto h = h_curve_closed_form(sol.params, sol.rate, sol.init.laplace(sol.params.gamma_over_mu()));
  const auto p = resting_fraction_closed_form(sol.params, sol.rate, sol.init.p_zero());
  const auto& c = sol.curves;
  out << "t,h_closed,h_mc,p_closed,p_mc,m1,m2,m3\n";
  for (std::size_t k = 0; k < c.nodes(); ++k)
    out << fmt_double(c.times[k]) << ',' << fmt_double(h.values[k]) << ','
        << fmt_double(c.h[k]) << ',' << fmt_double(p.values[k]) << ',' << fmt_double(c.p[k])
        << ',' << fmt_double(c.m1[k]) << ',' << fmt_double(c.m2[k]) << ','
        << fmt_double(c.m3[k]) << '\n';
}

}  // namespace spikenet

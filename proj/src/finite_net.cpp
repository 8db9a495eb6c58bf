#include "spikenet/finite_net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>

#include "spikenet/error.hpp"
#include "spikenet/io.hpp"
#include "spikenet/parallel.hpp"
#include "spikenet/stats.hpp"

namespace spikenet {

double NetworkState::total() const noexcept {
  return std::accumulate(potentials.begin(), potentials.end(), 0.0);
}

namespace {

// Re-anchor the decay-free weights once the common factor drops below e^-200.
constexpr double kMaxDecayExponent = 200.0;

void check_network(const ModelParams& params, std::span<const double> init, double horizon) {
  if (init.size() < static_cast<std::size_t>(params.kappa()) + 1)
    fail(ErrorCode::RangeTooLarge, "network needs N >= kappa + 1 neurons");
  for (double x : init)
    if (!(x >= 0.0) || !std::isfinite(x))
      fail(ErrorCode::InvalidArgument, "initial potentials must be finite and >= 0");
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be > 0");
}

void check_obs(std::span<const double> obs, double horizon) {
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!(obs[i] >= 0.0) || !std::isfinite(obs[i]) || obs[i] > horizon)
      fail(ErrorCode::InvalidArgument, "observation times must lie in [0, horizon]");
    if (i > 0 && obs[i] < obs[i - 1])
      fail(ErrorCode::InvalidArgument, "observation times must be sorted");
  }
}

// Potentials stored at the common reference time t_ref; the true level at
// time t is w_i * exp(-mu (t - t_ref)).
struct DecayFree {
  std::vector<double> w;
  double t_ref = 0.0;
  double mu = 1.0;

  double scale(double t) const noexcept { return std::exp(-mu * (t - t_ref)); }

  void values_at(double t, std::vector<double>& out) const {
    const double s = scale(t);
    out.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * s;
  }

  bool needs_anchor(double t) const noexcept { return mu * (t - t_ref) > kMaxDecayExponent; }

  void anchor(double t) {
    const double s = scale(t);
    for (auto& v : w) v *= s;
    t_ref = t;
  }
};

struct Recorder {
  Trajectory& traj;
  const SimulationOptions& options;
  std::span<const double> obs;
  std::size_t next_obs = 0;
  std::vector<double> scratch;

  // Emits every observation strictly before `limit`.
  void flush_before(const DecayFree& state, double limit) {
    while (next_obs < obs.size() && obs[next_obs] < limit) emit(state, obs[next_obs++]);
  }
  void flush_all(const DecayFree& state) {
    while (next_obs < obs.size()) emit(state, obs[next_obs++]);
  }
  void emit(const DecayFree& state, double t) {
    state.values_at(t, scratch);
    if (options.observer) options.observer->on_snapshot(t, scratch);
    if (options.store_snapshots) traj.snapshots.push_back({t, scratch});
  }
  void event(std::uint64_t k, double t, std::size_t firer, std::span<const std::size_t> excited) {
    if (options.observer) options.observer->on_event(t, firer, excited);
    if (options.record_events)
      traj.events.push_back({k, t, firer, std::vector<std::size_t>(excited.begin(), excited.end())});
  }
};

void finish(Trajectory& traj, const DecayFree& state, double horizon, double last_fire,
            bool died) {
  traj.death_time = died ? last_fire : kInf;
  const double t_final = std::isfinite(horizon) ? horizon : last_fire;
  traj.final_state.time = t_final;
  state.values_at(t_final, traj.final_state.potentials);
}

}  // namespace

Trajectory simulate_embedded(const ModelParams& params, std::span<const double> init,
                             double horizon, std::span<const double> obs_times, RngStream& rng,
                             const SimulationOptions& options) {
  check_network(params, init, horizon);
  check_obs(obs_times, horizon);
  const std::size_t n = init.size();
  const auto kappa = static_cast<std::size_t>(params.kappa());

  Trajectory traj;
  traj.initial = {0.0, std::vector<double>(init.begin(), init.end())};
  Recorder rec{traj, options, obs_times, 0, {}};

  DecayFree state{traj.initial.potentials, 0.0, params.mu()};
  WeightTree tree(state.w);
  std::vector<std::size_t> excited(kappa);
  const std::uint64_t rebuild_every = std::max<std::uint64_t>(n, 1024);

  double t = 0.0;
  double last_fire = 0.0;
  std::uint64_t k = 0;
  bool died = false;
  for (;;) {
    const double total_now = std::max(0.0, tree.total()) * state.scale(t);
    const double tau = sample_firing_wait(total_now, params, rng);
    const double t_next = t + tau;
    rec.flush_before(state, t_next);
    if (tau == kInf) {
      died = true;
      break;
    }
    if (t_next > horizon) break;

    std::size_t firer = tree.find(rng.uniform() * tree.total());
    while (!(state.w[firer] > 0.0)) {
      // Accumulated round-off pointed at an empty slot; refresh and redraw.
      tree.rebuild(state.w);
      firer = tree.find(rng.uniform() * tree.total());
    }
    const double s = state.scale(t_next);
    if (options.reset_firer) {
      tree.add(firer, -state.w[firer]);
      state.w[firer] = 0.0;
    }
    sample_excited_subset_into(n, firer, excited, rng);
    const double bump = params.rho() / s;
    for (std::size_t j : excited) {
      state.w[j] += bump;
      tree.add(j, bump);
    }
    t = t_next;
    last_fire = t;
    ++k;
    rec.event(k, t, firer, excited);
    if (state.needs_anchor(t)) {
      state.anchor(t);
      tree.rebuild(state.w);
    } else if (k % rebuild_every == 0) {
      tree.rebuild(state.w);
    }
  }
  rec.flush_all(state);
  traj.firings = k;
  finish(traj, state, horizon, last_fire, died);
  return traj;
}

Trajectory simulate_thinning(const ModelParams& params, std::span<const double> init,
                             double horizon, std::span<const double> obs_times, RngStream& rng,
                             const SimulationOptions& options) {
  check_network(params, init, horizon);
  if (!std::isfinite(horizon))
    fail(ErrorCode::InvalidArgument, "thinning simulator needs a finite horizon");
  check_obs(obs_times, horizon);
  const std::size_t n = init.size();
  const auto kappa = static_cast<std::size_t>(params.kappa());

  Trajectory traj;
  traj.initial = {0.0, std::vector<double>(init.begin(), init.end())};
  Recorder rec{traj, options, obs_times, 0, {}};

  DecayFree state{traj.initial.potentials, 0.0, params.mu()};
  double w_max = *std::max_element(state.w.begin(), state.w.end());
  std::vector<std::size_t> excited(kappa);

  double t = 0.0;
  double last_fire = 0.0;
  std::uint64_t k = 0;
  bool died = false;
  for (;;) {
    if (!(w_max > 0.0)) {
      rec.flush_before(state, kInf);
      died = true;
      break;
    }
    // Per-neuron marks live on [0, bound); levels only decay until the next
    // accepted firing, so the bound at the current time dominates.
    const double bound = params.gamma() * w_max * state.scale(t);
    const double t_cand = t + rng.exponential() / (static_cast<double>(n) * bound);
    rec.flush_before(state, t_cand);
    if (t_cand > horizon) break;
    const auto j = static_cast<std::size_t>(rng.below(n));
    const double mark = rng.uniform() * bound;
    const double s = state.scale(t_cand);
    t = t_cand;
    if (state.w[j] > 0.0 && mark <= params.gamma() * state.w[j] * s) {
      const bool was_max = state.w[j] == w_max;
      if (options.reset_firer) state.w[j] = 0.0;
      sample_excited_subset_into(n, j, excited, rng);
      const double bump = params.rho() / s;
      for (std::size_t e : excited) {
        state.w[e] += bump;
        w_max = std::max(w_max, state.w[e]);
      }
      if (was_max && options.reset_firer)
        w_max = *std::max_element(state.w.begin(), state.w.end());
      last_fire = t;
      ++k;
      rec.event(k, t, j, excited);
    }
    if (state.needs_anchor(t)) {
      const double a = state.scale(t);
      state.anchor(t);
      w_max *= a;
    }
  }
  rec.flush_all(state);
  traj.firings = k;
  finish(traj, state, horizon, last_fire, died);
  return traj;
}

Trajectory simulate_no_reset(const ModelParams& params, std::span<const double> init,
                             double horizon, std::span<const double> obs_times, RngStream& rng,
                             SimulationOptions options) {
  options.reset_firer = false;
  return simulate_embedded(params, init, horizon, obs_times, rng, options);
}

NetworkState replay_state(const ModelParams& params, const Trajectory& traj, double t,
                          bool reset_firer) {
  std::vector<double> x = traj.initial.potentials;
  double t_last = 0.0;
  for (const auto& ev : traj.events) {
    if (ev.time > t) break;
    const double d = std::exp(-params.mu() * (ev.time - t_last));
    for (auto& v : x) v *= d;
    if (reset_firer) x[ev.firer] = 0.0;
    for (auto j : ev.excited) x[j] += params.rho();
    t_last = ev.time;
  }
  const double d = std::exp(-params.mu() * (t - t_last));
  for (auto& v : x) v *= d;
  return {t, std::move(x)};
}

void write_events_jsonl(std::ostream& out, const Trajectory& traj) {
  for (const auto& ev : traj.events) {
    out << "{\"k\":" << ev.k << ",\"t\":" << fmt_double(ev.time) << ",\"firer\":" << ev.firer
        << ",\"excited\":[";
    for (std::size_t q = 0; q < ev.excited.size(); ++q) out << (q ? "," : "") << ev.excited[q];
    out << "]}\n";
  }
}

ResidualEstimate generator_residual(const ModelParams& params,
                                    std::span<const std::vector<double>> before,
                                    std::span<const std::vector<double>> at,
                                    std::span<const std::vector<double>> after, TestFunction phi,
                                    double dt) {
  if (before.size() != at.size() || after.size() != at.size())
    fail(ErrorCode::InvalidArgument, "generator residual needs replica-aligned ensembles");
  if (at.size() < 100) fail(ErrorCode::TooFewSamples, "generator residual needs >= 100 samples");
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be > 0");
  const double c = params.gamma_over_mu();
  const double g = params.gamma();
  const double kappa = params.kappa();
  const double excite_loss = -std::expm1(-c * params.rho());

  auto phi_value = [&](const std::vector<double>& x) {
    if (phi == TestFunction::Sum) return std::accumulate(x.begin(), x.end(), 0.0);
    double acc = 0.0;
    for (double v : x) acc += std::exp(-c * v);
    return acc / static_cast<double>(x.size());
  };
  auto drift = [&](const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double sum = 0.0;
    double sq = 0.0;
    for (double v : x) {
      sum += v;
      sq += v * v;
    }
    if (phi == TestFunction::Sum) return (g * params.rho() * kappa - params.mu()) * sum - g * sq;
    const double share = kappa / (n - 1.0);
    double acc = 0.0;
    for (double v : x) acc += g * v - g * excite_loss * share * (sum - v) * std::exp(-c * v);
    return acc / n;
  };

  RunningStats stats;
  for (std::size_t r = 0; r < at.size(); ++r) {
    if (before[r].size() != at[r].size() || after[r].size() != at[r].size() || at[r].size() < 2)
      fail(ErrorCode::InvalidArgument, "generator residual states must share N >= 2");
    const double fd = (phi_value(after[r]) - phi_value(before[r])) / (2.0 * dt);
    stats.push(fd - drift(at[r]));
  }
  ResidualEstimate out;
  out.value = stats.mean();
  out.se = stats.standard_error();
  out.ci_half = kZeroCheckZ * out.se;
  out.samples = stats.count();
  return out;
}

std::vector<DeathSample> death_time_samples(const ModelParams& params, std::size_t n,
                                            const InitLaw& init, double horizon,
                                            std::size_t replicas, const RngStream& rng,
                                            unsigned workers) {
  if (replicas < 1) fail(ErrorCode::InvalidArgument, "replicas must be >= 1");
  std::vector<DeathSample> out(replicas);
  SimulationOptions opts;
  opts.record_events = false;
  opts.store_snapshots = false;
  parallel_for(replicas, workers, [&](std::size_t r) {
    RngStream init_rng = rng.child(r, stream_id::kInit);
    RngStream dyn = rng.child(r, stream_id::kDynamics);
    const auto x0 = sample_initial_potentials(init, n, init_rng);
    const auto traj = simulate_embedded(params, x0, horizon, {}, dyn, opts);
    out[r] = {traj.death_time, traj.censored()};
  });
  return out;
}

}  // namespace spikenet

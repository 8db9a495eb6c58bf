#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "spikenet/core.hpp"
#include "spikenet/rng.hpp"
#include "spikenet/sampling.hpp"

namespace spikenet {

struct NetworkState {
  double time = 0.0;
  std::vector<double> potentials;

  double total() const noexcept;
};

struct FiringEvent {
  std::uint64_t k = 0;  // 1-based ordinal
  double time = 0.0;
  std::size_t firer = 0;
  std::vector<std::size_t> excited;
};

/// Exact sample path on [0, horizon]. Between events the state is
/// events[k].post-state * exp(-mu (t - T_k)); `replay_state` rebuilds it.
struct Trajectory {
  NetworkState initial;
  std::vector<FiringEvent> events;
  /// Time of the last firing when the network died (0 with no firings);
  /// +inf when the horizon was reached while still active.
  double death_time = kInf;
  std::uint64_t firings = 0;
  std::vector<NetworkState> snapshots;
  NetworkState final_state;

  bool censored() const noexcept { return death_time == kInf; }
};

/// Streaming hooks, for runs too long to keep in a Trajectory.
class NetworkObserver {
 public:
  virtual ~NetworkObserver() = default;
  virtual void on_event(double /*time*/, std::size_t /*firer*/,
                        std::span<const std::size_t> /*excited*/) {}
  virtual void on_snapshot(double /*time*/, std::span<const double> /*potentials*/) {}
};

struct SimulationOptions {
  bool record_events = true;
  bool store_snapshots = true;
  /// false gives the comparison model in which firing neurons keep their level.
  bool reset_firer = true;
  NetworkObserver* observer = nullptr;
};

/// Embedded-chain simulator: inverse-transform firing waits, firer drawn
/// proportionally to potential, uniform excited subset. Horizon may be +inf
/// (run until the sampled wait is infinite).
Trajectory simulate_embedded(const ModelParams& params, std::span<const double> init,
                             double horizon, std::span<const double> obs_times, RngStream& rng,
                             const SimulationOptions& options = {});

/// Thinning oracle driven by per-neuron firing marks against the bound
/// gamma * max_i X^i, refreshed after every candidate. Finite horizon only.
Trajectory simulate_thinning(const ModelParams& params, std::span<const double> init,
                             double horizon, std::span<const double> obs_times, RngStream& rng,
                             const SimulationOptions& options = {});

/// Embedded chain without resets; E||Y_t|| = ||Y_0|| e^{(rho kappa gamma - mu) t}.
Trajectory simulate_no_reset(const ModelParams& params, std::span<const double> init,
                             double horizon, std::span<const double> obs_times, RngStream& rng,
                             SimulationOptions options = {});

/// State at time t rebuilt from the recorded events.
NetworkState replay_state(const ModelParams& params, const Trajectory& traj, double t,
                          bool reset_firer = true);

/// Event log, one JSON object per line: {"k":..,"t":..,"firer":..,"excited":[..]}.
void write_events_jsonl(std::ostream& out, const Trajectory& traj);

enum class TestFunction { Sum, ExpNegFirst };

struct ResidualEstimate {
  double value = 0.0;
  double se = 0.0;
  double ci_half = 0.0;  // at the library's zero-containment level
  std::size_t samples = 0;

  bool ci_contains_zero() const noexcept { return value - ci_half <= 0.0 && 0.0 <= value + ci_half; }
};

/// Central finite difference of E[phi(X_t)] minus the Monte Carlo generator
/// drift at t. The three ensembles are replica-aligned states at t-dt, t,
/// t+dt. exp_neg_first is averaged over all neurons, which share its
/// expectation by exchangeability.
ResidualEstimate generator_residual(const ModelParams& params,
                                    std::span<const std::vector<double>> before,
                                    std::span<const std::vector<double>> at,
                                    std::span<const std::vector<double>> after, TestFunction phi,
                                    double dt);

struct DeathSample {
  double time = 0.0;  // +inf when censored
  bool censored = false;
};

/// Last-firing times of independent replicas (replica r uses rng.child(r)).
std::vector<DeathSample> death_time_samples(const ModelParams& params, std::size_t n,
                                            const InitLaw& init, double horizon,
                                            std::size_t replicas, const RngStream& rng,
                                            unsigned workers = 1);

}  // namespace spikenet

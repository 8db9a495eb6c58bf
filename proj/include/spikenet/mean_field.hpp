#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "spikenet/core.hpp"
#include "spikenet/quantile_table.hpp"
#include "spikenet/rate_curve.hpp"
#include "spikenet/rng.hpp"
#include "spikenet/sampling.hpp"
#include "spikenet/stats.hpp"

namespace spikenet {

/// One scalar observable on a time grid, with optional CI half-widths.
struct ObservableCurve {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> ci_half;
};

/// Pathwise ensemble statistics at the nodes of a uniform grid.
struct EnsembleCurves {
  std::vector<double> times;
  std::vector<double> m1, m1_se;  // E[Z_t]
  std::vector<double> m2, m3, m4;
  std::vector<double> h, h_se;  // E[exp(-(gamma/mu) Z_t)]
  std::vector<double> p, p_se;  // P(Z_t = 0), exact-zero count
  std::size_t paths = 0;

  std::size_t nodes() const noexcept { return times.size(); }
  /// E[omega(Z_t, 0)] = 1 - h_t.
  ObservableCurve omega() const;
  ObservableCurve mean() const;
  /// Largest standard error of the mean curve, the Monte Carlo noise floor.
  double max_mean_se() const noexcept;
};

struct LinearizedOptions {
  /// Diagnostic: turn off the resets so only decay and excitation act.
  bool disable_firing = false;
  /// Path-aligned snapshots at these times (rounded to grid nodes).
  std::vector<double> snapshot_times;
  /// Quantile table rows at these times, one sample per path.
  std::vector<double> table_times;
  unsigned workers = 1;
};

struct LinearizedResult {
  EnsembleCurves curves;
  std::vector<EnsembleSnapshot> snapshots;
  QuantileTable table;
};

/// Monte Carlo of the linearized single-neuron process driven by a given
/// rate curve: decay mu, resets at rate gamma*Y, +rho jumps at rate
/// gamma*kappa*r_t. Statistics are recorded at the curve's nodes up to
/// `horizon`. Path i uses rng.child(i).
LinearizedResult simulate_linearized(const ModelParams& params, const RateCurve& rate,
                                     const InitLaw& init, std::size_t paths, double horizon,
                                     const RngStream& rng, const LinearizedOptions& options = {});

struct PicardOptions {
  std::size_t paths = 10000;
  /// Sup-norm stopping tolerance; <= 0 means twice the noise floor of the
  /// current iterate.
  double tol = 0.0;
  std::size_t max_iters = 60;
  /// The horizon is solved window by window; each window is a Picard
  /// problem on its own, started from the previous window's final states.
  double window = 1.0;
  /// Ensemble size of the final pass with the solved rate. Paths below
  /// `paths` replay the Picard ensemble exactly; 0 means `paths`.
  std::size_t ensemble_paths = 0;
  std::vector<double> snapshot_times;
  std::vector<double> table_times;
  unsigned workers = 1;
};

struct MeanFieldSolution {
  ModelParams params;
  InitLaw init;
  /// Input rate of the last Picard iterate; `curves` is its image.
  RateCurve rate;
  EnsembleCurves curves;
  std::vector<EnsembleSnapshot> snapshots;
  QuantileTable table;
  /// Largest number of iterations any window needed, and the total.
  std::size_t picard_iters = 0;
  std::size_t total_iters = 0;
  /// Sup over the horizon of |A r - r| for the returned rate.
  double residual = 0.0;
  /// Tolerance actually used (largest over windows in auto mode).
  double tol = 0.0;
  double noise_floor = 0.0;
  /// Successive sup-norm changes per window.
  std::vector<std::vector<double>> contraction;
  double window = 1.0;
};

/// Fixed point of r -> A r with common random numbers: every path keeps
/// its stream (keyed by path and window) across iterations, starting from
/// r = E[Z_0] on the first window and from the continued level afterwards.
/// Throws NoConvergence (message carries the residual) when a window
/// exhausts max_iters.
MeanFieldSolution picard_solve(const ModelParams& params, const InitLaw& init, double horizon,
                               double dt, const RngStream& rng, const PicardOptions& options = {});

struct SelfConsistentResult {
  EnsembleCurves curves;
  QuantileTable table;
};

/// Particle approximation of the nonlinear process: the excitation rate on
/// each dt-window is gamma*kappa times the ensemble mean at the window start.
SelfConsistentResult simulate_self_consistent(const ModelParams& params, std::size_t particles,
                                              const InitLaw& init, double horizon, double dt,
                                              const RngStream& rng,
                                              const std::vector<double>& table_times = {},
                                              unsigned workers = 1);

/// h_t = e^{-gamma theta R_t} h0 + (1 - e^{-gamma theta R_t}) / theta at
/// the curve's nodes.
ObservableCurve h_curve_closed_form(const ModelParams& params, const RateCurve& rate, double h0);

/// p_t = 1/kappa + (p0 - 1/kappa) e^{-gamma kappa R_t} at the curve's nodes.
ObservableCurve resting_fraction_closed_form(const ModelParams& params, const RateCurve& rate,
                                             double p0);

/// Central difference of m_r between the snapshots before and after `at`,
/// minus the moment identity's right side at `at` (m_{r+1} from the same
/// ensemble). The interval comes from 50 batch means across paths.
Estimate moment_residual(const ModelParams& params, const EnsembleSnapshot& before,
                         const EnsembleSnapshot& at, const EnsembleSnapshot& after, int r);

struct MomentBounds {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// Explicit uniform-in-time bounds on m_1, m_2, m_3 of the nonlinear process.
MomentBounds moment_bounds(const ModelParams& params, const InitLaw& init);

struct RateComparison {
  std::vector<double> mean_a, mean_b;
  std::vector<double> diff;  // |mean_a - mean_b|
  std::vector<double> combined_se;
};

/// Node-wise comparison of two rate estimators, each given as B replicate
/// curves on a common grid of spacing dt. With B >= 2 the standard error of
/// each mean comes from the replicate variance, pooled over nodes within
/// `pool_halfwidth` time units; with B = 1 the nominal errors are used.
RateComparison compare_replicated_rates(const std::vector<std::vector<double>>& a,
                                        const std::vector<std::vector<double>>& b,
                                        std::span<const double> nominal_se_a,
                                        std::span<const double> nominal_se_b, double dt,
                                        double pool_halfwidth = 0.5);

/// Columns t,h_closed,h_mc,p_closed,p_mc,m1,m2,m3.
void write_observables_csv(std::ostream& out, const MeanFieldSolution& sol);

}  // namespace spikenet

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spikenet/core.hpp"
#include "spikenet/rate_curve.hpp"
#include "spikenet/rng.hpp"

namespace spikenet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Wait until the next firing of a configuration with total potential
/// `total_potential` that only decays: P(tau > t) = exp(-(gamma/mu) x (1 - e^{-mu t})).
/// Inverse transform of a unit exponential; +inf when the draw exceeds
/// gamma x / mu (the configuration never fires again).
double sample_firing_wait(double total_potential, const ModelParams& params, RngStream& rng);

/// Same law given a pre-drawn unit exponential `xi`.
double firing_wait_from_exponential(double total_potential, const ModelParams& params,
                                    double xi) noexcept;

/// Index i with probability x_i / sum(x). Throws AllSilent if every entry is 0.
std::size_t sample_firing_index(std::span<const double> potentials, RngStream& rng);

/// Uniform kappa-subset of {0..n-1} \ {firer} (0-based). Partial Fisher-Yates
/// over a virtual candidate window, O(kappa) draws and O(kappa^2) bookkeeping.
std::vector<std::size_t> sample_excited_subset(std::size_t n, std::size_t firer, int kappa,
                                               RngStream& rng);

/// Allocation-free form of the above; `out` must hold kappa slots.
void sample_excited_subset_into(std::size_t n, std::size_t firer, std::span<std::size_t> out,
                                RngStream& rng);

/// First event after `t_start` of a Poisson process with intensity
/// scale * curve(t). +inf if the curve runs out and is terminal, OutOfDomain
/// if it runs out otherwise.
double sample_inhomogeneous_event(const RateCurve& curve, double scale, double t_start,
                                  RngStream& rng);

/// Fenwick tree over nonnegative weights supporting point updates and
/// sampling an index proportional to its weight in O(log n).
class WeightTree {
 public:
  WeightTree() = default;
  explicit WeightTree(std::span<const double> weights) { rebuild(weights); }

  void rebuild(std::span<const double> weights);
  void add(std::size_t i, double delta) noexcept;
  double total() const noexcept { return total_; }
  std::size_t size() const noexcept { return n_; }

  /// Smallest index whose inclusive prefix sum exceeds `target`.
  std::size_t find(double target) const noexcept;

 private:
  std::size_t n_ = 0;
  std::size_t top_bit_ = 0;
  std::vector<double> tree_;
  double total_ = 0.0;
};

/// Law of the i.i.d. initial potentials.
class InitLaw {
 public:
  enum class Kind { Constant, Exponential, Uniform };

  static InitLaw constant(double value);
  static InitLaw exponential(double mean);
  static InitLaw uniform(double lo, double hi);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  double sample(RngStream& rng) const;
  double mean() const noexcept;
  double moment(int r) const;
  /// E[exp(-c Z0)].
  double laplace(double c) const noexcept;
  double p_zero() const noexcept;
  double max_value() const noexcept;

  std::string describe() const;

 private:
  InitLaw(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

std::vector<double> sample_initial_potentials(const InitLaw& law, std::size_t n, RngStream& rng);

}  // namespace spikenet

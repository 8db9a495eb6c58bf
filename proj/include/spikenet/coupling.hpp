#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "spikenet/core.hpp"
#include "spikenet/quantile_table.hpp"
#include "spikenet/rng.hpp"
#include "spikenet/sampling.hpp"
#include "spikenet/stats.hpp"

namespace spikenet {

/// Comonotone coupling of the empirical law of `others` with the reference
/// row: the rank of others[selected] (random sub-rank inside a block of
/// equal values) plus a uniform offset picks the matching quantile cell.
/// Over a uniformly chosen `selected` the output is distributed as the row
/// and its mean gap to others[selected] is W1(row, others).
double optimal_coupling_map(std::span<const double> table_row, std::span<const double> others,
                            std::size_t selected, RngStream& rng);

/// Same map when the selected value is excluded position `skip` of `x`
/// (others = x without x[skip]) and the selected neuron is `selected`, an
/// index into x. Avoids building the others array.
double optimal_coupling_map_excluding(std::span<const double> table_row, std::span<const double> x,
                                      std::size_t skip, std::size_t selected, RngStream& rng);

struct CoupledOptions {
  std::size_t replicas = 200;
  /// Grid of output times (must start at 0 for the h_0 check).
  std::vector<double> eval_times;
  unsigned workers = 1;
};

struct CouplingCurve {
  std::size_t n = 0;
  std::vector<double> times;
  std::vector<double> h_hat;
  std::vector<double> ci_half;
  std::vector<double> x_mean;  // mean tracked X^i and Z^i, for the crude sanity bound
  std::vector<double> z_mean;
  std::size_t replicas = 0;
  std::size_t tracked = 0;
};

/// Finite network X with `tracked` mean-field copies Z^i (i < tracked)
/// driven by the same firing marks and excitation events. kappa must be 2.
/// Rows of `table` stand for f_t between their times.
CouplingCurve simulate_coupled_system(const ModelParams& params, std::size_t n,
                                      const InitLaw& init, const QuantileTable& table,
                                      double horizon, std::size_t tracked, const RngStream& rng,
                                      const CoupledOptions& options);

struct ChaosRow {
  std::size_t n = 0;
  double t = 0.0;
  Estimate w1;
  std::size_t replicas = 0;
  std::size_t table_m = 0;
};

struct ChaosOptions {
  std::size_t replicas = 500;
  /// Diagnostic control: replace the network by N i.i.d. draws from the row.
  bool iid_control = false;
  unsigned workers = 1;
};

/// E[W1(f_t, empirical law of X_t)] per (N, t). Every eval time needs a
/// table row at exactly that time.
std::vector<ChaosRow> chaos_error_curve(const ModelParams& params,
                                        std::span<const std::size_t> n_list,
                                        std::span<const double> eval_times, const InitLaw& init,
                                        const QuantileTable& table, const RngStream& rng,
                                        const ChaosOptions& options);

/// Columns N,t,w1_mean,w1_ci,replicas,table_M.
void write_chaos_csv(std::ostream& out, std::span<const ChaosRow> rows);
/// Columns t,h_hat,ci,N.
void write_coupling_csv(std::ostream& out, std::span<const CouplingCurve> curves);

}  // namespace spikenet

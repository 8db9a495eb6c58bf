#include "spikenet/coupling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "spikenet/error.hpp"
#include "spikenet/finite_net.hpp"
#include "spikenet/io.hpp"
#include "spikenet/metrics.hpp"
#include "spikenet/parallel.hpp"

namespace spikenet {

namespace {

constexpr std::size_t kNoSkip = std::numeric_limits<std::size_t>::max();

double coupled_value(std::span<const double> row, std::span<const double> x, std::size_t skip,
                     std::size_t selected, RngStream& rng) {
  if (row.empty()) fail(ErrorCode::EmptyReference, "reference row is empty");
  const std::size_t pool = x.size() - (skip == kNoSkip ? 0 : 1);
  if (pool < 1 || selected >= x.size() || selected == skip)
    fail(ErrorCode::InvalidArgument, "selected neighbour must be one of the others");
  const double v = x[selected];
  std::uint64_t less = 0;
  std::uint64_t equal = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == skip) continue;
    less += x[j] < v;
    equal += x[j] == v;
  }
  const double rank = static_cast<double>(less + rng.below(equal));
  const double pos = (rank + rng.uniform()) / static_cast<double>(pool);
  const auto m = row.size();
  const auto cell = std::min<std::size_t>(m - 1, static_cast<std::size_t>(pos * static_cast<double>(m)));
  return row[cell];
}

}  // namespace

double optimal_coupling_map(std::span<const double> table_row, std::span<const double> others,
                            std::size_t selected, RngStream& rng) {
  return coupled_value(table_row, others, kNoSkip, selected, rng);
}

double optimal_coupling_map_excluding(std::span<const double> table_row, std::span<const double> x,
                                      std::size_t skip, std::size_t selected, RngStream& rng) {
  if (skip >= x.size()) fail(ErrorCode::InvalidArgument, "excluded index out of range");
  return coupled_value(table_row, x, skip, selected, rng);
}

namespace {

constexpr double kMaxDecayExponent = 200.0;

struct ReplicaTrace {
  std::vector<double> gap, x_mean, z_mean;
};

ReplicaTrace coupled_replica(const ModelParams& params, std::size_t n, const InitLaw& init,
                             const QuantileTable& table, double horizon, std::size_t tracked,
                             std::span<const double> eval, RngStream& init_rng, RngStream& rng) {
  const double mu = params.mu();
  const double g = params.gamma();
  const double rho = params.rho();
  // Decay-free coordinates shared by X and the tracked Z copies.
  std::vector<double> x = sample_initial_potentials(init, n, init_rng);
  std::vector<double> z(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(tracked));
  double t_ref = 0.0;
  auto scale = [&](double t) { return std::exp(-mu * (t - t_ref)); };
  double x_max = *std::max_element(x.begin(), x.end());
  double z_max = z.empty() ? 0.0 : *std::max_element(z.begin(), z.end());
  const double f_max = table.max_value();

  ReplicaTrace out;
  std::size_t next_eval = 0;
  auto flush_before = [&](double limit) {
    while (next_eval < eval.size() && eval[next_eval] < limit) {
      const double s = scale(eval[next_eval]);
      double gap = 0.0, xs = 0.0, zs = 0.0;
      for (std::size_t i = 0; i < tracked; ++i) {
        gap += std::abs(x[i] - z[i]) * s;
        xs += x[i] * s;
        zs += z[i] * s;
      }
      const double k = static_cast<double>(tracked);
      out.gap.push_back(gap / k);
      out.x_mean.push_back(xs / k);
      out.z_mean.push_back(zs / k);
      ++next_eval;
    }
  };

  std::size_t row_k = table.row_index_at(0.0);
  const auto times = table.times();
  std::array<std::size_t, 2> excited{};
  double t = 0.0;
  for (;;) {
    const double s_now = scale(t);
    const double bound = g * std::max({x_max * s_now, z_max * s_now, f_max});
    if (!(bound > 0.0)) break;
    const double t_cand = t + rng.exponential() / (static_cast<double>(n) * bound);
    flush_before(t_cand);
    if (t_cand > horizon) break;
    t = t_cand;
    const double s = scale(t);
    while (row_k + 1 < times.size() && times[row_k + 1] <= t) ++row_k;
    const auto row = table.row(row_k);

    const auto l = static_cast<std::size_t>(rng.below(n));
    const double mark = rng.uniform() * bound;
    sample_excited_subset_into(n, l, excited, rng);
    const bool x_fires = x[l] > 0.0 && mark <= g * x[l] * s;
    const bool z_fires = l < tracked && z[l] > 0.0 && mark <= g * z[l] * s;
    // Excitation of a tracked copy: the mark against gamma * F^i(X_{t-}).
    std::array<bool, 2> z_excited{false, false};
    for (std::size_t q = 0; q < 2; ++q) {
      const std::size_t i = excited[q];
      if (i >= tracked) continue;
      // Ranks are scale-free, so decay-free coordinates give the same F.
      const double f = coupled_value(row, x, i, l, rng);
      z_excited[q] = mark <= g * f;
    }
    const double bump = rho / s;
    if (x_fires) {
      const bool was_max = x[l] == x_max;
      x[l] = 0.0;
      for (std::size_t i : excited) {
        x[i] += bump;
        x_max = std::max(x_max, x[i]);
      }
      if (was_max) x_max = *std::max_element(x.begin(), x.end());
    }
    if (z_fires || z_excited[0] || z_excited[1]) {
      if (z_fires) z[l] = 0.0;
      for (std::size_t q = 0; q < 2; ++q)
        if (z_excited[q]) z[excited[q]] += bump;
      z_max = *std::max_element(z.begin(), z.end());
    }
    if (mu * (t - t_ref) > kMaxDecayExponent) {
      const double a = scale(t);
      for (auto& v : x) v *= a;
      for (auto& v : z) v *= a;
      x_max *= a;
      z_max *= a;
      t_ref = t;
    }
  }
  flush_before(kInf);
  return out;
}

}  // namespace

CouplingCurve simulate_coupled_system(const ModelParams& params, std::size_t n,
                                      const InitLaw& init, const QuantileTable& table,
                                      double horizon, std::size_t tracked, const RngStream& rng,
                                      const CoupledOptions& options) {
  if (params.kappa() != 2) fail(ErrorCode::InvalidArgument, "coupled system is defined for kappa = 2");
  if (n < 3) fail(ErrorCode::RangeTooLarge, "coupled system needs N >= 3");
  if (tracked < 1 || tracked > n) fail(ErrorCode::InvalidArgument, "tracked must lie in [1, N]");
  if (options.replicas < 1) fail(ErrorCode::InvalidArgument, "replicas must be >= 1");
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be > 0");
  if (table.empty()) fail(ErrorCode::EmptyReference, "reference table is empty");
  if (table.first_time() > 1e-9) fail(ErrorCode::OutOfDomain, "reference table starts after t=0");
  if (table.last_time() < horizon - 1e-9) fail(ErrorCode::OutOfDomain, "reference table is shorter than the horizon");
  const auto& eval = options.eval_times;
  for (std::size_t k = 0; k < eval.size(); ++k)
    if (eval[k] < 0.0 || eval[k] > horizon || (k > 0 && eval[k] < eval[k - 1]))
      fail(ErrorCode::InvalidArgument, "eval times must be sorted within [0, horizon]");

  std::vector<ReplicaTrace> traces(options.replicas);
  parallel_for(options.replicas, options.workers, [&](std::size_t r) {
    RngStream init_rng = rng.child(r, stream_id::kInit);
    RngStream dyn = rng.child(r, stream_id::kCoupling);
    traces[r] = coupled_replica(params, n, init, table, horizon, tracked, eval, init_rng, dyn);
  });

  CouplingCurve c;
  c.n = n;
  c.replicas = options.replicas;
  c.tracked = tracked;
  c.times = eval;
  for (std::size_t k = 0; k < eval.size(); ++k) {
    RunningStats gap, xs, zs;
    for (const auto& tr : traces) {
      gap.push(tr.gap[k]);
      xs.push(tr.x_mean[k]);
      zs.push(tr.z_mean[k]);
    }
    c.h_hat.push_back(gap.mean());
    c.ci_half.push_back(kCiZ * gap.standard_error());
    c.x_mean.push_back(xs.mean());
    c.z_mean.push_back(zs.mean());
  }
  return c;
}

std::vector<ChaosRow> chaos_error_curve(const ModelParams& params,
                                        std::span<const std::size_t> n_list,
                                        std::span<const double> eval_times, const InitLaw& init,
                                        const QuantileTable& table, const RngStream& rng,
                                        const ChaosOptions& options) {
  if (options.replicas < 1) fail(ErrorCode::InvalidArgument, "replicas must be >= 1");
  if (eval_times.empty()) fail(ErrorCode::InvalidArgument, "chaos curve needs eval times");
  std::vector<double> obs(eval_times.begin(), eval_times.end());
  if (!std::is_sorted(obs.begin(), obs.end()))
    fail(ErrorCode::InvalidArgument, "eval times must be sorted");
  std::vector<std::span<const double>> rows;
  for (double t : obs) rows.push_back(table.row_exact(t));
  const double horizon = obs.back();

  std::vector<ChaosRow> out;
  for (std::size_t n : n_list) {
    std::vector<std::vector<double>> w1(obs.size(), std::vector<double>(options.replicas));
    parallel_for(options.replicas, options.workers, [&](std::size_t r) {
      const RngStream base = rng.child(n, r);
      std::vector<double> sample(n);
      if (options.iid_control) {
        RngStream aux = base.child(stream_id::kAux);
        for (std::size_t k = 0; k < obs.size(); ++k) {
          for (auto& v : sample) v = rows[k][aux.below(rows[k].size())];
          std::sort(sample.begin(), sample.end());
          w1[k][r] = w1_sorted(sample, rows[k]);
        }
        return;
      }
      RngStream init_rng = base.child(stream_id::kInit);
      RngStream dyn = base.child(stream_id::kDynamics);
      const auto x0 = sample_initial_potentials(init, n, init_rng);
      SimulationOptions so;
      so.record_events = false;
      const auto traj = simulate_embedded(params, x0, horizon, obs, dyn, so);
      for (std::size_t k = 0; k < obs.size(); ++k) {
        sample = traj.snapshots[k].potentials;
        std::sort(sample.begin(), sample.end());
        w1[k][r] = w1_sorted(sample, rows[k]);
      }
    });
    for (std::size_t k = 0; k < obs.size(); ++k)
      out.push_back({n, obs[k], mean_estimate(w1[k]), options.replicas, rows[k].size()});
  }
  return out;
}

void write_chaos_csv(std::ostream& out, std::span<const ChaosRow> rows) {
  out << "N,t,w1_mean,w1_ci,replicas,table_M\n";
  for (const auto& r : rows)
    out << r.n << ',' << fmt_double(r.t) << ',' << fmt_double(r.w1.value) << ','
        << fmt_double(r.w1.ci_half) << ',' << r.replicas << ',' << r.table_m << '\n';
}

void write_coupling_csv(std::ostream& out, std::span<const CouplingCurve> curves) {
  out << "t,h_hat,ci,N\n";
  for (const auto& c : curves)
    for (std::size_t k = 0; k < c.times.size(); ++k)
      out << fmt_double(c.times[k]) << ',' << fmt_double(c.h_hat[k]) << ','
          << fmt_double(c.ci_half[k]) << ',' << c.n << '\n';
}

}  // namespace spikenet

#include "spikenet/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "spikenet/error.hpp"

namespace spikenet {

double firing_wait_from_exponential(double total_potential, const ModelParams& params,
                                    double xi) noexcept {
  if (!(total_potential > 0.0)) return kInf;
  const double ratio = params.mu() * xi / (params.gamma() * total_potential);
  // (1 - ratio)_+ with log 0 = -inf.
  if (ratio >= 1.0) return kInf;
  return -std::log1p(-ratio) / params.mu();
}

double sample_firing_wait(double total_potential, const ModelParams& params, RngStream& rng) {
  if (!(total_potential >= 0.0)) fail(ErrorCode::InvalidArgument, "total potential must be >= 0");
  if (total_potential == 0.0) return kInf;
  return firing_wait_from_exponential(total_potential, params, rng.exponential());
}

std::size_t sample_firing_index(std::span<const double> potentials, RngStream& rng) {
  double total = 0.0;
  for (double x : potentials) total += x;
  if (!(total > 0.0)) fail(ErrorCode::AllSilent, "firing index requested from an all-zero network");
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < potentials.size(); ++i) {
    if (potentials[i] <= 0.0) continue;
    acc += potentials[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

void sample_excited_subset_into(std::size_t n, std::size_t firer, std::span<std::size_t> out,
                                RngStream& rng) {
  const std::size_t kappa = out.size();
  if (firer >= n) fail(ErrorCode::InvalidArgument, "firer index out of range");
  if (kappa + 1 > n)
    fail(ErrorCode::RangeTooLarge, "impulse range exceeds the number of other neurons");
  const std::size_t m = n - 1;
  // Sparse record of the swaps done on the virtual array 0..m-1.
  struct Swap {
    std::size_t pos;
    std::size_t value;
  };
  Swap local[16];
  std::vector<Swap> heap;
  Swap* swaps = local;
  if (kappa > 16) {
    heap.resize(kappa);
    swaps = heap.data();
  }
  std::size_t used = 0;
  auto lookup = [&](std::size_t pos) {
    for (std::size_t q = 0; q < used; ++q)
      if (swaps[q].pos == pos) return swaps[q].value;
    return pos;
  };
  auto store = [&](std::size_t pos, std::size_t value) {
    for (std::size_t q = 0; q < used; ++q)
      if (swaps[q].pos == pos) {
        swaps[q].value = value;
        return;
      }
    swaps[used++] = {pos, value};
  };
  for (std::size_t s = 0; s < kappa; ++s) {
    const std::size_t j = s + static_cast<std::size_t>(rng.below(m - s));
    const std::size_t picked = lookup(j);
    store(j, lookup(s));
    out[s] = picked < firer ? picked : picked + 1;
  }
}

std::vector<std::size_t> sample_excited_subset(std::size_t n, std::size_t firer, int kappa,
                                               RngStream& rng) {
  if (kappa < 1) fail(ErrorCode::InvalidArgument, "kappa must be >= 1");
  std::vector<std::size_t> out(static_cast<std::size_t>(kappa));
  sample_excited_subset_into(n, firer, out, rng);
  return out;
}

double sample_inhomogeneous_event(const RateCurve& curve, double scale, double t_start,
                                  RngStream& rng) {
  if (!(scale >= 0.0)) fail(ErrorCode::InvalidArgument, "intensity scale must be >= 0");
  if (!curve.contains(t_start)) fail(ErrorCode::OutOfDomain, "start time beyond rate curve domain");
  if (scale == 0.0) return kInf;
  const double xi = rng.exponential();
  if (auto t = curve.time_at_increment(t_start, xi / scale)) return *t;
  if (curve.terminal()) return kInf;
  fail(ErrorCode::OutOfDomain, "rate curve exhausted before the next event");
}

void WeightTree::rebuild(std::span<const double> weights) {
  n_ = weights.size();
  tree_.assign(n_ + 1, 0.0);
  total_ = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    tree_[i + 1] += weights[i];
    total_ += weights[i];
    const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
    if (parent <= n_) tree_[parent] += tree_[i + 1];
  }
  top_bit_ = n_ == 0 ? 0 : std::bit_floor(n_);
}

void WeightTree::add(std::size_t i, double delta) noexcept {
  total_ += delta;
  for (std::size_t k = i + 1; k <= n_; k += k & (~k + 1)) tree_[k] += delta;
}

std::size_t WeightTree::find(double target) const noexcept {
  std::size_t pos = 0;
  for (std::size_t step = top_bit_; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next <= n_ && tree_[next] <= target) {
      pos = next;
      target -= tree_[next];
    }
  }
  return std::min(pos, n_ - 1);
}

InitLaw InitLaw::constant(double value) {
  if (!(value >= 0.0) || !std::isfinite(value))
    fail(ErrorCode::InvalidArgument, "constant initial potential must be finite and >= 0");
  return {Kind::Constant, value, value};
}

InitLaw InitLaw::exponential(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean))
    fail(ErrorCode::InvalidArgument, "exponential initial law needs a positive mean");
  return {Kind::Exponential, mean, 0.0};
}

InitLaw InitLaw::uniform(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi))
    fail(ErrorCode::InvalidArgument, "uniform initial law needs 0 <= lo < hi");
  return {Kind::Uniform, lo, hi};
}

double InitLaw::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Exponential: return a_ * rng.exponential();
    case Kind::Uniform: return a_ + (b_ - a_) * rng.uniform();
  }
  return a_;
}

double InitLaw::mean() const noexcept {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Exponential: return a_;
    case Kind::Uniform: return 0.5 * (a_ + b_);
  }
  return a_;
}

double InitLaw::moment(int r) const {
  if (r < 0) fail(ErrorCode::InvalidArgument, "moment order must be >= 0");
  switch (kind_) {
    case Kind::Constant: return std::pow(a_, r);
    case Kind::Exponential: return std::tgamma(r + 1.0) * std::pow(a_, r);
    case Kind::Uniform:
      return (std::pow(b_, r + 1) - std::pow(a_, r + 1)) / ((r + 1.0) * (b_ - a_));
  }
  return 0.0;
}

double InitLaw::laplace(double c) const noexcept {
  switch (kind_) {
    case Kind::Constant: return std::exp(-c * a_);
    case Kind::Exponential: return 1.0 / (1.0 + c * a_);
    case Kind::Uniform:
      if (c == 0.0) return 1.0;
      return (std::exp(-c * a_) - std::exp(-c * b_)) / (c * (b_ - a_));
  }
  return 1.0;
}

double InitLaw::p_zero() const noexcept {
  return (kind_ == Kind::Constant && a_ == 0.0) ? 1.0 : 0.0;
}

double InitLaw::max_value() const noexcept {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Exponential: return kInf;
    case Kind::Uniform: return b_;
  }
  return a_;
}

std::string InitLaw::describe() const {
  std::ostringstream s;
  switch (kind_) {
    case Kind::Constant: s << "constant(" << a_ << ")"; break;
    case Kind::Exponential: s << "exponential(mean=" << a_ << ")"; break;
    case Kind::Uniform: s << "uniform(" << a_ << "," << b_ << ")"; break;
  }
  return s.str();
}

std::vector<double> sample_initial_potentials(const InitLaw& law, std::size_t n, RngStream& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = law.sample(rng);
  return x;
}

}  // namespace spikenet

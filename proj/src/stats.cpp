#include "spikenet/stats.hpp"

#include <algorithm>

#include "spikenet/error.hpp"

namespace spikenet {

void RunningStats::merge(const RunningStats& o) noexcept {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double n = static_cast<double>(n_ + o.n_);
  const double d = o.mean_ - mean_;
  mean_ += d * static_cast<double>(o.n_) / n;
  m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  n_ += o.n_;
}

Estimate mean_estimate(std::span<const double> xs, double z) {
  if (xs.empty()) fail(ErrorCode::EmptyDistribution, "mean of an empty sample");
  RunningStats s;
  for (double x : xs) s.push(x);
  return {s.mean(), s.standard_error(), z * s.standard_error(), s.count()};
}

Estimate batch_mean_estimate(std::span<const double> xs, std::size_t batches, double z) {
  if (xs.empty()) fail(ErrorCode::EmptyDistribution, "mean of an empty sample");
  batches = std::clamp<std::size_t>(batches, 1, xs.size());
  if (batches < 2) return mean_estimate(xs, z);
  RunningStats total;
  RunningStats between;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * xs.size() / batches;
    const std::size_t hi = (b + 1) * xs.size() / batches;
    RunningStats s;
    for (std::size_t i = lo; i < hi; ++i) s.push(xs[i]);
    between.push(s.mean());
    total.merge(s);
  }
  const double se = between.standard_error();
  return {total.mean(), se, z * se, xs.size()};
}

}  // namespace spikenet

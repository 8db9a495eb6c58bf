#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace spikenet {

/// Two-sided normal quantiles. Comparisons against a target (residuals,
/// bound envelopes) use the wider level; reported intervals use 95%.
inline constexpr double kCiZ = 1.959963984540054;
inline constexpr double kZeroCheckZ = 2.5758293035489004;

/// Welford accumulator.
class RunningStats {
 public:
  void push(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const RunningStats& o) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const noexcept { return std::sqrt(variance()); }
  double standard_error() const noexcept {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  double ci_half = 0.0;
  std::size_t samples = 0;

  double lo() const noexcept { return value - ci_half; }
  double hi() const noexcept { return value + ci_half; }
  bool contains(double x) const noexcept { return lo() <= x && x <= hi(); }
};

/// Sample mean with a normal-approximation interval at quantile z.
Estimate mean_estimate(std::span<const double> xs, double z = kCiZ);

/// Mean of `xs` with the standard error taken from `batches` contiguous
/// batch means, for serially or cross-sectionally correlated samples.
Estimate batch_mean_estimate(std::span<const double> xs, std::size_t batches, double z = kCiZ);

}  // namespace spikenet

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spikenet/core.hpp"
#include "spikenet/stats.hpp"

namespace spikenet {

/// Sorted, nonempty, nonnegative samples with uniform weights.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> samples);
  /// Wraps data the caller guarantees sorted; checked in debug builds only.
  static EmpiricalDistribution from_sorted(std::vector<double> sorted);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  struct Sorted {};
  EmpiricalDistribution(std::vector<double> sorted, Sorted) : samples_(std::move(sorted)) {}
  std::vector<double> samples_;
};

/// Exact W1 between two empirical laws given as ascending spans: the L1
/// distance between quantile functions over the merged partition of [0,1].
double w1_sorted(std::span<const double> a, std::span<const double> b);

double w1_empirical(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// Sample mean of omega(x, 0) with a 95% normal interval.
Estimate mean_omega(const EmpiricalDistribution& samples, const ModelParams& params);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value
/// (small-sample corrected argument). Both sides need >= 25 samples.
KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// Survival function of the Kolmogorov distribution.
double kolmogorov_survival(double lambda) noexcept;

enum class FitMode { LogLog, LogX, LogY };

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  /// Half-width of the 95% slope interval: Student t with n-2 degrees of
  /// freedom for unweighted fits, normal when y uncertainties are given.
  double slope_ci_half = 0.0;

  double slope_lo() const noexcept { return slope - slope_ci_half; }
  double slope_hi() const noexcept { return slope + slope_ci_half; }
};

/// Least squares on (ln x, ln y), (ln x, y) or (x, ln y). With `y_sigmas` the fit is
/// weighted by the transformed-axis variances (sigma / y on the log axis)
/// and standard errors come from those variances.
FitResult fit_log_scaling(std::span<const double> x, std::span<const double> y, FitMode mode,
                          std::optional<std::span<const double>> y_sigmas = std::nullopt);

/// Sample median with the distribution-free 95% order-statistic interval.
/// +inf entries (censored observations) are allowed and sort last.
Estimate median_estimate(std::span<const double> xs);

}  // namespace spikenet

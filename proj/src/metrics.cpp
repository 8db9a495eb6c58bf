#include "spikenet/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cassert>
#include <cmath>

#include "spikenet/error.hpp"

namespace spikenet {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples) {
  if (samples.empty()) fail(ErrorCode::EmptyDistribution, "empirical distribution is empty");
  for (double v : samples)
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(ErrorCode::InvalidArgument, "empirical samples must be finite and >= 0");
  std::sort(samples.begin(), samples.end());
  samples_ = std::move(samples);
}

EmpiricalDistribution EmpiricalDistribution::from_sorted(std::vector<double> sorted) {
  if (sorted.empty()) fail(ErrorCode::EmptyDistribution, "empirical distribution is empty");
  assert(std::is_sorted(sorted.begin(), sorted.end()));
  return {std::move(sorted), Sorted{}};
}

double w1_sorted(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::EmptyDistribution, "W1 of an empty sample");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(n);
  }
  // Quantile cells of a end at (i+1)/n, those of b at (j+1)/m; compare
  // breakpoints in integers ((i+1)*m vs (j+1)*n) so ties are exact.
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t u = 0;  // current position in units of 1/(n*m)
  double acc = 0.0;
  while (i < n && j < m) {
    const std::size_t end_a = (i + 1) * m;
    const std::size_t end_b = (j + 1) * n;
    const std::size_t end = std::min(end_a, end_b);
    acc += static_cast<double>(end - u) * std::abs(a[i] - b[j]);
    u = end;
    if (end_a == end) ++i;
    if (end_b == end) ++j;
  }
  return acc / (static_cast<double>(n) * static_cast<double>(m));
}

double w1_empirical(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  return w1_sorted(a.samples(), b.samples());
}

Estimate mean_omega(const EmpiricalDistribution& samples, const ModelParams& params) {
  RunningStats s;
  for (double x : samples.samples()) s.push(omega_distance(x, 0.0, params));
  return {s.mean(), s.standard_error(), kCiZ * s.standard_error(), s.count()};
}

double kolmogorov_survival(double lambda) noexcept {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  if (a.size() < 25 || b.size() < 25)
    fail(ErrorCode::TooFewSamples, "KS test needs at least 25 samples per side");
  const auto xa = a.samples();
  const auto xb = b.samples();
  const double n = static_cast<double>(xa.size());
  const double m = static_cast<double>(xb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double v = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] == v) ++i;
    while (j < xb.size() && xb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double en = std::sqrt(n * m / (n + m));
  return {d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

FitResult fit_log_scaling(std::span<const double> x, std::span<const double> y, FitMode mode,
                          std::optional<std::span<const double>> y_sigmas) {
  if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "fit needs equally many x and y");
  if (x.size() < 3) fail(ErrorCode::InvalidArgument, "fit needs at least 3 points");
  if (y_sigmas && y_sigmas->size() != y.size())
    fail(ErrorCode::InvalidArgument, "fit needs one sigma per point");
  const std::size_t n = x.size();
  std::vector<double> u(n), v(n), w(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k]))
      fail(ErrorCode::InvalidArgument, "fit values must be finite");
    const bool log_y = mode != FitMode::LogX;
    if (mode == FitMode::LogY) {
      u[k] = x[k];
    } else {
      if (!(x[k] > 0.0)) fail(ErrorCode::NonPositiveValue, "log of a nonpositive x value");
      u[k] = std::log(x[k]);
    }
    if (log_y) {
      if (!(y[k] > 0.0)) fail(ErrorCode::NonPositiveValue, "log of a nonpositive y value");
      v[k] = std::log(y[k]);
    } else {
      v[k] = y[k];
    }
    if (y_sigmas) {
      double s = (*y_sigmas)[k];
      if (log_y) s /= y[k];
      if (!(s > 0.0) || !std::isfinite(s))
        fail(ErrorCode::InvalidArgument, "fit sigmas must be finite and > 0");
      w[k] = 1.0 / (s * s);
    }
  }
  double sw = 0.0, su = 0.0, sv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sw += w[k];
    su += w[k] * u[k];
    sv += w[k] * v[k];
  }
  const double ubar = su / sw;
  const double vbar = sv / sw;
  double suu = 0.0, suv = 0.0, svv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    suu += w[k] * (u[k] - ubar) * (u[k] - ubar);
    suv += w[k] * (u[k] - ubar) * (v[k] - vbar);
    svv += w[k] * (v[k] - vbar) * (v[k] - vbar);
  }
  if (!(suu > 0.0)) fail(ErrorCode::InvalidArgument, "fit needs at least two distinct x values");
  FitResult f;
  f.points = n;
  f.slope = suv / suu;
  f.intercept = vbar - f.slope * ubar;
  double rss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = v[k] - f.intercept - f.slope * u[k];
    rss += w[k] * e * e;
  }
  f.r2 = svv > 0.0 ? 1.0 - rss / svv : 1.0;
  if (y_sigmas) {
    f.slope_se = std::sqrt(1.0 / suu);
    f.intercept_se = std::sqrt(1.0 / sw + ubar * ubar / suu);
    f.slope_ci_half = kCiZ * f.slope_se;
  } else {
    const double dof = static_cast<double>(n - 2);
    const double s2 = rss / dof;
    f.slope_se = std::sqrt(s2 / suu);
    f.intercept_se = std::sqrt(s2 * (1.0 / sw + ubar * ubar / suu));
    const boost::math::students_t dist(dof);
    f.slope_ci_half = boost::math::quantile(boost::math::complement(dist, 0.025)) * f.slope_se;
  }
  return f;
}

Estimate median_estimate(std::span<const double> xs) {
  if (xs.empty()) fail(ErrorCode::EmptyDistribution, "median of an empty sample");
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const double med = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  // Ranks n/2 -+ z sqrt(n)/2 bracket the median with ~95% coverage.
  const double half = kCiZ * std::sqrt(static_cast<double>(n)) / 2.0;
  const auto lo = static_cast<std::size_t>(
      std::clamp(std::floor(static_cast<double>(n) / 2.0 - half), 0.0, static_cast<double>(n - 1)));
  const auto hi = static_cast<std::size_t>(
      std::clamp(std::ceil(static_cast<double>(n) / 2.0 + half), 0.0, static_cast<double>(n - 1)));
  Estimate e;
  e.value = med;
  e.samples = n;
  // Half-width of the (possibly asymmetric) interval, symmetrised.
  e.ci_half = 0.5 * (s[hi] - s[lo]);
  e.se = e.ci_half / kCiZ;
  return e;
}

}  // namespace spikenet

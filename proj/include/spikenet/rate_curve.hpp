#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spikenet {

/// Piecewise-linear nonnegative rate on a uniform grid t0 + k*dt.
///
/// The running integral R(t) is exact per segment (trapezoids) and is
/// precomputed at the nodes, so evaluation and inversion are O(log n).
/// A terminal curve means "no activity after the right endpoint": sampling
/// past the end returns +inf instead of OutOfDomain.
class RateCurve {
 public:
  RateCurve() = default;
  RateCurve(double t0, double dt, std::vector<double> values, bool terminal = false);

  static RateCurve constant(double t0, double dt, std::size_t nodes, double value,
                            bool terminal = false);

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  double t_end() const noexcept { return t0_ + dt_ * static_cast<double>(segments()); }
  std::size_t nodes() const noexcept { return values_.size(); }
  std::size_t segments() const noexcept { return values_.empty() ? 0 : values_.size() - 1; }
  bool terminal() const noexcept { return terminal_; }
  void set_terminal(bool terminal) noexcept { terminal_ = terminal; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> cumulative_nodes() const noexcept { return cumulative_; }
  double time_at(std::size_t k) const noexcept { return t0_ + dt_ * static_cast<double>(k); }

  bool contains(double t) const noexcept;
  double value(double t) const;
  /// R(t) = integral of r from t0 to t.
  double cumulative(double t) const;

  /// Smallest s >= t_start with R(s) - R(t_start) = increment, or nullopt if
  /// the curve ends first.
  std::optional<double> time_at_increment(double t_start, double increment) const;

  /// CSV with columns t,r,R.
  void write_csv(std::ostream& out) const;
  static RateCurve read_csv(std::istream& in, bool terminal = false);

 private:
  std::size_t segment_of(double t) const noexcept;

  double t0_ = 0.0;
  double dt_ = 1.0;
  std::vector<double> values_;
  std::vector<double> cumulative_;
  bool terminal_ = false;
};

}  // namespace spikenet

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace spikenet {

/// Values of every ensemble path at one time; index i is path i at every
/// snapshot of the same run.
struct EnsembleSnapshot {
  double time = 0.0;
  std::vector<double> values;
};

/// Sorted reference samples of law(Z_t) at a list of increasing times.
/// Row lookup is by the largest stored time not after t.
class QuantileTable {
 public:
  QuantileTable() = default;
  /// Rows are sorted on insertion.
  void add_row(double time, std::vector<double> samples);

  bool empty() const noexcept { return times_.empty(); }
  std::size_t rows() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> row(std::size_t k) const { return rows_.at(k); }
  std::size_t row_size(std::size_t k) const { return rows_.at(k).size(); }
  /// Smallest row size, the M reported next to chaos results.
  std::size_t min_row_size() const noexcept;

  double first_time() const;
  double last_time() const;
  /// Index of the row for time t; OutOfDomain when t precedes the first row.
  std::size_t row_index_at(double t) const;
  std::span<const double> row_at(double t) const { return row(row_index_at(t)); }
  /// Row whose time is within 1e-9 of t; OutOfDomain otherwise.
  std::span<const double> row_exact(double t) const;
  double max_value() const noexcept { return max_value_; }

  /// Text format: one line per row, "t,v1,v2,...,vM".
  void write(std::ostream& out) const;
  static QuantileTable read(std::istream& in);

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> rows_;
  double max_value_ = 0.0;
};

}  // namespace spikenet

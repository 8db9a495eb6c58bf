#include "spikenet/quantile_table.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "spikenet/error.hpp"
#include "spikenet/io.hpp"

namespace spikenet {

namespace {
constexpr double kTimeSlack = 1e-9;
}

void QuantileTable::add_row(double time, std::vector<double> samples) {
  if (samples.empty()) fail(ErrorCode::EmptyReference, "quantile table row is empty");
  if (!times_.empty() && !(time > times_.back()))
    fail(ErrorCode::InvalidArgument, "quantile table times must increase");
  for (double v : samples)
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(ErrorCode::InvalidArgument, "quantile table entries must be finite and >= 0");
  std::sort(samples.begin(), samples.end());
  max_value_ = std::max(max_value_, samples.back());
  times_.push_back(time);
  rows_.push_back(std::move(samples));
}

std::size_t QuantileTable::min_row_size() const noexcept {
  std::size_t m = 0;
  for (const auto& r : rows_) m = m == 0 ? r.size() : std::min(m, r.size());
  return m;
}

double QuantileTable::first_time() const {
  if (empty()) fail(ErrorCode::EmptyReference, "quantile table has no rows");
  return times_.front();
}

double QuantileTable::last_time() const {
  if (empty()) fail(ErrorCode::EmptyReference, "quantile table has no rows");
  return times_.back();
}

std::size_t QuantileTable::row_index_at(double t) const {
  if (empty()) fail(ErrorCode::EmptyReference, "quantile table has no rows");
  if (t < times_.front() - kTimeSlack) fail(ErrorCode::OutOfDomain, "time precedes the quantile table");
  auto it = std::upper_bound(times_.begin(), times_.end(), t + kTimeSlack);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

std::span<const double> QuantileTable::row_exact(double t) const {
  const std::size_t k = row_index_at(t);
  if (std::abs(times_[k] - t) > kTimeSlack)
    fail(ErrorCode::OutOfDomain, "quantile table has no row at t=" + fmt_double(t));
  return rows_[k];
}

void QuantileTable::write(std::ostream& out) const {
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    out << fmt_double(times_[k]);
    for (double v : rows_[k]) out << ',' << fmt_double(v);
    out << '\n';
  }
}

QuantileTable QuantileTable::read(std::istream& in) {
  QuantileTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    const double t = std::stod(cell);
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    table.add_row(t, std::move(values));
  }
  if (table.empty()) fail(ErrorCode::IoError, "quantile table file has no rows");
  return table;
}

}  // namespace spikenet

#include "spikenet/rate_curve.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "spikenet/error.hpp"
#include "spikenet/io.hpp"

namespace spikenet {

RateCurve::RateCurve(double t0, double dt, std::vector<double> values, bool terminal)
    : t0_(t0), dt_(dt), values_(std::move(values)), terminal_(terminal) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "rate curve dt must be > 0");
  if (values_.size() < 2) fail(ErrorCode::InvalidArgument, "rate curve needs at least two nodes");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(ErrorCode::InvalidArgument, "rate curve values must be finite and >= 0");
  }
  cumulative_.resize(values_.size());
  cumulative_[0] = 0.0;
  for (std::size_t k = 1; k < values_.size(); ++k)
    cumulative_[k] = cumulative_[k - 1] + 0.5 * dt_ * (values_[k - 1] + values_[k]);
}

RateCurve RateCurve::constant(double t0, double dt, std::size_t nodes, double value,
                              bool terminal) {
  return RateCurve(t0, dt, std::vector<double>(nodes, value), terminal);
}

bool RateCurve::contains(double t) const noexcept {
  // Grid round-off at the right end is forgiven.
  return t >= t0_ && t <= t_end() + 1e-9 * dt_;
}

std::size_t RateCurve::segment_of(double t) const noexcept {
  const double pos = (t - t0_) / dt_;
  if (pos <= 0.0) return 0;
  auto k = static_cast<std::size_t>(pos);
  return std::min(k, segments() - 1);
}

double RateCurve::value(double t) const {
  if (!contains(t)) fail(ErrorCode::OutOfDomain, "time outside rate curve domain");
  const std::size_t k = segment_of(t);
  const double s = std::min(t - time_at(k), dt_);
  const double slope = (values_[k + 1] - values_[k]) / dt_;
  return std::max(0.0, values_[k] + slope * s);
}

double RateCurve::cumulative(double t) const {
  if (!contains(t)) fail(ErrorCode::OutOfDomain, "time outside rate curve domain");
  const std::size_t k = segment_of(t);
  const double s = std::clamp(t - time_at(k), 0.0, dt_);
  const double slope = (values_[k + 1] - values_[k]) / dt_;
  return cumulative_[k] + values_[k] * s + 0.5 * slope * s * s;
}

std::optional<double> RateCurve::time_at_increment(double t_start, double increment) const {
  if (!contains(t_start)) fail(ErrorCode::OutOfDomain, "start time outside rate curve domain");
  const double target = cumulative(t_start) + increment;
  if (!(target < cumulative_.back())) return std::nullopt;
  // First node with cumulative > target closes the segment holding the event.
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  k = std::max(k, segment_of(t_start));
  const double a = values_[k];
  const double slope = (values_[k + 1] - values_[k]) / dt_;
  const double remaining = target - cumulative_[k];
  // Stable root of a*s + slope*s^2/2 = remaining.
  const double disc = std::max(0.0, a * a + 2.0 * slope * remaining);
  const double denom = a + std::sqrt(disc);
  double s = denom > 0.0 ? 2.0 * remaining / denom : dt_;
  s = std::clamp(s, 0.0, dt_);
  return std::max(t_start, time_at(k) + s);
}

void RateCurve::write_csv(std::ostream& out) const {
  out << "t,r,R\n";
  for (std::size_t k = 0; k < values_.size(); ++k)
    out << fmt_double(time_at(k)) << ',' << fmt_double(values_[k]) << ','
        << fmt_double(cumulative_[k]) << '\n';
}

RateCurve RateCurve::read_csv(std::istream& in, bool terminal) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,r", 0) != 0)
    fail(ErrorCode::IoError, "rate CSV must start with a t,r,R header");
  std::vector<double> ts;
  std::vector<double> rs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    ts.push_back(std::stod(cell));
    std::getline(row, cell, ',');
    rs.push_back(std::stod(cell));
  }
  if (ts.size() < 2) fail(ErrorCode::IoError, "rate CSV needs at least two rows");
  const double dt = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
  return RateCurve(ts.front(), dt, std::move(rs), terminal);
}

}  // namespace spikenet

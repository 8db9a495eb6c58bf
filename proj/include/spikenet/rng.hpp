#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace spikenet {

/// Counter-based random stream keyed by a hash of (root seed, path).
///
/// Output k is a SplitMix-style finaliser applied to `key + k * gamma`, where
/// both `key` and the odd increment `gamma` are derived from the path. Equal
/// paths replay bit-identical sequences no matter which worker owns them;
/// `child` is the only way to hand randomness to another consumer.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t root_seed);
  RngStream(std::uint64_t root_seed, std::initializer_list<std::uint64_t> path);

  /// A fresh stream whose path extends this one's by `id`. Independent of how
  /// many draws the parent has made.
  RngStream child(std::uint64_t id) const;
  RngStream child(std::uint64_t a, std::uint64_t b) const { return child(a).child(b); }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return finalise(key_ + counter_ * increment_);
  }
  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Unit-mean exponential.
  double exponential() noexcept { return -std::log1p(-uniform()); }

  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t draws() const noexcept { return counter_; }

 private:
  RngStream(std::uint64_t key, std::uint64_t increment, int) noexcept
      : key_(key), increment_(increment) {}

  static std::uint64_t finalise(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t increment_for(std::uint64_t key) noexcept;

  std::uint64_t key_ = 0;
  std::uint64_t increment_ = 0x9e3779b97f4a7c15ULL;
  std::uint64_t counter_ = 0;
};

/// Stream ids used for the third path component.
namespace stream_id {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kDynamics = 2;
inline constexpr std::uint64_t kCoupling = 3;
inline constexpr std::uint64_t kAux = 4;
}  // namespace stream_id

}  // namespace spikenet

#include "spikenet/rng.hpp"

#include <bit>

namespace spikenet {

namespace {

std::uint64_t mix_key(std::uint64_t z) noexcept {
  z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
  z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
  return z ^ (z >> 33);
}

std::uint64_t absorb(std::uint64_t key, std::uint64_t id) noexcept {
  return mix_key(key ^ mix_key(id + 0x9e3779b97f4a7c15ULL) ^ 0x632be59bd9b4e019ULL);
}

}  // namespace

std::uint64_t RngStream::increment_for(std::uint64_t key) noexcept {
  std::uint64_t z = mix_key(key + 0xd1b54a32d192ed03ULL) | 1ULL;
  // Weyl increments with few bit transitions give visibly correlated output.
  if (std::popcount(z ^ (z >> 1)) < 24) z ^= 0xaaaaaaaaaaaaaaaaULL;
  return z;
}

RngStream::RngStream(std::uint64_t root_seed) {
  key_ = mix_key(root_seed ^ 0x5851f42d4c957f2dULL);
  increment_ = increment_for(key_);
}

RngStream::RngStream(std::uint64_t root_seed, std::initializer_list<std::uint64_t> path)
    : RngStream(root_seed) {
  for (auto id : path) key_ = absorb(key_, id);
  increment_ = increment_for(key_);
}

RngStream RngStream::child(std::uint64_t id) const {
  const std::uint64_t k = absorb(key_, id);
  return RngStream(k, increment_for(k), 0);
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace spikenet

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace vlsm {

// Counter-based stream RNG. Every stream is derived from (seed, stream_index)
// alone, so permutation i can be regenerated without replaying permutations
// 0..i-1. The mixer is the splitmix64 finalizer (Steele et al. 2014), driven
// by a Weyl sequence per stream.
class StreamRng {
public:
  StreamRng(uint64_t seed, uint64_t stream) noexcept
      : state_(mix64(seed ^ 0x6A09E667F3BCC909ull) ^ mix64(stream + 0x9E3779B97F4A7C15ull)) {}

  uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // Unbiased integer in [0, n). Lemire's multiply-with-rejection method.
  uint64_t next_below(uint64_t n) noexcept {
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      uint64_t floor = (0 - n) % n;
      while (lo < floor) {
        m = static_cast<__uint128_t>(next_u64()) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; caches the second deviate.
  double next_gaussian() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  static uint64_t mix64(uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> values, StreamRng& rng) {
  for (size_t j = values.size(); j > 1; --j) {
    const size_t k = static_cast<size_t>(rng.next_below(j));
    std::swap(values[j - 1], values[k]);
  }
}

// k distinct indices drawn uniformly from {0..n-1}, returned in ascending order.
std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k, StreamRng& rng);

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/rng.hpp"

#include <algorithm>
#include <numeric>

namespace vlsm {

std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k, StreamRng& rng) {
  std::vector<uint32_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0u);
  for (uint32_t j = 0; j < k; ++j) {
    const auto pick = j + static_cast<uint32_t>(rng.next_below(n - j));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vlsm {

// FNV-1a 64-bit, used for content hashes of cohorts/configs. Not cryptographic;
// it only keys cache files against accidental input drift.
class Fnv1a {
public:
  void update(const void* data, size_t len) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001B3ull;
    }
  }
  void update_u64(uint64_t v) noexcept { update(&v, sizeof v); }
  void update_i64(int64_t v) noexcept { update(&v, sizeof v); }
  void update_double(double v) noexcept {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    update_u64(bits);
  }
  void update_string(const std::string& s) noexcept {
    update_u64(s.size());
    update(s.data(), s.size());
  }
  uint64_t value() const noexcept { return hash_; }

private:
  uint64_t hash_ = 0xCBF29CE484222325ull;
};

std::string hex64(uint64_t v);

// Deterministic numeric formatting for CSV/JSON bodies (C locale, fixed
// significant digits) so identical doubles always print identically.
std::string fmt_double(double v, int significant = 10);
// e.g. format_percent(0.0655, 1) == "6.5%"
std::string format_percent(double fraction, int decimals);

// Runs fn(begin, end, worker_id) over [0, n) split into contiguous chunks,
// one chunk per worker. workers == 0 means hardware concurrency. Output must
// be written to per-index slots; chunking never affects results.
void parallel_for_chunks(size_t n, unsigned workers,
                         const std::function<void(size_t, size_t, unsigned)>& fn);
unsigned resolve_workers(unsigned requested);

// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vlsm/cluster.hpp"
#include "vlsm/cohort.hpp"
#include "vlsm/voxelstats.hpp"

namespace vlsm {

inline std::vector<double> default_p_thresholds() {
  return {0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001};
}

struct PermutationPlan {
  uint64_t seed = 0;
  uint32_t n_perms = 0;
  uint32_t n_subjects = 0;
  std::vector<std::vector<uint32_t>> orders;  // orders[i] permutes 0..N-1
};

// Independent Fisher-Yates shuffles; order i is derivable from (seed, i)
// alone, so workers can regenerate any permutation without coordination.
// The identity permutation is not excluded.
PermutationPlan generate_permutations(uint32_t n_subjects, uint32_t n_perms, uint64_t seed);
std::vector<uint32_t> permutation_order(uint64_t seed, uint32_t index, uint32_t n_subjects);

struct CollectConfig {
  uint32_t top_k = 1000;
  std::vector<double> p_thresholds = default_p_thresholds();
  Tails tails = Tails::one_sided;
  Connectivity connectivity = Connectivity::twentysix;
  DegeneratePolicy degenerate = DegeneratePolicy::error;
  double t_max = 1e6;
};

// Per-permutation summaries: the K largest stat values plus, per configured
// p-threshold, every supra-threshold cluster size and the maximum.
struct NullRecord {
  uint32_t perm_index = 0;
  std::vector<double> top_t;                         // descending, size K
  std::vector<std::vector<uint32_t>> cluster_sizes;  // [threshold][cluster]
  std::vector<uint32_t> max_cluster;                 // [threshold]
  std::vector<uint32_t> supra_count;                 // [threshold]
};

struct NullDistribution {
  CollectConfig collect;
  uint64_t seed = 0;
  uint32_t n_perms = 0;
  uint32_t n_subjects = 0;
  uint32_t df = 0;
  uint64_t mask_voxels = 0;
  std::vector<double> t_cutoffs;  // stat-value cutoff per p-threshold
  uint64_t content_hash = 0;      // over (cohort, scores, collect, seed)
  std::vector<NullRecord> records;

  size_t threshold_index(double p_threshold) const;  // throws if absent
};

// One fused pass: for each permutation, reorder scores, compute the t map,
// record top-K and all-threshold cluster stats. Records land in fixed slots,
// so results are identical for any worker count.
NullDistribution run_permutation_pass(const CohortMatrix& cohort, const ScoreVector& scores,
                                      const PermutationPlan& plan, const CollectConfig& collect,
                                      unsigned workers = 0);

// k-th largest with duplicates counted (k is 1-based).
double kth_largest(std::span<const double> values, size_t k);

uint64_t null_content_hash(const CohortMatrix& cohort, const ScoreVector& scores,
                           const CollectConfig& collect, uint64_t seed, uint32_t n_perms);

// Cache container: "VLSMNULL" magic, JSON metadata block, then fixed-width
// little-endian arrays. Layout documented in docs/null-cache-format.md.
void save_null_cache(const NullDistribution& null, const std::string& path);
NullDistribution load_null_cache(const std::string& path);

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "support/oracles.hpp"
#include "vlsm/cluster.hpp"
#include "vlsm/rng.hpp"

using namespace vlsm;

namespace {

std::vector<int64_t> random_supra(const GridShape& grid, double p, uint64_t seed) {
  std::vector<int64_t> out;
  StreamRng rng(seed, 0);
  for (int64_t j = 0; j < grid.voxel_count(); ++j)
    if (rng.next_double() < p) out.push_back(j);
  return out;
}

// partition from a labeling, as sorted components
std::vector<std::vector<int64_t>> partition_of(const ClusterLabeling& labeling,
                                               const std::vector<int64_t>& universe) {
  std::map<uint32_t, std::vector<int64_t>> by_label;
  for (size_t p = 0; p < universe.size(); ++p)
    if (labeling.labels[p] != 0) by_label[labeling.labels[p]].push_back(universe[p]);
  std::vector<std::vector<int64_t>> out;
  for (auto& [label, comp] : by_label) {
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("single voxel gives one cluster of size one") {
  const GridShape grid{{4, 4, 4}, {1, 1, 1}};
  std::vector<int64_t> supra{grid.linear_index(1, 2, 3)};
  const auto labeling = label_components(supra, grid, Connectivity::twentysix);
  CHECK(labeling.n_clusters() == 1);
  CHECK(labeling.sizes == std::vector<uint32_t>{1});
  CHECK(max_cluster_size(labeling) == 1);
}

TEST_CASE("corner-sharing voxels: one 26-cluster, two 6-clusters, two 18-clusters") {
  const GridShape grid{{4, 4, 4}, {1, 1, 1}};
  std::vector<int64_t> supra{grid.linear_index(0, 0, 0), grid.linear_index(1, 1, 1)};
  auto s26 = supra, s6 = supra, s18 = supra;
  CHECK(label_components(s26, grid, Connectivity::twentysix).n_clusters() == 1);
  CHECK(label_components(s6, grid, Connectivity::six).n_clusters() == 2);
  CHECK(label_components(s18, grid, Connectivity::eighteen).n_clusters() == 2);
}

TEST_CASE("edge-sharing voxels join under 18 but not 6") {
  const GridShape grid{{4, 4, 4}, {1, 1, 1}};
  std::vector<int64_t> supra{grid.linear_index(0, 0, 0), grid.linear_index(1, 1, 0)};
  auto s6 = supra, s18 = supra;
  CHECK(label_components(s18, grid, Connectivity::eighteen).n_clusters() == 1);
  CHECK(label_components(s6, grid, Connectivity::six).n_clusters() == 2);
}

TEST_CASE("empty set gives zero clusters") {
  const GridShape grid{{4, 4, 4}, {1, 1, 1}};
  std::vector<int64_t> supra;
  const auto labeling = label_components(supra, grid, Connectivity::twentysix);
  CHECK(labeling.n_clusters() == 0);
  CHECK(max_cluster_size(labeling) == 0);
}

TEST_CASE("random fields match the flood-fill oracle as a partition") {
  const GridShape grid{{20, 20, 20}, {1, 1, 1}};
  for (int conn : {6, 18, 26}) {
    for (uint64_t seed = 0; seed < 6; ++seed) {
      auto supra = random_supra(grid, 0.3, 500 + seed);
      const auto labeling = label_components(
          supra, grid, static_cast<Connectivity>(conn));
      const auto mine = partition_of(labeling, supra);
      const auto ref = oracle::flood_fill_components(supra, grid, conn);
      CHECK(mine == ref);
      // max size agrees with the oracle's max component
      uint32_t ref_max = 0;
      for (const auto& comp : ref) ref_max = std::max<uint32_t>(ref_max, comp.size());
      CHECK(max_cluster_size(labeling) == ref_max);
    }
  }
}

TEST_CASE("labels are dense, deterministic, ordered by minimum linear index") {
  const GridShape grid{{15, 15, 15}, {1, 1, 1}};
  auto supra = random_supra(grid, 0.2, 9);
  const auto labeling = label_components(supra, grid, Connectivity::six);
  // min linear index per label must be increasing with the label
  std::vector<int64_t> first_seen(labeling.n_clusters() + 1, -1);
  for (size_t p = 0; p < supra.size(); ++p) {
    const uint32_t lab = labeling.labels[p];
    if (first_seen[lab] < 0) first_seen[lab] = supra[p];
  }
  for (uint32_t lab = 2; lab <= labeling.n_clusters(); ++lab)
    CHECK(first_seen[lab] > first_seen[lab - 1]);
  // sizes sum to the supra count (partition property)
  uint64_t total = 0;
  for (uint32_t s : labeling.sizes) total += s;
  CHECK(total == supra.size());
}

TEST_CASE("adding voxels never decreases the max cluster size") {
  const GridShape grid{{12, 12, 12}, {1, 1, 1}};
  StreamRng rng(77, 0);
  std::vector<int64_t> all(grid.voxel_count());
  for (int64_t j = 0; j < grid.voxel_count(); ++j) all[j] = j;
  shuffle(std::span<int64_t>(all), rng);
  std::set<int64_t> grow;
  uint32_t prev_max = 0;
  for (size_t step = 0; step < 400; ++step) {
    grow.insert(all[step]);
    std::vector<int64_t> supra(grow.begin(), grow.end());
    const auto labeling = label_components(supra, grid, Connectivity::twentysix);
    const uint32_t m = max_cluster_size(labeling);
    CHECK(m >= prev_max);
    prev_max = m;
  }
}

TEST_CASE("every 6-cluster lies within exactly one 26-cluster") {
  const GridShape grid{{14, 14, 14}, {1, 1, 1}};
  auto supra = random_supra(grid, 0.25, 123);
  auto s26 = supra;
  const auto l6 = label_components(supra, grid, Connectivity::six);
  const auto l26 = label_components(s26, grid, Connectivity::twentysix);
  REQUIRE(supra == s26);  // both sorted identically
  std::map<uint32_t, std::set<uint32_t>> parent_labels;
  for (size_t p = 0; p < supra.size(); ++p)
    parent_labels[l6.labels[p]].insert(l26.labels[p]);
  for (const auto& [lab6, labs26] : parent_labels) CHECK(labs26.size() == 1);
}

TEST_CASE("mask-domain labeling with flags matches the sorted-set path") {
  const GridShape grid{{10, 10, 10}, {1, 1, 1}};
  auto universe = random_supra(grid, 0.5, 31);
  const MaskAdjacency adj(universe, grid, Connectivity::twentysix);
  StreamRng rng(32, 0);
  std::vector<uint8_t> flags(universe.size());
  for (auto& f : flags) f = rng.next_double() < 0.5;
  ClusterScratch scratch;
  ClusterLabeling from_flags;
  ClusterEngine::label(adj, flags, scratch, from_flags);

  std::vector<int64_t> supra;
  for (size_t p = 0; p < universe.size(); ++p)
    if (flags[p]) supra.push_back(universe[p]);
  auto copy = supra;
  const auto reference = label_components(copy, grid, Connectivity::twentysix);
  CHECK(from_flags.sizes == reference.sizes);
  // mask-domain labels restricted to flagged entries equal the set labels
  size_t q = 0;
  for (size_t p = 0; p < universe.size(); ++p)
    if (flags[p]) CHECK(from_flags.labels[p] == reference.labels[q++]);
}

TEST_CASE("labels_to_volume round-trips labels") {
  const GridShape grid{{6, 6, 6}, {1, 1, 1}};
  auto supra = random_supra(grid, 0.3, 15);
  const auto labeling = label_components(supra, grid, Connectivity::twentysix);
  const auto vol = labels_to_volume(labeling, supra, grid);
  CHECK(vol.dtype == VoxelType::int16);
  for (size_t p = 0; p < supra.size(); ++p)
    CHECK(vol.values[static_cast<size_t>(supra[p])] == static_cast<float>(labeling.labels[p]));
}

}  // TEST_SUITE

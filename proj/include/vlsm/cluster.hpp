// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vlsm/volume.hpp"

namespace vlsm {

enum class Connectivity : int { six = 6, eighteen = 18, twentysix = 26 };

// Labels are dense 1..n_clusters, assigned in ascending order of each
// cluster's minimum linear voxel index; 0 = background.
struct ClusterLabeling {
  std::vector<uint32_t> labels;  // parallel to the universe the call was made on
  std::vector<uint32_t> sizes;   // sizes[label - 1]

  uint32_t n_clusters() const { return static_cast<uint32_t>(sizes.size()); }
};

uint32_t max_cluster_size(const ClusterLabeling& labeling);

// Precomputed in-universe adjacency for a sorted list of linear voxel
// indices. Stores only "earlier" neighbors (lower position) so each edge is
// visited once; built once per (grid, universe, connectivity) and reused
// across permutations.
class MaskAdjacency {
public:
  MaskAdjacency() = default;
  MaskAdjacency(std::span<const int64_t> universe, const GridShape& grid,
                Connectivity connectivity);

  size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const uint32_t> earlier_neighbors(size_t pos) const {
    return {neighbors_.data() + offsets_[pos], neighbors_.data() + offsets_[pos + 1]};
  }
  Connectivity connectivity() const { return connectivity_; }

private:
  std::vector<uint64_t> offsets_;
  std::vector<uint32_t> neighbors_;
  Connectivity connectivity_ = Connectivity::twentysix;
};

// Reusable scratch for labeling many supra sets over the same universe
// without per-call allocation or clearing.
class ClusterScratch {
public:
  void resize(size_t n);
  friend class ClusterEngine;

private:
  std::vector<uint32_t> parent_;
  std::vector<uint32_t> root_label_;
  std::vector<uint64_t> stamp_;
  uint64_t generation_ = 0;
};

class ClusterEngine {
public:
  // flags: one byte per universe position, nonzero = supra-threshold.
  // Fills out.labels (parallel to the universe) and out.sizes.
  static void label(const MaskAdjacency& adj, std::span<const uint8_t> flags,
                    ClusterScratch& scratch, ClusterLabeling& out);
};

// Connected components of a supra-threshold voxel set. `supra` holds linear
// voxel indices on `grid` (any order, no duplicates); labels are returned
// parallel to the sorted supra set, which is also written back to `supra`.
ClusterLabeling label_components(std::vector<int64_t>& supra, const GridShape& grid,
                                 Connectivity connectivity);

// Label volume for export (int16 NIfTI), 0 = background.
Volume3D labels_to_volume(const ClusterLabeling& labeling,
                          std::span<const int64_t> universe, const GridShape& grid);

}  // namespace vlsm

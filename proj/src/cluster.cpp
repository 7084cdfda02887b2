// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
//
// Union-find connected components over an arbitrary voxel universe (analysis
// mask or supra set). The scratch arrays are generation-stamped so repeated
// labelings inside the permutation loop never clear memory.
#include "vlsm/cluster.hpp"

#include <algorithm>

#include "vlsm/error.hpp"

namespace vlsm {

namespace {

struct Offset {
  int di, dj, dk;
};

std::vector<Offset> neighbor_offsets(Connectivity c) {
  std::vector<Offset> out;
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const int manhattan = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (c == Connectivity::six && manhattan > 1) continue;
        if (c == Connectivity::eighteen && manhattan > 2) continue;
        out.push_back({di, dj, dk});
      }
  return out;
}

uint32_t find_root(std::vector<uint32_t>& parent, uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];  // path halving
    x = parent[x];
  }
  return x;
}

}  // namespace

uint32_t max_cluster_size(const ClusterLabeling& labeling) {
  uint32_t best = 0;
  for (uint32_t s : labeling.sizes) best = std::max(best, s);
  return best;
}

MaskAdjacency::MaskAdjacency(std::span<const int64_t> universe, const GridShape& grid,
                             Connectivity connectivity)
    : connectivity_(connectivity) {
  const auto offsets3d = neighbor_offsets(connectivity);
  const size_t n = universe.size();
  offsets_.assign(n + 1, 0);
  neighbors_.clear();
  for (size_t p = 0; p < n; ++p) {
    const int64_t lin = universe[p];
    if (p > 0 && universe[p] <= universe[p - 1])
      throw ValidationError("universe indices must be ascending and unique");
    if (lin < 0 || lin >= grid.voxel_count())
      throw ValidationError("voxel index out of grid bounds");
    const VoxelCoord c = grid.coord(lin);
    for (const auto& o : offsets3d) {
      const int32_t i = c.i + o.di, j = c.j + o.dj, k = c.k + o.dk;
      if (!grid.contains(i, j, k)) continue;
      const int64_t nlin = grid.linear_index(i, j, k);
      if (nlin >= lin) continue;  // keep each edge once
      const auto it = std::lower_bound(universe.begin(), universe.end(), nlin);
      if (it != universe.end() && *it == nlin)
        neighbors_.push_back(static_cast<uint32_t>(it - universe.begin()));
    }
    offsets_[p + 1] = neighbors_.size();
  }
}

void ClusterScratch::resize(size_t n) {
  if (parent_.size() < n) {
    parent_.resize(n);
    root_label_.resize(n);
    stamp_.resize(n, 0);
  }
}

void ClusterEngine::label(const MaskAdjacency& adj, std::span<const uint8_t> flags,
                          ClusterScratch& scratch, ClusterLabeling& out) {
  const size_t n = adj.size();
  if (flags.size() != n)
    throw ValidationError("supra flag count does not match the adjacency universe");
  scratch.resize(n);
  auto& parent = scratch.parent_;

  // Pass 1: union each supra voxel with earlier supra neighbors. Processing
  // positions in ascending order means parent entries are always valid for
  // this pass; no reset needed.
  for (size_t p = 0; p < n; ++p) {
    if (!flags[p]) continue;
    const auto pp = static_cast<uint32_t>(p);
    parent[pp] = pp;
    for (uint32_t q : adj.earlier_neighbors(p)) {
      if (!flags[q]) continue;
      const uint32_t rq = find_root(parent, q);
      const uint32_t rp = find_root(parent, pp);
      if (rq != rp) parent[std::max(rp, rq)] = std::min(rp, rq);
    }
  }

  // Pass 2: assign dense labels in order of first (= minimum linear index)
  // appearance and accumulate sizes.
  out.labels.assign(n, 0);
  out.sizes.clear();
  const uint64_t gen = ++scratch.generation_;
  for (size_t p = 0; p < n; ++p) {
    if (!flags[p]) continue;
    const uint32_t r = find_root(parent, static_cast<uint32_t>(p));
    if (scratch.stamp_[r] != gen) {
      scratch.stamp_[r] = gen;
      out.sizes.push_back(0);
      scratch.root_label_[r] = static_cast<uint32_t>(out.sizes.size());
    }
    const uint32_t lab = scratch.root_label_[r];
    out.labels[p] = lab;
    ++out.sizes[lab - 1];
  }
}

ClusterLabeling label_components(std::vector<int64_t>& supra, const GridShape& grid,
                                 Connectivity connectivity) {
  std::sort(supra.begin(), supra.end());
  if (std::adjacent_find(supra.begin(), supra.end()) != supra.end())
    throw ValidationError("supra set contains duplicate voxel indices");
  const MaskAdjacency adj(supra, grid, connectivity);
  ClusterScratch scratch;
  ClusterLabeling out;
  const std::vector<uint8_t> flags(supra.size(), 1);
  ClusterEngine::label(adj, flags, scratch, out);
  return out;
}

Volume3D labels_to_volume(const ClusterLabeling& labeling,
                          std::span<const int64_t> universe, const GridShape& grid) {
  if (labeling.labels.size() != universe.size())
    throw ValidationError("labeling does not match universe size");
  Volume3D v = make_volume(grid, VoxelType::int16, 0.0f);
  for (size_t p = 0; p < universe.size(); ++p)
    v.values[static_cast<size_t>(universe[p])] = static_cast<float>(labeling.labels[p]);
  return v;
}

}  // namespace vlsm

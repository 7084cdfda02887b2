// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "vlsm/error.hpp"
#include "vlsm/rng.hpp"
#include "vlsm/util.hpp"

namespace vlsm {

std::pair<uint32_t, uint32_t> MaskRule::resolve(uint32_t n_subjects) const {
  const auto fallback = static_cast<uint32_t>(
      std::max(2.0, std::ceil(0.05 * static_cast<double>(n_subjects))));
  return {min_lesioned.value_or(fallback), min_intact.value_or(fallback)};
}

void ScoreVector::validate(size_t n_subjects) const {
  if (values.size() != n_subjects)
    throw ValidationError("score count does not match subject count");
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("scores must be finite");
  if (!values.empty() &&
      std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; }))
    throw ValidationError("scores are all identical");
}

void RoiMask::validate(const GridShape& grid) const {
  if (voxels.empty()) throw ValidationError("ROI is empty");
  int64_t prev = -1;
  for (int64_t v : voxels) {
    if (v < 0 || v >= grid.voxel_count())
      throw ValidationError("ROI voxel index out of grid bounds");
    if (v <= prev) throw ValidationError("ROI voxel indices must be ascending and unique");
    prev = v;
  }
}

namespace {

void rebuild_columns(CohortMatrix& c) {
  const auto n_mask = c.mask_index.size();
  const auto n_sub = c.n_subjects();
  std::vector<uint32_t> counts(n_mask, 0);
  for (uint32_t s = 0; s < n_sub; ++s)
    for (size_t j = 0; j < n_mask; ++j)
      if (c.lesion_bits.get(s, static_cast<size_t>(c.mask_index[j]))) ++counts[j];
  c.col_offsets.assign(n_mask + 1, 0);
  for (size_t j = 0; j < n_mask; ++j) c.col_offsets[j + 1] = c.col_offsets[j] + counts[j];
  c.col_subjects.resize(c.col_offsets[n_mask]);
  std::vector<uint64_t> cursor(c.col_offsets.begin(), c.col_offsets.end() - 1);
  for (uint32_t s = 0; s < n_sub; ++s)
    for (size_t j = 0; j < n_mask; ++j)
      if (c.lesion_bits.get(s, static_cast<size_t>(c.mask_index[j])))
        c.col_subjects[cursor[j]++] = s;
}

}  // namespace

uint64_t CohortMatrix::content_hash() const {
  Fnv1a h;
  h.update_i64(grid.dims[0]);
  h.update_i64(grid.dims[1]);
  h.update_i64(grid.dims[2]);
  for (float v : grid.voxel_size) h.update_double(v);
  h.update_u64(subject_ids.size());
  for (const auto& id : subject_ids) h.update_string(id);
  h.update_u64(mask_index.size());
  for (int64_t m : mask_index) h.update_i64(m);
  // lesion status over mask columns only: the analysis never sees the rest
  for (uint32_t s = 0; s < n_subjects(); ++s) {
    uint64_t acc = 0;
    int nbits = 0;
    for (size_t j = 0; j < mask_index.size(); ++j) {
      acc = (acc << 1) | lesion_bits.get(s, static_cast<size_t>(mask_index[j]));
      if (++nbits == 64) {
        h.update_u64(acc);
        acc = 0;
        nbits = 0;
      }
    }
    if (nbits > 0) h.update_u64(acc);
  }
  return h.value();
}

CohortMatrix build_cohort(const std::vector<Volume3D>& volumes,
                          const std::vector<std::string>& subject_ids) {
  if (volumes.empty()) throw ValidationError("cohort needs at least one subject");
  if (volumes.size() != subject_ids.size())
    throw ValidationError("volume count does not match subject id count");
  std::unordered_set<std::string> seen;
  for (const auto& id : subject_ids)
    if (!seen.insert(id).second) throw ValidationError("duplicate subject id: " + id);

  const GridShape grid = volumes.front().grid;
  for (const auto& v : volumes) {
    if (!(v.grid == grid))
      throw ValidationError("all cohort volumes must share dims and voxel sizes");
    if (v.dtype != VoxelType::binary)
      throw ValidationError("lesion volumes must be binary (0/1)");
  }

  CohortMatrix c;
  c.subject_ids = subject_ids;
  c.grid = grid;
  const auto n_vox = static_cast<size_t>(grid.voxel_count());
  c.lesion_bits = BitMatrix(volumes.size(), n_vox);
  for (size_t s = 0; s < volumes.size(); ++s)
    for (size_t j = 0; j < n_vox; ++j)
      if (volumes[s].values[j] != 0.0f) c.lesion_bits.set(s, j, true);

  c.mask_index.resize(n_vox);
  for (size_t j = 0; j < n_vox; ++j) c.mask_index[j] = static_cast<int64_t>(j);
  rebuild_columns(c);
  return c;
}

std::vector<int64_t> compute_analysis_mask(const CohortMatrix& cohort,
                                           uint32_t min_lesioned, uint32_t min_intact) {
  if (min_lesioned < 1 || min_intact < 1)
    throw ValidationError("mask cutoffs must be >= 1");
  const auto n_sub = cohort.n_subjects();
  const auto n_vox = static_cast<size_t>(cohort.grid.voxel_count());
  std::vector<uint32_t> counts(n_vox, 0);
  for (uint32_t s = 0; s < n_sub; ++s)
    for (size_t j = 0; j < n_vox; ++j)
      if (cohort.lesion_bits.get(s, j)) ++counts[j];

  std::vector<int64_t> mask;
  for (size_t j = 0; j < n_vox; ++j) {
    const uint32_t lesioned = counts[j];
    const uint32_t intact = n_sub - lesioned;
    if (lesioned >= min_lesioned && intact >= min_intact)
      mask.push_back(static_cast<int64_t>(j));
  }
  if (mask.empty()) throw ValidationError("analysis mask is empty under the given cutoffs");
  return mask;
}

CohortMatrix apply_mask_rule(const CohortMatrix& cohort, MaskRule rule) {
  const auto [min_l, min_i] = rule.resolve(cohort.n_subjects());
  CohortMatrix out = cohort;
  out.mask_rule = rule;
  out.mask_index = compute_analysis_mask(cohort, min_l, min_i);
  rebuild_columns(out);
  return out;
}

ScoreVector percent_damage_score(const CohortMatrix& cohort, const RoiMask& roi) {
  roi.validate(cohort.grid);
  ScoreVector s;
  s.values.resize(cohort.n_subjects());
  const auto denom = static_cast<double>(roi.voxels.size());
  for (uint32_t sub = 0; sub < cohort.n_subjects(); ++sub) {
    size_t overlap = 0;
    for (int64_t v : roi.voxels)
      if (cohort.lesion_bits.get(sub, static_cast<size_t>(v))) ++overlap;
    s.values[sub] = static_cast<double>(overlap) / denom;
  }
  return s;
}

ScoreVector add_noise(const ScoreVector& scores, double sd, uint64_t seed) {
  if (sd < 0) throw ValidationError("noise sd must be >= 0");
  ScoreVector out = scores;
  if (sd == 0) return out;
  StreamRng rng(seed, 0x6E6F6973ull);  // dedicated noise stream
  for (auto& v : out.values) v += sd * rng.next_gaussian();
  return out;
}

std::pair<CohortMatrix, ScoreVector> subsample(const CohortMatrix& cohort,
                                               const ScoreVector& scores,
                                               double fraction, uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw ValidationError("subsample fraction must be in (0, 1]");
  scores.validate(cohort.n_subjects());
  const auto n = cohort.n_subjects();
  const auto k = static_cast<uint32_t>(std::lround(fraction * static_cast<double>(n)));
  if (k < 2) throw ValidationError("subsample would keep fewer than 2 subjects");

  std::vector<uint32_t> keep;
  if (k == n) {
    keep.resize(n);
    for (uint32_t i = 0; i < n; ++i) keep[i] = i;
  } else {
    StreamRng rng(seed, 0x73756273ull);  // dedicated subsample stream
    keep = sample_without_replacement(n, k, rng);
  }

  CohortMatrix sub;
  sub.grid = cohort.grid;
  sub.mask_rule = cohort.mask_rule;
  sub.subject_ids.reserve(k);
  sub.lesion_bits = BitMatrix(k, static_cast<size_t>(cohort.grid.voxel_count()));
  ScoreVector sub_scores;
  sub_scores.values.reserve(k);
  for (uint32_t r = 0; r < k; ++r) {
    const uint32_t src = keep[r];
    sub.subject_ids.push_back(cohort.subject_ids[src]);
    sub_scores.values.push_back(scores.values[src]);
    const auto words = cohort.lesion_bits.row_words(src);
    for (size_t j = 0; j < static_cast<size_t>(cohort.grid.voxel_count()); ++j)
      if ((words[j >> 6] >> (j & 63)) & 1u) sub.lesion_bits.set(r, j, true);
  }
  const auto [min_l, min_i] = sub.mask_rule.resolve(k);
  sub.mask_index = compute_analysis_mask(sub, min_l, min_i);
  rebuild_columns(sub);
  return {std::move(sub), std::move(sub_scores)};
}

RoiMask roi_from_volume(const Volume3D& volume) {
  if (volume.dtype != VoxelType::binary)
    throw ValidationError("ROI volume must be binary");
  RoiMask roi;
  for (size_t j = 0; j < volume.values.size(); ++j)
    if (volume.values[j] != 0.0f) roi.voxels.push_back(static_cast<int64_t>(j));
  roi.validate(volume.grid);
  return roi;
}

RoiMask make_sphere_roi(const GridShape& grid, std::array<double, 3> center_voxel,
                        double radius_voxels) {
  RoiMask roi;
  const double r2 = radius_voxels * radius_voxels;
  for (int32_t k = 0; k < grid.dims[2]; ++k)
    for (int32_t j = 0; j < grid.dims[1]; ++j)
      for (int32_t i = 0; i < grid.dims[0]; ++i) {
        const double di = i - center_voxel[0];
        const double dj = j - center_voxel[1];
        const double dk = k - center_voxel[2];
        if (di * di + dj * dj + dk * dk <= r2)
          roi.voxels.push_back(grid.linear_index(i, j, k));
      }
  roi.validate(grid);
  return roi;
}

}  // namespace vlsm

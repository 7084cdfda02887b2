// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vlsm/volume.hpp"

namespace vlsm {

// Bit-packed boolean matrix, one row per subject, one column per grid voxel.
class BitMatrix {
public:
  BitMatrix() = default;
  BitMatrix(size_t rows, size_t cols)
      : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
        words_(rows * words_per_row_, 0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool get(size_t r, size_t c) const {
    return (words_[r * words_per_row_ + (c >> 6)] >> (c & 63)) & 1u;
  }
  void set(size_t r, size_t c, bool v) {
    auto& w = words_[r * words_per_row_ + (c >> 6)];
    const uint64_t bit = 1ull << (c & 63);
    w = v ? (w | bit) : (w & ~bit);
  }
  std::span<const uint64_t> row_words(size_t r) const {
    return {words_.data() + r * words_per_row_, words_per_row_};
  }

private:
  size_t rows_ = 0, cols_ = 0, words_per_row_ = 0;
  std::vector<uint64_t> words_;
};

// Voxel-inclusion rule. Explicit counts apply as-is; otherwise the default
// max(2, ceil(0.05 * N)) floor is evaluated for whatever N is in play, so
// sub-samples get cutoffs appropriate to their own size.
struct MaskRule {
  std::optional<uint32_t> min_lesioned;
  std::optional<uint32_t> min_intact;

  std::pair<uint32_t, uint32_t> resolve(uint32_t n_subjects) const;
};

// One continuous deficit score per subject, higher = worse. Inputs with the
// opposite orientation are negated at ingestion, never downstream.
struct ScoreVector {
  std::vector<double> values;

  void validate(size_t n_subjects) const;
};

// Ground-truth / scoring region as linear voxel indices on the cohort grid.
struct RoiMask {
  std::vector<int64_t> voxels;  // ascending, unique

  void validate(const GridShape& grid) const;
};

// Analysis-ready lesion data. The full-grid bit matrix is retained so masks
// can be recomputed for subject subsets; `mask_index` is the current
// analysis mask and the per-column CSR is derived from it.
struct CohortMatrix {
  std::vector<std::string> subject_ids;
  GridShape grid;
  BitMatrix lesion_bits;                 // n_subjects x grid.voxel_count()
  MaskRule mask_rule;

  std::vector<int64_t> mask_index;       // ascending linear voxel indices
  // Column-wise CSR over mask columns: subjects lesioned at each mask voxel.
  std::vector<uint64_t> col_offsets;     // size mask_index.size() + 1
  std::vector<uint32_t> col_subjects;

  uint32_t n_subjects() const { return static_cast<uint32_t>(subject_ids.size()); }
  size_t mask_size() const { return mask_index.size(); }
  uint32_t lesioned_count(size_t mask_pos) const {
    return static_cast<uint32_t>(col_offsets[mask_pos + 1] - col_offsets[mask_pos]);
  }
  std::span<const uint32_t> lesioned_subjects(size_t mask_pos) const {
    return {col_subjects.data() + col_offsets[mask_pos],
            col_subjects.data() + col_offsets[mask_pos + 1]};
  }
  uint64_t content_hash() const;
};

// Assembles subject volumes into a pre-mask cohort (every grid voxel is a
// column; no inclusion rule applied yet).
CohortMatrix build_cohort(const std::vector<Volume3D>& volumes,
                          const std::vector<std::string>& subject_ids);

// Voxels with >= min_lesioned lesioned and >= min_intact intact subjects.
std::vector<int64_t> compute_analysis_mask(const CohortMatrix& cohort,
                                           uint32_t min_lesioned, uint32_t min_intact);

// Returns a copy of `cohort` restricted to the rule's mask (CSR rebuilt).
CohortMatrix apply_mask_rule(const CohortMatrix& cohort, MaskRule rule);

// Fraction of `roi` lesioned per subject, evaluated on the full grid.
ScoreVector percent_damage_score(const CohortMatrix& cohort, const RoiMask& roi);

// Adds N(0, sd^2) per subject; deterministic given seed.
ScoreVector add_noise(const ScoreVector& scores, double sd, uint64_t seed);

// Uniform subject subset of size round(fraction * N), original order kept,
// mask recomputed on the subset under the cohort's rule.
std::pair<CohortMatrix, ScoreVector> subsample(const CohortMatrix& cohort,
                                               const ScoreVector& scores,
                                               double fraction, uint64_t seed);

RoiMask roi_from_volume(const Volume3D& volume);
RoiMask make_sphere_roi(const GridShape& grid, std::array<double, 3> center_voxel,
                        double radius_voxels);

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vlsm/cohort.hpp"

namespace vlsm {

enum class Tails { one_sided, two_sided };

// Behavior at voxels with zero pooled variance but a nonzero group mean
// difference (t would be infinite).
enum class DegeneratePolicy { error, clamp };

struct TMapOptions {
  Tails tails = Tails::one_sided;
  DegeneratePolicy degenerate = DegeneratePolicy::error;
  double t_max = 1e6;  // clamp magnitude when degenerate == clamp
};

// Per in-mask-voxel pooled-variance two-sample t (lesioned vs intact),
// df = N - 2, positive t = lesioned subjects score worse.
struct StatMap {
  std::vector<double> t_values;  // parallel to cohort.mask_index
  uint32_t df = 0;
  Tails tails = Tails::one_sided;
};

struct PValueMap {
  std::vector<double> p_values;  // parallel to StatMap
  uint32_t df = 0;
  Tails tails = Tails::one_sided;
};

// The value thresholds compare against: t itself one-sided, |t| two-sided.
inline double stat_value(double t, Tails tails) {
  return tails == Tails::two_sided ? (t < 0 ? -t : t) : t;
}

StatMap voxel_t_map(const CohortMatrix& cohort, const ScoreVector& scores,
                    const TMapOptions& options = {});

// Upper-tail Student-t probability (one-sided) or 2*P(T > |t|) (two-sided).
double t_to_p(double t, uint32_t df, Tails tails);
// Inverse of t_to_p in stat-value space: the (positive, for p < 0.5) cutoff
// u with t_to_p(u) = p. One-sided p > 0.5 yields a negative t.
double p_threshold_to_t(double p, uint32_t df, Tails tails);

PValueMap p_value_map(const StatMap& map);

namespace detail {

// Sufficient statistics for the fused permutation pass. With scores centered
// on their grand mean, a voxel's t needs only s1 = sum of centered scores
// over its lesioned subjects:
//   t = s1 * sqrt(c * (N-2)) / sqrt(Q - s1^2 * c),  c = 1/n_l + 1/n_i,
// where Q = total centered sum of squares (shared by every voxel).
struct CenteredScores {
  std::vector<double> centered;  // per subject
  double total_ss = 0.0;         // Q
};
CenteredScores center_scores(std::span<const double> scores);

struct VoxelTContext {
  double inv_group = 0.0;   // c = 1/n_l + 1/n_i
  double scale = 0.0;       // sqrt(c * (N - 2))
};
std::vector<VoxelTContext> make_voxel_contexts(const CohortMatrix& cohort);

double t_from_s1(double s1, const VoxelTContext& ctx, double total_ss,
                 const TMapOptions& options);

// Regularized incomplete beta I_x(a, b) via the standard continued fraction.
double incomplete_beta(double a, double b, double x);

}  // namespace detail

}  // namespace vlsm

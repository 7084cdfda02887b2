// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vlsm/correction.hpp"

namespace vlsm {

// Synthetic stroke cohort with a known ground-truth region. Each subject gets
// one contiguous lesion grown from a seed voxel; seed placement follows an
// exponential territory gradient (middle-cerebral-artery-like predominance),
// lesion sizes follow a log-normal.
struct SyntheticSpec {
  GridShape grid{{32, 32, 32}, {1.0f, 1.0f, 1.0f}};
  uint32_t n_subjects = 60;
  double lesion_mu_log = 5.5;       // log-voxel size: median = exp(mu)
  double lesion_sigma_log = 0.5;
  std::array<double, 3> territory_center{15.5, 15.5, 15.5};
  double territory_decay = 8.0;     // voxels; seed weight = exp(-dist/decay)
  RoiMask roi;                      // ground-truth region on `grid`
  double noise_sd = 0.0;            // Gaussian sd added to percent-damage scores
  uint64_t seed = 1;

  void validate() const;
};

uint64_t derive_seed(uint64_t seed, const std::string& tag);

std::vector<Volume3D> generate_synthetic_lesions(const SyntheticSpec& spec);

// Lesions -> cohort -> default-rule analysis mask. Returns the masked cohort
// and echoes the ground-truth ROI.
std::pair<CohortMatrix, RoiMask> generate_synthetic_cohort(const SyntheticSpec& spec);

// Percent-damage deficit scores for the spec's ROI with the spec's noise.
ScoreVector synthetic_scores(const SyntheticSpec& spec, const CohortMatrix& cohort);

// Fraction of permutations in `eval_set` with at least one cluster strictly
// larger than size_threshold at the given voxel p-threshold. Pass the
// defining null itself for the in-sample rate, a fresh null for held-out.
double false_positive_rate(const NullDistribution& eval_set, double p_threshold,
                           uint32_t size_threshold);

struct SpilloverMetrics {
  size_t n_supra = 0;
  size_t n_in_roi = 0;
  size_t n_out_roi = 0;
  double extent_ratio = 0.0;  // n_supra / |roi|
  double dice = 0.0;          // 2*n_in / (n_supra + |roi|)
};
SpilloverMetrics spillover_metrics(const CorrectionResult& result, const CohortMatrix& cohort,
                                   const RoiMask& roi);

struct ClusterFprConfig {
  SyntheticSpec spec;
  uint32_t n_perms_defining = 500;
  uint32_t n_perms_holdout = 500;
  std::vector<double> p_thresholds = default_p_thresholds();
  double alpha = 0.05;
  Tails tails = Tails::one_sided;
  Connectivity connectivity = Connectivity::twentysix;
  unsigned workers = 0;
};

struct ClusterFprRow {
  double p_threshold = 0.0;
  ClusterVariant variant = ClusterVariant::max;
  uint32_t size_threshold = 0;
  double fpr_in_sample = 0.0;
  double fpr_holdout = 0.0;
};

struct ClusterFprReport {
  std::vector<ClusterFprRow> rows;
  NullDistribution defining;
  NullDistribution holdout;
  uint32_t n_subjects = 0;
  uint64_t mask_voxels = 0;
};

// Size thresholds for both variants at every p-threshold, with in-sample and
// held-out per-permutation exceedance rates.
ClusterFprReport run_cluster_fpr_experiment(const ClusterFprConfig& config);

struct SpilloverConfig {
  SyntheticSpec spec;
  uint32_t n_perms = 1000;
  double cluster_p = 0.0001;  // voxel p-threshold for the cluster correction
  double alpha = 0.05;
  std::vector<uint32_t> v_list{1, 10, 100, 1000};
  std::vector<double> p_thresholds = default_p_thresholds();
  Tails tails = Tails::one_sided;
  Connectivity connectivity = Connectivity::twentysix;
  unsigned workers = 0;
};

struct SpilloverRow {
  std::string method;
  double critical_value = 0.0;
  SpilloverMetrics metrics;
};

struct SpilloverReport {
  std::vector<SpilloverRow> rows;
  uint32_t n_subjects = 0;
  uint64_t mask_voxels = 0;
  uint64_t null_hash = 0;
};

// Supra-threshold extent vs the true ROI for the cluster-size correction and
// CFWER at each v, on the spec's (usually noiseless) percent-damage score.
SpilloverReport run_spillover_experiment(const SpilloverConfig& config);

struct MethodComparisonConfig {
  SyntheticSpec spec;
  std::vector<double> fractions{1.0};
  uint32_t n_repeats = 1;
  uint32_t n_perms = 1000;
  double alpha = 0.05;
  std::vector<uint32_t> v_list{1, 10, 100, 1000};
  std::vector<double> p_thresholds = default_p_thresholds();
  Tails tails = Tails::one_sided;
  Connectivity connectivity = Connectivity::twentysix;
  unsigned workers = 0;
};

struct MethodComparisonCell {
  double fraction = 1.0;
  uint32_t repeat = 0;
  uint32_t n_subjects = 0;
  uint64_t mask_voxels = 0;
  ComparisonRow row;
};

struct MethodComparisonSummary {
  double fraction = 1.0;
  size_t n_cells_valid = 0;   // rows with both thresholds defined
  size_t n_fdr_less = 0;      // of those, t_fdr < t_cfwer
};

struct MethodComparisonReport {
  std::vector<MethodComparisonCell> cells;
  std::vector<MethodComparisonSummary> summaries;
};

// CFWER-vs-FDR tables over random sub-samples at each fraction.
MethodComparisonReport run_method_comparison(const MethodComparisonConfig& config);

}  // namespace vlsm

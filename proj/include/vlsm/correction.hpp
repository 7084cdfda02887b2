// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlsm/nullengine.hpp"

namespace vlsm {

enum class ClusterVariant { all, max };

struct CorrectionConfig {
  double alpha = 0.05;
  std::vector<uint32_t> v_list = {1, 10, 100, 1000};
  std::vector<double> p_thresholds = default_p_thresholds();
  ClusterVariant cluster_variant = ClusterVariant::max;
  double fdr_q = 0.05;

  void validate() const;
};

struct CorrectionResult {
  std::string method;                 // cluster-all | cluster-max | cfwer | fdr
  double critical_value = 0.0;        // stat-value cutoff, or cluster size for cluster methods
  std::vector<uint32_t> supra;        // mask positions, ascending
  size_t n_supra = 0;
  std::optional<double> effective_q;  // CFWER only, absent when n_supra == 0
};

// Order statistic at rank ceil((1 - alpha) * n); callers apply strict '>'.
double percentile_threshold(std::span<const double> null_values, double alpha);
uint32_t percentile_threshold_u32(std::span<const uint32_t> null_values, double alpha);

// 95%-style cluster size threshold from a null distribution. variant::all
// pools every cluster from every permutation; variant::max uses one maximum
// per permutation (cluster-free permutations contribute 0).
uint32_t cluster_size_threshold(const NullDistribution& null, double p_threshold,
                                ClusterVariant variant, double alpha);

// Keeps observed clusters (at the voxel p-threshold) strictly larger than
// size_threshold.
CorrectionResult apply_cluster_correction(const StatMap& observed, const CohortMatrix& cohort,
                                          double p_threshold, uint32_t size_threshold,
                                          Connectivity connectivity);

// Threshold over the v-th order statistic null; v = 1 is the standard
// max-statistic FWER threshold.
double cfwer_threshold(const NullDistribution& null, uint32_t v, double alpha);

CorrectionResult apply_t_threshold(const StatMap& observed, double t_crit);

// v / n_supra; requires n_supra >= 1.
double effective_q(uint32_t v, size_t n_supra);

struct FdrResult {
  bool any_rejection = false;
  double p_crit = 0.0;   // meaningful only when any_rejection
  double t_crit = 0.0;   // p_threshold_to_t(p_crit)
  size_t n_supra = 0;
  std::vector<uint32_t> supra;  // mask positions with p <= p_crit
};

enum class FdrConstant { independence, general };  // c(V) = 1 or sum(1/i)

// Benjamini-Hochberg step-up: largest i with p_(i) <= i*q/(m*c).
FdrResult fdr_threshold(const PValueMap& p_map, double q,
                        FdrConstant constant = FdrConstant::independence);

struct ComparisonRow {
  uint32_t v = 0;
  double t_cfwer = 0.0;
  size_t n_supra_cfwer = 0;
  std::optional<double> eff_q;    // absent when n_supra == 0 or q >= 1
  std::optional<double> t_fdr;    // absent when eff_q absent or FDR rejects nothing
  std::optional<size_t> n_supra_fdr;
};

// One row per v: CFWER threshold/count, effective q, and the FDR threshold
// computed at that q on the observed map.
std::vector<ComparisonRow> compare_cfwer_fdr(const StatMap& observed,
                                             const NullDistribution& null,
                                             const CorrectionConfig& config);

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/correction.hpp"

#include <algorithm>
#include <cmath>

#include "vlsm/error.hpp"

namespace vlsm {

void CorrectionConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  if (!(fdr_q > 0.0 && fdr_q < 1.0)) throw ValidationError("fdr q must be in (0, 1)");
  if (v_list.empty()) throw ValidationError("v list must not be empty");
  for (size_t i = 0; i < v_list.size(); ++i) {
    if (v_list[i] < 1) throw ValidationError("v values must be >= 1");
    if (i > 0 && v_list[i] <= v_list[i - 1])
      throw ValidationError("v list must be strictly increasing");
  }
  if (p_thresholds.empty()) throw ValidationError("p-threshold list must not be empty");
  for (size_t i = 0; i < p_thresholds.size(); ++i) {
    if (!(p_thresholds[i] > 0.0 && p_thresholds[i] < 1.0))
      throw ValidationError("p-thresholds must lie in (0, 1)");
    if (i > 0 && p_thresholds[i] >= p_thresholds[i - 1])
      throw ValidationError("p-thresholds must be strictly decreasing");
  }
}

namespace {

// Rank ceil((1-alpha)*n), 1-based. The epsilon absorbs the binary rounding
// of inputs like 0.05 so exact-integer products stay exact.
size_t percentile_rank(size_t n, double alpha) {
  if (n == 0) throw ValidationError("percentile of an empty null");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  const double drop = std::floor(alpha * static_cast<double>(n) + 1e-12);
  auto m = n - static_cast<size_t>(drop);
  if (m < 1) m = 1;
  if (m > n) m = n;
  return m;
}

template <typename T>
T rank_statistic(std::vector<T> values, size_t m) {
  std::nth_element(values.begin(), values.begin() + (m - 1), values.end());
  return values[m - 1];
}

}  // namespace

double percentile_threshold(std::span<const double> null_values, double alpha) {
  const size_t m = percentile_rank(null_values.size(), alpha);
  return rank_statistic(std::vector<double>(null_values.begin(), null_values.end()), m);
}

uint32_t percentile_threshold_u32(std::span<const uint32_t> null_values, double alpha) {
  const size_t m = percentile_rank(null_values.size(), alpha);
  return rank_statistic(std::vector<uint32_t>(null_values.begin(), null_values.end()), m);
}

uint32_t cluster_size_threshold(const NullDistribution& null, double p_threshold,
                                ClusterVariant variant, double alpha) {
  const size_t ti = null.threshold_index(p_threshold);
  std::vector<uint32_t> pool;
  if (variant == ClusterVariant::max) {
    pool.reserve(null.records.size());
    for (const auto& rec : null.records) pool.push_back(rec.max_cluster[ti]);
  } else {
    for (const auto& rec : null.records)
      pool.insert(pool.end(), rec.cluster_sizes[ti].begin(), rec.cluster_sizes[ti].end());
    if (pool.empty()) return 0;  // no cluster anywhere in the null
  }
  return percentile_threshold_u32(pool, alpha);
}

CorrectionResult apply_cluster_correction(const StatMap& observed, const CohortMatrix& cohort,
                                          double p_threshold, uint32_t size_threshold,
                                          Connectivity connectivity) {
  if (observed.t_values.size() != cohort.mask_size())
    throw ValidationError("stat map does not match the cohort mask");
  const double cutoff = p_threshold_to_t(p_threshold, observed.df, observed.tails);

  std::vector<uint8_t> flags(cohort.mask_size(), 0);
  for (size_t j = 0; j < cohort.mask_size(); ++j)
    flags[j] = stat_value(observed.t_values[j], observed.tails) > cutoff;

  const MaskAdjacency adjacency(cohort.mask_index, cohort.grid, connectivity);
  ClusterScratch scratch;
  ClusterLabeling labeling;
  ClusterEngine::label(adjacency, flags, scratch, labeling);

  std::vector<uint8_t> keep(labeling.sizes.size(), 0);
  for (size_t c = 0; c < labeling.sizes.size(); ++c)
    keep[c] = labeling.sizes[c] > size_threshold;

  CorrectionResult result;
  result.method = "cluster";
  result.critical_value = size_threshold;
  for (size_t j = 0; j < cohort.mask_size(); ++j)
    if (labeling.labels[j] != 0 && keep[labeling.labels[j] - 1])
      result.supra.push_back(static_cast<uint32_t>(j));
  result.n_supra = result.supra.size();
  return result;
}

double cfwer_threshold(const NullDistribution& null, uint32_t v, double alpha) {
  if (v < 1) throw ValidationError("v must be >= 1");
  if (v > null.collect.top_k)
    throw ValidationError("v exceeds the top-K collected in this null distribution");
  std::vector<double> vth;
  vth.reserve(null.records.size());
  for (const auto& rec : null.records) vth.push_back(rec.top_t[v - 1]);
  return percentile_threshold(vth, alpha);
}

CorrectionResult apply_t_threshold(const StatMap& observed, double t_crit) {
  CorrectionResult result;
  result.method = "t-threshold";
  result.critical_value = t_crit;
  for (size_t j = 0; j < observed.t_values.size(); ++j)
    if (stat_value(observed.t_values[j], observed.tails) > t_crit)
      result.supra.push_back(static_cast<uint32_t>(j));
  result.n_supra = result.supra.size();
  return result;
}

double effective_q(uint32_t v, size_t n_supra) {
  if (n_supra < 1) throw ValidationError("effective q undefined for an empty supra set");
  return static_cast<double>(v) / static_cast<double>(n_supra);
}

FdrResult fdr_threshold(const PValueMap& p_map, double q, FdrConstant constant) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("fdr q must be in (0, 1)");
  const size_t m = p_map.p_values.size();
  if (m < 1) throw ValidationError("fdr over an empty p map");

  double c = 1.0;
  if (constant == FdrConstant::general) {
    c = 0.0;
    for (size_t i = 1; i <= m; ++i) c += 1.0 / static_cast<double>(i);
  }

  std::vector<double> sorted(p_map.p_values);
  std::sort(sorted.begin(), sorted.end());
  size_t best = 0;  // largest 1-based i with p_(i) <= i*q/(m*c)
  for (size_t i = m; i >= 1; --i) {
    if (sorted[i - 1] <= static_cast<double>(i) * q / (static_cast<double>(m) * c)) {
      best = i;
      break;
    }
  }

  FdrResult result;
  if (best == 0) return result;
  result.any_rejection = true;
  result.p_crit = sorted[best - 1];
  result.t_crit = p_threshold_to_t(result.p_crit, p_map.df, p_map.tails);
  for (size_t j = 0; j < m; ++j)
    if (p_map.p_values[j] <= result.p_crit)
      result.supra.push_back(static_cast<uint32_t>(j));
  result.n_supra = result.supra.size();
  return result;
}

std::vector<ComparisonRow> compare_cfwer_fdr(const StatMap& observed,
                                             const NullDistribution& null,
                                             const CorrectionConfig& config) {
  config.validate();
  if (observed.t_values.size() != null.mask_voxels)
    throw ValidationError("observed map size does not match the null distribution");
  const PValueMap p_map = p_value_map(observed);

  std::vector<ComparisonRow> rows;
  rows.reserve(config.v_list.size());
  for (uint32_t v : config.v_list) {
    ComparisonRow row;
    row.v = v;
    row.t_cfwer = cfwer_threshold(null, v, config.alpha);
    const auto applied = apply_t_threshold(observed, row.t_cfwer);
    row.n_supra_cfwer = applied.n_supra;
    if (applied.n_supra > 0) {
      const double q = effective_q(v, applied.n_supra);
      if (q < 1.0) {
        row.eff_q = q;
        const auto fdr = fdr_threshold(p_map, q);
        if (fdr.any_rejection) {
          row.t_fdr = fdr.t_crit;
          row.n_supra_fdr = fdr.n_supra;
        }
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vlsm

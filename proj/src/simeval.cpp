// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/simeval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vlsm/error.hpp"
#include "vlsm/rng.hpp"
#include "vlsm/util.hpp"

namespace vlsm {

void SyntheticSpec::validate() const {
  if (grid.dims[0] < 1 || grid.dims[1] < 1 || grid.dims[2] < 1)
    throw ValidationError("synthetic grid dims must be >= 1");
  if (n_subjects < 3) throw ValidationError("synthetic cohort needs at least 3 subjects");
  if (lesion_sigma_log < 0) throw ValidationError("lesion sigma must be >= 0");
  if (!(territory_decay > 0)) throw ValidationError("territory decay must be positive");
  if (noise_sd < 0) throw ValidationError("noise sd must be >= 0");
  roi.validate(grid);
}

uint64_t derive_seed(uint64_t seed, const std::string& tag) {
  Fnv1a h;
  h.update_u64(seed);
  h.update_string(tag);
  return h.value();
}

std::vector<Volume3D> generate_synthetic_lesions(const SyntheticSpec& spec) {
  spec.validate();
  const auto n_vox = static_cast<size_t>(spec.grid.voxel_count());

  // seed-placement CDF over the territory gradient
  std::vector<double> cdf(n_vox);
  double total = 0.0;
  for (size_t lin = 0; lin < n_vox; ++lin) {
    const VoxelCoord c = spec.grid.coord(static_cast<int64_t>(lin));
    const double di = c.i - spec.territory_center[0];
    const double dj = c.j - spec.territory_center[1];
    const double dk = c.k - spec.territory_center[2];
    const double d = std::sqrt(di * di + dj * dj + dk * dk);
    total += std::exp(-d / spec.territory_decay);
    cdf[lin] = total;
  }
  if (!(total > 0.0)) throw ValidationError("territory gradient underflowed everywhere");
  double best_roi_weight = 0.0;
  for (int64_t v : spec.roi.voxels) {
    const double below = v > 0 ? cdf[static_cast<size_t>(v) - 1] : 0.0;
    best_roi_weight = std::max(best_roi_weight, cdf[static_cast<size_t>(v)] - below);
  }
  if (best_roi_weight <= 0.0)
    std::fprintf(stderr,
                 "warning: territory gradient assigns zero seed probability to the ROI\n");

  // 26-neighborhood offsets
  std::vector<std::array<int, 3>> offsets;
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (di || dj || dk) offsets.push_back({di, dj, dk});

  std::vector<Volume3D> lesions;
  lesions.reserve(spec.n_subjects);
  std::vector<uint8_t> state(n_vox);  // 0 free, 1 frontier, 2 region
  for (uint32_t s = 0; s < spec.n_subjects; ++s) {
    StreamRng rng(derive_seed(spec.seed, "lesion"), s);
    auto target = static_cast<size_t>(std::llround(
        std::exp(spec.lesion_mu_log + spec.lesion_sigma_log * rng.next_gaussian())));
    target = std::clamp<size_t>(target, 1, n_vox);

    const double u = rng.next_double() * total;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    auto seed_lin = static_cast<int64_t>(it == cdf.end() ? n_vox - 1 : it - cdf.begin());

    std::fill(state.begin(), state.end(), 0);
    std::vector<int64_t> region;
    std::vector<int64_t> frontier;
    region.reserve(target);
    const auto absorb = [&](int64_t lin) {
      region.push_back(lin);
      state[static_cast<size_t>(lin)] = 2;
      const VoxelCoord c = spec.grid.coord(lin);
      for (const auto& o : offsets) {
        const int32_t i = c.i + o[0], j = c.j + o[1], k = c.k + o[2];
        if (!spec.grid.contains(i, j, k)) continue;
        const int64_t nl = spec.grid.linear_index(i, j, k);
        if (state[static_cast<size_t>(nl)] == 0) {
          state[static_cast<size_t>(nl)] = 1;
          frontier.push_back(nl);
        }
      }
    };
    absorb(seed_lin);
    while (region.size() < target && !frontier.empty()) {
      const auto pick = static_cast<size_t>(rng.next_below(frontier.size()));
      const int64_t lin = frontier[pick];
      frontier[pick] = frontier.back();
      frontier.pop_back();
      absorb(lin);
    }

    Volume3D vol = make_volume(spec.grid, VoxelType::binary, 0.0f);
    for (int64_t lin : region) vol.values[static_cast<size_t>(lin)] = 1.0f;
    lesions.push_back(std::move(vol));
  }
  return lesions;
}

std::pair<CohortMatrix, RoiMask> generate_synthetic_cohort(const SyntheticSpec& spec) {
  const auto lesions = generate_synthetic_lesions(spec);
  std::vector<std::string> ids;
  ids.reserve(lesions.size());
  for (size_t s = 0; s < lesions.size(); ++s) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sub-%03zu", s);
    ids.emplace_back(buf);
  }
  CohortMatrix cohort = build_cohort(lesions, ids);
  cohort = apply_mask_rule(cohort, MaskRule{});
  return {std::move(cohort), spec.roi};
}

ScoreVector synthetic_scores(const SyntheticSpec& spec, const CohortMatrix& cohort) {
  ScoreVector scores = percent_damage_score(cohort, spec.roi);
  if (spec.noise_sd > 0)
    scores = add_noise(scores, spec.noise_sd, derive_seed(spec.seed, "noise"));
  return scores;
}

double false_positive_rate(const NullDistribution& eval_set, double p_threshold,
                           uint32_t size_threshold) {
  const size_t ti = eval_set.threshold_index(p_threshold);
  size_t exceed = 0;
  for (const auto& rec : eval_set.records)
    if (rec.max_cluster[ti] > size_threshold) ++exceed;
  return static_cast<double>(exceed) / static_cast<double>(eval_set.records.size());
}

SpilloverMetrics spillover_metrics(const CorrectionResult& result, const CohortMatrix& cohort,
                                   const RoiMask& roi) {
  roi.validate(cohort.grid);
  SpilloverMetrics m;
  m.n_supra = result.supra.size();
  for (uint32_t pos : result.supra) {
    const int64_t lin = cohort.mask_index[pos];
    if (std::binary_search(roi.voxels.begin(), roi.voxels.end(), lin)) ++m.n_in_roi;
  }
  m.n_out_roi = m.n_supra - m.n_in_roi;
  const auto roi_size = static_cast<double>(roi.voxels.size());
  m.extent_ratio = static_cast<double>(m.n_supra) / roi_size;
  m.dice = 2.0 * static_cast<double>(m.n_in_roi) /
           (static_cast<double>(m.n_supra) + roi_size);
  return m;
}

ClusterFprReport run_cluster_fpr_experiment(const ClusterFprConfig& config) {
  auto [cohort, roi] = generate_synthetic_cohort(config.spec);
  const ScoreVector scores = synthetic_scores(config.spec, cohort);

  CollectConfig collect;
  collect.top_k = static_cast<uint32_t>(
      std::min<size_t>(1000, cohort.mask_size()));
  collect.p_thresholds = config.p_thresholds;
  collect.tails = config.tails;
  collect.connectivity = config.connectivity;

  const uint64_t seed_def = derive_seed(config.spec.seed, "null-defining");
  const uint64_t seed_held = derive_seed(config.spec.seed, "null-holdout");
  const auto plan_def =
      generate_permutations(cohort.n_subjects(), config.n_perms_defining, seed_def);
  const auto plan_held =
      generate_permutations(cohort.n_subjects(), config.n_perms_holdout, seed_held);

  ClusterFprReport report;
  report.defining = run_permutation_pass(cohort, scores, plan_def, collect, config.workers);
  report.holdout = run_permutation_pass(cohort, scores, plan_held, collect, config.workers);
  report.n_subjects = cohort.n_subjects();
  report.mask_voxels = cohort.mask_size();

  for (double p : config.p_thresholds) {
    for (ClusterVariant variant : {ClusterVariant::all, ClusterVariant::max}) {
      ClusterFprRow row;
      row.p_threshold = p;
      row.variant = variant;
      row.size_threshold = cluster_size_threshold(report.defining, p, variant, config.alpha);
      row.fpr_in_sample = false_positive_rate(report.defining, p, row.size_threshold);
      row.fpr_holdout = false_positive_rate(report.holdout, p, row.size_threshold);
      report.rows.push_back(row);
    }
  }
  return report;
}

SpilloverReport run_spillover_experiment(const SpilloverConfig& config) {
  auto [cohort, roi] = generate_synthetic_cohort(config.spec);
  const ScoreVector scores = synthetic_scores(config.spec, cohort);

  CollectConfig collect;
  collect.top_k = static_cast<uint32_t>(std::min<size_t>(
      std::max<uint32_t>(config.v_list.empty() ? 1 : config.v_list.back(), 1000),
      cohort.mask_size()));
  collect.p_thresholds = config.p_thresholds;
  if (std::find(collect.p_thresholds.begin(), collect.p_thresholds.end(), config.cluster_p) ==
      collect.p_thresholds.end())
    collect.p_thresholds.push_back(config.cluster_p);
  collect.tails = config.tails;
  collect.connectivity = config.connectivity;

  const auto plan = generate_permutations(cohort.n_subjects(), config.n_perms,
                                          derive_seed(config.spec.seed, "spillover-null"));
  const auto null = run_permutation_pass(cohort, scores, plan, collect, config.workers);
  const TMapOptions t_options{config.tails, collect.degenerate, collect.t_max};
  const StatMap observed = voxel_t_map(cohort, scores, t_options);

  SpilloverReport report;
  report.n_subjects = cohort.n_subjects();
  report.mask_voxels = cohort.mask_size();
  report.null_hash = null.content_hash;

  const uint32_t size_thr =
      cluster_size_threshold(null, config.cluster_p, ClusterVariant::max, config.alpha);
  CorrectionResult cluster = apply_cluster_correction(observed, cohort, config.cluster_p,
                                                      size_thr, config.connectivity);
  cluster.method = "cluster-max";
  report.rows.push_back({"cluster-max@p=" + fmt_double(config.cluster_p),
                         static_cast<double>(size_thr),
                         spillover_metrics(cluster, cohort, roi)});

  for (uint32_t v : config.v_list) {
    if (v > collect.top_k) continue;
    const double t_crit = cfwer_threshold(null, v, config.alpha);
    const CorrectionResult r = apply_t_threshold(observed, t_crit);
    report.rows.push_back(
        {"cfwer@v=" + std::to_string(v), t_crit, spillover_metrics(r, cohort, roi)});
  }
  return report;
}

MethodComparisonReport run_method_comparison(const MethodComparisonConfig& config) {
  auto [cohort, roi] = generate_synthetic_cohort(config.spec);
  const ScoreVector scores = synthetic_scores(config.spec, cohort);

  MethodComparisonReport report;
  for (size_t fi = 0; fi < config.fractions.size(); ++fi) {
    const double fraction = config.fractions[fi];
    MethodComparisonSummary summary;
    summary.fraction = fraction;
    for (uint32_t r = 0; r < config.n_repeats; ++r) {
      const std::string tag = "subsample-f" + fmt_double(fraction) + "-r" + std::to_string(r);
      auto [sub, sub_scores] = subsample(cohort, scores, fraction, derive_seed(config.spec.seed, tag));

      CollectConfig collect;
      collect.top_k = static_cast<uint32_t>(std::min<size_t>(
          std::max<uint32_t>(config.v_list.back(), 1000), sub.mask_size()));
      collect.p_thresholds = config.p_thresholds;
      collect.tails = config.tails;
      collect.connectivity = config.connectivity;

      CorrectionConfig correction;
      correction.alpha = config.alpha;
      correction.p_thresholds = config.p_thresholds;
      correction.v_list.clear();
      for (uint32_t v : config.v_list)
        if (v <= collect.top_k) correction.v_list.push_back(v);
      if (correction.v_list.empty())
        throw ValidationError("analysis mask too small for every requested v");

      const auto plan = generate_permutations(
          sub.n_subjects(), config.n_perms, derive_seed(config.spec.seed, tag + "-perms"));
      const auto null = run_permutation_pass(sub, sub_scores, plan, collect, config.workers);
      const TMapOptions t_options{config.tails, collect.degenerate, collect.t_max};
      const StatMap observed = voxel_t_map(sub, sub_scores, t_options);

      for (const auto& row : compare_cfwer_fdr(observed, null, correction)) {
        MethodComparisonCell cell;
        cell.fraction = fraction;
        cell.repeat = r;
        cell.n_subjects = sub.n_subjects();
        cell.mask_voxels = sub.mask_size();
        cell.row = row;
        if (row.eff_q && row.t_fdr) {
          ++summary.n_cells_valid;
          if (*row.t_fdr < row.t_cfwer) ++summary.n_fdr_less;
        }
        report.cells.push_back(std::move(cell));
      }
    }
    report.summaries.push_back(summary);
  }
  return report;
}

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support/oracles.hpp"
#include "vlsm/error.hpp"
#include "vlsm/pipeline.hpp"
#include "vlsm/rng.hpp"
#include "vlsm/simeval.hpp"

using namespace vlsm;

namespace {

SyntheticSpec tiny_spec(uint32_t n_subjects, uint64_t seed) {
  SyntheticSpec spec;
  spec.grid = GridShape{{10, 10, 10}, {1, 1, 1}};
  spec.n_subjects = n_subjects;
  spec.lesion_mu_log = 3.5;
  spec.lesion_sigma_log = 0.4;
  spec.territory_center = {4.5, 4.5, 4.5};
  spec.territory_decay = 3.0;
  spec.roi = make_sphere_roi(spec.grid, {6.0, 4.5, 4.5}, 1.8);
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_SUITE("simeval") {

TEST_CASE("lesions with target size 1 are single voxels") {
  auto spec = tiny_spec(10, 4);
  spec.lesion_mu_log = 0.0;  // median size exp(0) = 1
  spec.lesion_sigma_log = 0.0;
  const auto lesions = generate_synthetic_lesions(spec);
  for (const auto& v : lesions) {
    float total = 0;
    for (float x : v.values) total += x;
    CHECK(total == 1.0f);
  }
}

TEST_CASE("generation is deterministic given the seed") {
  const auto spec = tiny_spec(8, 77);
  const auto a = generate_synthetic_lesions(spec);
  const auto b = generate_synthetic_lesions(spec);
  REQUIRE(a.size() == b.size());
  for (size_t s = 0; s < a.size(); ++s) CHECK(a[s].equals(b[s]));
  auto other = spec;
  other.seed = 78;
  const auto c = generate_synthetic_lesions(other);
  bool all_same = true;
  for (size_t s = 0; s < a.size(); ++s) all_same = all_same && a[s].equals(c[s]);
  CHECK_FALSE(all_same);
}

TEST_CASE("every lesion is 26-connected and sizes track the log-normal mean") {
  SyntheticSpec spec = tiny_spec(50, 21);
  spec.grid = GridShape{{16, 16, 16}, {1, 1, 1}};
  spec.territory_center = {7.5, 7.5, 7.5};
  spec.territory_decay = 5.0;
  spec.roi = make_sphere_roi(spec.grid, {10.0, 7.5, 7.5}, 2.0);
  spec.lesion_mu_log = std::log(60.0);
  spec.lesion_sigma_log = 0.35;
  const auto lesions = generate_synthetic_lesions(spec);

  double total_size = 0;
  for (const auto& v : lesions) {
    std::vector<int64_t> voxels;
    for (size_t j = 0; j < v.values.size(); ++j)
      if (v.values[j] != 0.0f) voxels.push_back(static_cast<int64_t>(j));
    total_size += static_cast<double>(voxels.size());
    const auto comps = oracle::flood_fill_components(voxels, spec.grid, 26);
    CHECK(comps.size() == 1);
  }
  const double mean_size = total_size / 50.0;
  const double expected = 60.0 * std::exp(0.35 * 0.35 / 2.0);
  CHECK(std::fabs(mean_size - expected) / expected < 0.15);
}

TEST_CASE("synthetic cohort satisfies the default mask rule") {
  const auto [cohort, roi] = generate_synthetic_cohort(tiny_spec(20, 31));
  const auto [min_l, min_i] = cohort.mask_rule.resolve(20);
  CHECK(min_l == 2);
  for (size_t j = 0; j < cohort.mask_size(); ++j) {
    CHECK(cohort.lesioned_count(j) >= min_l);
    CHECK(20 - cohort.lesioned_count(j) >= min_i);
  }
}

TEST_CASE("false_positive_rate counts exceeding permutations") {
  NullDistribution null;
  null.collect.p_thresholds = {0.01};
  null.n_perms = 100;
  null.records.resize(100);
  for (uint32_t i = 0; i < 100; ++i) {
    null.records[i].max_cluster = {i < 7 ? 50u : 3u};
    null.records[i].cluster_sizes = {{null.records[i].max_cluster[0]}};
    null.records[i].supra_count = {null.records[i].max_cluster[0]};
  }
  CHECK(false_positive_rate(null, 0.01, 10) == doctest::Approx(0.07));
  SUBCASE("threshold at/above every cluster gives zero") {
    CHECK(false_positive_rate(null, 0.01, 50) == 0.0);
  }
}

TEST_CASE("spillover metrics") {
  const auto [cohort, roi] = generate_synthetic_cohort(tiny_spec(16, 41));

  SUBCASE("supra set equal to the roi gives extent 1 and dice 1") {
    CorrectionResult r;
    for (size_t j = 0; j < cohort.mask_size(); ++j)
      if (std::binary_search(roi.voxels.begin(), roi.voxels.end(), cohort.mask_index[j]))
        r.supra.push_back(static_cast<uint32_t>(j));
    r.n_supra = r.supra.size();
    // in-mask subset of the roi: metrics computed against the full roi size,
    // so restrict the reference roi to in-mask voxels for the identity case
    RoiMask in_mask_roi;
    for (uint32_t pos : r.supra) in_mask_roi.voxels.push_back(cohort.mask_index[pos]);
    const auto m = spillover_metrics(r, cohort, in_mask_roi);
    CHECK(m.extent_ratio == 1.0);
    CHECK(m.dice == 1.0);
    CHECK(m.n_out_roi == 0);
  }
  SUBCASE("disjoint sets give dice 0") {
    CorrectionResult r;
    for (size_t j = 0; j < cohort.mask_size() && r.supra.size() < 5; ++j)
      if (!std::binary_search(roi.voxels.begin(), roi.voxels.end(), cohort.mask_index[j]))
        r.supra.push_back(static_cast<uint32_t>(j));
    r.n_supra = r.supra.size();
    const auto m = spillover_metrics(r, cohort, roi);
    CHECK(m.dice == 0.0);
    CHECK(m.n_in_roi == 0);
  }
  SUBCASE("random sets match direct set arithmetic") {
    StreamRng rng(5, 5);
    for (int trial = 0; trial < 5; ++trial) {
      CorrectionResult r;
      for (size_t j = 0; j < cohort.mask_size(); ++j)
        if (rng.next_double() < 0.3) r.supra.push_back(static_cast<uint32_t>(j));
      r.n_supra = r.supra.size();
      const auto m = spillover_metrics(r, cohort, roi);
      size_t n_in = 0;
      for (uint32_t pos : r.supra)
        n_in += std::binary_search(roi.voxels.begin(), roi.voxels.end(),
                                   cohort.mask_index[pos]);
      CHECK(m.n_in_roi == n_in);
      CHECK(m.n_out_roi == r.n_supra - n_in);
      CHECK(m.extent_ratio ==
            doctest::Approx(static_cast<double>(r.n_supra) / roi.voxels.size()));
      CHECK(m.dice == doctest::Approx(2.0 * n_in /
                                      (static_cast<double>(r.n_supra) + roi.voxels.size())));
      CHECK(m.dice >= 0.0);
      CHECK(m.dice <= 1.0);
    }
  }
}

TEST_CASE("cluster FPR experiment smoke: max variant controls in-sample rate") {
  ClusterFprConfig config;
  config.spec = tiny_spec(16, 51);
  config.n_perms_defining = 80;
  config.n_perms_holdout = 80;
  config.p_thresholds = {0.05, 0.01};
  const auto report = run_cluster_fpr_experiment(config);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    if (row.variant == ClusterVariant::max)
      CHECK(row.fpr_in_sample <= config.alpha + 1e-12);
    CHECK(row.fpr_holdout >= 0.0);
    CHECK(row.fpr_holdout <= 1.0);
  }
  SUBCASE("deterministic reports") {
    const auto again = run_cluster_fpr_experiment(config);
    for (size_t i = 0; i < report.rows.size(); ++i) {
      CHECK(report.rows[i].size_threshold == again.rows[i].size_threshold);
      CHECK(report.rows[i].fpr_in_sample == again.rows[i].fpr_in_sample);
      CHECK(report.rows[i].fpr_holdout == again.rows[i].fpr_holdout);
    }
  }
}

TEST_CASE("method comparison cells match independent recomputation from the null") {
  MethodComparisonConfig config;
  config.spec = tiny_spec(14, 61);
  config.fractions = {1.0};
  config.n_repeats = 1;
  config.n_perms = 60;
  config.v_list = {1, 5};
  const auto report = run_method_comparison(config);
  REQUIRE(report.cells.size() == 2);

  // recompute by composing module operations directly
  auto [cohort, roi] = generate_synthetic_cohort(config.spec);
  const auto scores = synthetic_scores(config.spec, cohort);
  auto [sub, sub_scores] = subsample(cohort, scores, 1.0,
                                     derive_seed(config.spec.seed, "subsample-f1-r0"));
  CollectConfig collect;
  collect.top_k = static_cast<uint32_t>(std::min<size_t>(1000, sub.mask_size()));
  const auto plan = generate_permutations(
      sub.n_subjects(), 60, derive_seed(config.spec.seed, "subsample-f1-r0-perms"));
  const auto null = run_permutation_pass(sub, sub_scores, plan, collect);
  const auto observed = voxel_t_map(sub, sub_scores);

  for (const auto& cell : report.cells) {
    const double expected_t = cfwer_threshold(null, cell.row.v, config.alpha);
    CHECK(cell.row.t_cfwer == expected_t);
    const auto applied = apply_t_threshold(observed, expected_t);
    CHECK(cell.row.n_supra_cfwer == applied.n_supra);
  }
}

TEST_CASE("identical seeds give identical reports") {
  MethodComparisonConfig config;
  config.spec = tiny_spec(12, 71);
  config.fractions = {0.75};
  config.n_repeats = 2;
  config.n_perms = 40;
  config.v_list = {1, 10};
  const auto a = run_method_comparison(config);
  const auto b = run_method_comparison(config);
  REQUIRE(a.cells.size() == b.cells.size());
  for (size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].row.t_cfwer == b.cells[i].row.t_cfwer);
    CHECK(a.cells[i].row.n_supra_cfwer == b.cells[i].row.n_supra_cfwer);
    CHECK(a.cells[i].row.eff_q == b.cells[i].row.eff_q);
    CHECK(a.cells[i].row.t_fdr == b.cells[i].row.t_fdr);
  }
}

TEST_CASE("spillover experiment emits one cluster row plus one row per v") {
  SpilloverConfig config;
  config.spec = tiny_spec(18, 81);
  config.n_perms = 60;
  config.cluster_p = 0.01;
  config.v_list = {1, 10};
  config.p_thresholds = {0.05, 0.01};
  const auto report = run_spillover_experiment(config);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].method.substr(0, 11) == "cluster-max");
  CHECK(report.rows[1].method == "cfwer@v=1");
  CHECK(report.rows[2].method == "cfwer@v=10");
}

TEST_CASE("lesion growth seeds concentrate near the territory center") {
  SyntheticSpec spec = tiny_spec(60, 91);
  spec.lesion_mu_log = 0.0;
  spec.lesion_sigma_log = 0.0;  // single-voxel lesions = the seed voxels
  const auto lesions = generate_synthetic_lesions(spec);
  double near = 0, far = 0;
  for (const auto& v : lesions) {
    for (size_t j = 0; j < v.values.size(); ++j) {
      if (v.values[j] == 0.0f) continue;
      const auto c = spec.grid.coord(static_cast<int64_t>(j));
      const double dx = c.i - spec.territory_center[0];
      const double dy = c.j - spec.territory_center[1];
      const double dz = c.k - spec.territory_center[2];
      (std::sqrt(dx * dx + dy * dy + dz * dz) < 4.0 ? near : far) += 1.0;
    }
  }
  CHECK(near > far);
}

}  // TEST_SUITE

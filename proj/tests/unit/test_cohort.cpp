// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support/oracles.hpp"
#include "vlsm/cohort.hpp"
#include "vlsm/error.hpp"
#include "vlsm/rng.hpp"

using namespace vlsm;

namespace {

Volume3D binary_volume(GridShape grid, const std::vector<int64_t>& lesioned) {
  Volume3D v = make_volume(grid, VoxelType::binary);
  for (int64_t lin : lesioned) v.values[static_cast<size_t>(lin)] = 1.0f;
  return v;
}

std::vector<Volume3D> random_lesions(GridShape grid, size_t n, double p, uint64_t seed) {
  std::vector<Volume3D> out;
  for (size_t s = 0; s < n; ++s) {
    Volume3D v = make_volume(grid, VoxelType::binary);
    StreamRng rng(seed, s);
    for (auto& x : v.values) x = rng.next_double() < p ? 1.0f : 0.0f;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::string> ids(size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

}  // namespace

TEST_SUITE("cohort") {

TEST_CASE("two-subject cohort keeps the mixed voxel under cutoffs (1,1)") {
  const GridShape grid{{2, 1, 1}, {1, 1, 1}};
  const auto cohort = build_cohort(
      {binary_volume(grid, {0}), binary_volume(grid, {})}, ids(2));
  const auto mask = compute_analysis_mask(cohort, 1, 1);
  CHECK(mask == std::vector<int64_t>{0});
}

TEST_CASE("two identical volumes give identical rows") {
  const GridShape grid{{3, 2, 1}, {1, 1, 1}};
  const auto cohort = build_cohort(
      {binary_volume(grid, {1, 4}), binary_volume(grid, {1, 4})}, ids(2));
  for (size_t j = 0; j < 6; ++j)
    CHECK(cohort.lesion_bits.get(0, j) == cohort.lesion_bits.get(1, j));
}

TEST_CASE("column sums equal voxel-wise lesion overlap counts") {
  const GridShape grid{{5, 4, 3}, {1, 1, 1}};
  const auto volumes = random_lesions(grid, 20, 0.3, 77);
  const auto cohort = build_cohort(volumes, ids(20));
  // recount by direct volume summation
  for (int64_t j = 0; j < grid.voxel_count(); ++j) {
    float overlap = 0;
    for (const auto& v : volumes) overlap += v.values[static_cast<size_t>(j)];
    uint32_t col = 0;
    for (uint32_t s = 0; s < 20; ++s) col += cohort.lesion_bits.get(s, static_cast<size_t>(j));
    CHECK(col == static_cast<uint32_t>(overlap));
  }
}

TEST_CASE("build errors") {
  const GridShape grid{{2, 2, 1}, {1, 1, 1}};
  CHECK_THROWS_AS(build_cohort({binary_volume(grid, {}),
                                binary_volume(GridShape{{2, 2, 2}, {1, 1, 1}}, {})},
                               ids(2)),
                  ValidationError);
  CHECK_THROWS_AS(build_cohort({binary_volume(grid, {}), binary_volume(grid, {})},
                               {"a", "a"}),
                  ValidationError);
}

TEST_CASE("mask boundary arithmetic at N=100 with cutoffs (10,10)") {
  const GridShape grid{{2, 1, 1}, {1, 1, 1}};
  std::vector<Volume3D> volumes;
  for (int s = 0; s < 100; ++s) {
    std::vector<int64_t> lesioned;
    if (s < 10) lesioned.push_back(0);  // voxel 0: exactly 10 lesioned
    if (s < 9) lesioned.push_back(1);   // voxel 1: 9 lesioned
    volumes.push_back(binary_volume(grid, lesioned));
  }
  const auto cohort = build_cohort(volumes, ids(100));
  const auto mask = compute_analysis_mask(cohort, 10, 10);
  CHECK(mask == std::vector<int64_t>{0});
}

TEST_CASE("voxels lesioned in all or no subjects are excluded at (1,1)") {
  const GridShape grid{{3, 1, 1}, {1, 1, 1}};
  // voxel 0: all lesioned; voxel 1: none; voxel 2: mixed
  const auto cohort = build_cohort(
      {binary_volume(grid, {0, 2}), binary_volume(grid, {0})}, ids(2));
  const auto mask = compute_analysis_mask(cohort, 1, 1);
  CHECK(mask == std::vector<int64_t>{2});
}

TEST_CASE("masking is monotone in the cutoffs") {
  const GridShape grid{{6, 6, 6}, {1, 1, 1}};
  const auto cohort = build_cohort(random_lesions(grid, 30, 0.4, 5), ids(30));
  auto prev = compute_analysis_mask(cohort, 1, 1);
  for (uint32_t cut = 2; cut <= 8; ++cut) {
    std::vector<int64_t> cur;
    try {
      cur = compute_analysis_mask(cohort, cut, cut);
    } catch (const ValidationError&) {
      break;  // empty mask ends the ladder
    }
    CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
    prev = cur;
  }
}

TEST_CASE("percent damage score") {
  const GridShape grid{{10, 1, 1}, {1, 1, 1}};
  RoiMask roi;
  roi.voxels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto cohort = build_cohort(
      {binary_volume(grid, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}),  // covers whole roi
       binary_volume(grid, {}),                               // disjoint
       binary_volume(grid, {0, 1, 2, 3, 4})},                 // half
      ids(3));
  const auto s = percent_damage_score(cohort, roi);
  CHECK(s.values[0] == 1.0);
  CHECK(s.values[1] == 0.0);
  CHECK(s.values[2] == 0.5);

  SUBCASE("empty roi is rejected") {
    RoiMask empty;
    CHECK_THROWS_AS(percent_damage_score(cohort, empty), ValidationError);
  }
  SUBCASE("score is 1 iff roi subset of lesion") {
    for (uint32_t sub = 0; sub < 3; ++sub) {
      bool covers = true;
      for (int64_t v : roi.voxels)
        covers = covers && cohort.lesion_bits.get(sub, static_cast<size_t>(v));
      CHECK((s.values[sub] == 1.0) == covers);
    }
  }
}

TEST_CASE("add_noise") {
  ScoreVector s;
  s.values = {0.1, 0.5, 0.9, 0.3};

  SUBCASE("sd 0 is the identity") { CHECK(add_noise(s, 0.0, 7).values == s.values); }
  SUBCASE("same seed twice gives identical outputs") {
    CHECK(add_noise(s, 1.0, 7).values == add_noise(s, 1.0, 7).values);
  }
  SUBCASE("negative sd rejected") { CHECK_THROWS_AS(add_noise(s, -1.0, 7), ValidationError); }
  SUBCASE("sample sd of the added noise is within 5% of 1 for n = 10^4") {
    ScoreVector big;
    big.values.assign(10000, 0.0);
    const auto noisy = add_noise(big, 1.0, 123);
    double mean = std::accumulate(noisy.values.begin(), noisy.values.end(), 0.0) / 10000.0;
    double ss = 0;
    for (double v : noisy.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (10000.0 - 1.0));
    CHECK(sd == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("subsample") {
  const GridShape grid{{8, 8, 8}, {1, 1, 1}};
  const auto premask = build_cohort(random_lesions(grid, 124, 0.25, 99), ids(124));
  const auto cohort = apply_mask_rule(premask, MaskRule{});
  ScoreVector scores;
  StreamRng rng(4, 4);
  for (uint32_t s = 0; s < 124; ++s) scores.values.push_back(rng.next_double());

  SUBCASE("fraction 1.0 keeps the same subjects in order") {
    const auto [sub, ss] = subsample(cohort, scores, 1.0, 11);
    CHECK(sub.subject_ids == cohort.subject_ids);
    CHECK(ss.values == scores.values);
  }
  SUBCASE("half-sample of 124 has 62 subjects") {
    const auto [sub, ss] = subsample(cohort, scores, 0.5, 11);
    CHECK(sub.n_subjects() == 62);
    CHECK(ss.values.size() == 62);
  }
  SUBCASE("quarter-sample of 124 has 31 subjects") {
    const auto [sub, ss] = subsample(cohort, scores, 0.25, 11);
    CHECK(sub.n_subjects() == 31);
  }
  SUBCASE("deterministic given seed, different across seeds") {
    const auto a = subsample(cohort, scores, 0.5, 11);
    const auto b = subsample(cohort, scores, 0.5, 11);
    const auto c = subsample(cohort, scores, 0.5, 12);
    CHECK(a.first.subject_ids == b.first.subject_ids);
    CHECK(a.second.values == b.second.values);
    CHECK(a.first.subject_ids != c.first.subject_ids);
  }
  SUBCASE("subset keeps original relative order and scores stay aligned") {
    const auto [sub, ss] = subsample(cohort, scores, 0.5, 3);
    size_t cursor = 0;
    for (size_t r = 0; r < sub.subject_ids.size(); ++r) {
      while (cohort.subject_ids[cursor] != sub.subject_ids[r]) ++cursor;
      CHECK(ss.values[r] == scores.values[cursor]);
    }
  }
  SUBCASE("mask recomputed with the rule for the smaller N") {
    const auto [sub, ss] = subsample(cohort, scores, 0.25, 11);
    const auto [min_l, min_i] = sub.mask_rule.resolve(sub.n_subjects());
    for (size_t j = 0; j < sub.mask_size(); ++j) {
      const uint32_t lesioned = sub.lesioned_count(j);
      CHECK(lesioned >= min_l);
      CHECK(sub.n_subjects() - lesioned >= min_i);
    }
  }
  SUBCASE("too-small request rejected") {
    CHECK_THROWS_AS(subsample(cohort, scores, 0.005, 11), ValidationError);
  }
}

TEST_CASE("score validation") {
  ScoreVector s;
  s.values = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(s.validate(3), ValidationError);  // all identical
  s.values = {1.0, 2.0};
  CHECK_THROWS_AS(s.validate(3), ValidationError);  // wrong length
}

}  // TEST_SUITE

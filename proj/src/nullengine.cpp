// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/nullengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vlsm/error.hpp"
#include "vlsm/rng.hpp"
#include "vlsm/util.hpp"

namespace vlsm {

std::vector<uint32_t> permutation_order(uint64_t seed, uint32_t index, uint32_t n_subjects) {
  std::vector<uint32_t> order(n_subjects);
  for (uint32_t s = 0; s < n_subjects; ++s) order[s] = s;
  StreamRng rng(seed, index);
  shuffle(std::span<uint32_t>(order), rng);
  return order;
}

PermutationPlan generate_permutations(uint32_t n_subjects, uint32_t n_perms, uint64_t seed) {
  if (n_subjects < 1) throw ValidationError("need at least one subject");
  if (n_perms < 1) throw ValidationError("need at least one permutation");
  PermutationPlan plan;
  plan.seed = seed;
  plan.n_perms = n_perms;
  plan.n_subjects = n_subjects;
  plan.orders.resize(n_perms);
  for (uint32_t i = 0; i < n_perms; ++i)
    plan.orders[i] = permutation_order(seed, i, n_subjects);
  return plan;
}

size_t NullDistribution::threshold_index(double p_threshold) const {
  for (size_t i = 0; i < collect.p_thresholds.size(); ++i)
    if (collect.p_thresholds[i] == p_threshold) return i;
  throw ValidationError("p-threshold " + fmt_double(p_threshold) +
                        " was not collected in this null distribution");
}

double kth_largest(std::span<const double> values, size_t k) {
  if (k < 1 || k > values.size())
    throw ValidationError("kth_largest: k out of range");
  std::vector<double> copy(values.begin(), values.end());
  std::nth_element(copy.begin(), copy.begin() + (k - 1), copy.end(), std::greater<>());
  return copy[k - 1];
}

uint64_t null_content_hash(const CohortMatrix& cohort, const ScoreVector& scores,
                           const CollectConfig& collect, uint64_t seed, uint32_t n_perms) {
  Fnv1a h;
  h.update_u64(cohort.content_hash());
  h.update_u64(scores.values.size());
  for (double v : scores.values) h.update_double(v);
  h.update_u64(collect.top_k);
  h.update_u64(collect.p_thresholds.size());
  for (double p : collect.p_thresholds) h.update_double(p);
  h.update_u64(collect.tails == Tails::two_sided ? 2 : 1);
  h.update_u64(static_cast<uint64_t>(static_cast<int>(collect.connectivity)));
  h.update_u64(seed);
  h.update_u64(n_perms);
  return h.value();
}

namespace {

void validate_collect(const CohortMatrix& cohort, const CollectConfig& collect) {
  if (collect.top_k < 1) throw ValidationError("top_k must be >= 1");
  if (collect.top_k > cohort.mask_size())
    throw ValidationError("top_k exceeds the analysis mask size");
  if (collect.p_thresholds.empty())
    throw ValidationError("at least one p-threshold must be collected");
  for (double p : collect.p_thresholds)
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("p-thresholds must lie in (0, 1)");
}

struct PassScratch {
  std::vector<double> permuted;
  std::vector<double> stat;      // stat_value(t) per mask voxel
  std::vector<double> top_buf;
  std::vector<uint8_t> supra;
  ClusterScratch clusters;
  ClusterLabeling labeling;
};

}  // namespace

NullDistribution run_permutation_pass(const CohortMatrix& cohort, const ScoreVector& scores,
                                      const PermutationPlan& plan, const CollectConfig& collect,
                                      unsigned workers) {
  scores.validate(cohort.n_subjects());
  validate_collect(cohort, collect);
  if (plan.n_subjects != cohort.n_subjects())
    throw ValidationError("permutation plan subject count does not match cohort");
  if (cohort.n_subjects() < 3)
    throw ValidationError("permutation pass requires at least 3 subjects");

  NullDistribution null;
  null.collect = collect;
  null.seed = plan.seed;
  null.n_perms = plan.n_perms;
  null.n_subjects = cohort.n_subjects();
  null.df = cohort.n_subjects() - 2;
  null.mask_voxels = cohort.mask_size();
  null.content_hash = null_content_hash(cohort, scores, collect, plan.seed, plan.n_perms);
  null.t_cutoffs.reserve(collect.p_thresholds.size());
  for (double p : collect.p_thresholds)
    null.t_cutoffs.push_back(p_threshold_to_t(p, null.df, collect.tails));
  null.records.resize(plan.n_perms);

  const auto ctx = detail::make_voxel_contexts(cohort);
  const auto centered = detail::center_scores(scores.values);
  const TMapOptions t_options{collect.tails, collect.degenerate, collect.t_max};
  const MaskAdjacency adjacency(cohort.mask_index, cohort.grid, collect.connectivity);
  const size_t n_mask = cohort.mask_size();
  const size_t n_thresholds = collect.p_thresholds.size();
  const uint32_t n_sub = cohort.n_subjects();
  const uint32_t top_k = collect.top_k;

  parallel_for_chunks(plan.n_perms, workers, [&](size_t begin, size_t end, unsigned) {
    PassScratch scratch;
    scratch.permuted.resize(n_sub);
    scratch.stat.resize(n_mask);
    scratch.supra.resize(n_mask);

    for (size_t i = begin; i < end; ++i) {
      const auto& order = plan.orders[i];
      for (uint32_t s = 0; s < n_sub; ++s)
        scratch.permuted[s] = centered.centered[order[s]];

      for (size_t j = 0; j < n_mask; ++j) {
        double s1 = 0.0;
        for (uint32_t s : cohort.lesioned_subjects(j)) s1 += scratch.permuted[s];
        scratch.stat[j] =
            stat_value(detail::t_from_s1(s1, ctx[j], centered.total_ss, t_options),
                       collect.tails);
      }

      NullRecord& rec = null.records[i];
      rec.perm_index = static_cast<uint32_t>(i);

      scratch.top_buf = scratch.stat;
      std::nth_element(scratch.top_buf.begin(), scratch.top_buf.begin() + (top_k - 1),
                       scratch.top_buf.end(), std::greater<>());
      rec.top_t.assign(scratch.top_buf.begin(), scratch.top_buf.begin() + top_k);
      std::sort(rec.top_t.begin(), rec.top_t.end(), std::greater<>());

      rec.cluster_sizes.resize(n_thresholds);
      rec.max_cluster.resize(n_thresholds);
      rec.supra_count.resize(n_thresholds);
      for (size_t ti = 0; ti < n_thresholds; ++ti) {
        const double cutoff = null.t_cutoffs[ti];
        uint32_t count = 0;
        for (size_t j = 0; j < n_mask; ++j) {
          const bool over = scratch.stat[j] > cutoff;
          scratch.supra[j] = over;
          count += over;
        }
        ClusterEngine::label(adjacency, scratch.supra, scratch.clusters, scratch.labeling);
        rec.cluster_sizes[ti] = scratch.labeling.sizes;
        rec.max_cluster[ti] = max_cluster_size(scratch.labeling);
        rec.supra_count[ti] = count;
      }
    }
  });

  return null;
}

// ---------------------------------------------------------------------------
// Cache I/O

namespace {

constexpr char kCacheMagic[8] = {'V', 'L', 'S', 'M', 'N', 'U', 'L', 'L'};
constexpr uint32_t kCacheVersion = 1;

template <typename T>
void put(std::vector<unsigned char>& out, const T& v) {
  const auto* p = reinterpret_cast<const unsigned char*>(&v);
  out.insert(out.end(), p, p + sizeof v);
}

template <typename T>
T take(const std::vector<unsigned char>& in, size_t& off, const std::string& path) {
  if (off + sizeof(T) > in.size()) throw ValidationError("truncated null cache", path);
  T v;
  std::memcpy(&v, in.data() + off, sizeof v);
  off += sizeof v;
  return v;
}

}  // namespace

void save_null_cache(const NullDistribution& null, const std::string& path) {
  nlohmann::json meta;
  meta["format"] = "vlsmperm-null-cache";
  meta["version"] = kCacheVersion;
  meta["content_hash"] = hex64(null.content_hash);
  meta["seed"] = null.seed;
  meta["n_perms"] = null.n_perms;
  meta["n_subjects"] = null.n_subjects;
  meta["df"] = null.df;
  meta["mask_voxels"] = null.mask_voxels;
  meta["top_k"] = null.collect.top_k;
  meta["p_thresholds"] = null.collect.p_thresholds;
  meta["t_cutoffs"] = null.t_cutoffs;
  meta["tails"] = null.collect.tails == Tails::two_sided ? "two" : "one";
  meta["connectivity"] = static_cast<int>(null.collect.connectivity);
  const std::string meta_str = meta.dump();

  std::vector<unsigned char> bytes;
  bytes.insert(bytes.end(), kCacheMagic, kCacheMagic + 8);
  put(bytes, kCacheVersion);
  put(bytes, static_cast<uint32_t>(meta_str.size()));
  bytes.insert(bytes.end(), meta_str.begin(), meta_str.end());

  const size_t n_thr = null.collect.p_thresholds.size();
  for (const auto& rec : null.records)
    for (double t : rec.top_t) put(bytes, t);
  for (size_t ti = 0; ti < n_thr; ++ti) {
    for (const auto& rec : null.records) put(bytes, rec.max_cluster[ti]);
    for (const auto& rec : null.records) put(bytes, rec.supra_count[ti]);
    uint64_t total = 0;
    put(bytes, total);
    std::vector<unsigned char> sizes_flat;
    for (const auto& rec : null.records) {
      total += rec.cluster_sizes[ti].size();
      put(bytes, total);
      for (uint32_t s : rec.cluster_sizes[ti]) put(sizes_flat, s);
    }
    bytes.insert(bytes.end(), sizes_flat.begin(), sizes_flat.end());
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open null cache for writing", path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RuntimeError("failed to write null cache", path);
}

NullDistribution load_null_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open null cache", path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  size_t off = 0;
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCacheMagic, 8) != 0)
    throw ValidationError("not a vlsmperm null cache", path);
  off = 8;
  const auto version = take<uint32_t>(bytes, off, path);
  if (version != kCacheVersion)
    throw ValidationError("unsupported null cache version " + std::to_string(version), path);
  const auto meta_len = take<uint32_t>(bytes, off, path);
  if (off + meta_len > bytes.size()) throw ValidationError("truncated null cache", path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.begin() + off, bytes.begin() + off + meta_len);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad null cache metadata: ") + e.what(), path);
  }
  off += meta_len;

  NullDistribution null;
  null.seed = meta.at("seed").get<uint64_t>();
  null.n_perms = meta.at("n_perms").get<uint32_t>();
  null.n_subjects = meta.at("n_subjects").get<uint32_t>();
  null.df = meta.at("df").get<uint32_t>();
  null.mask_voxels = meta.at("mask_voxels").get<uint64_t>();
  null.collect.top_k = meta.at("top_k").get<uint32_t>();
  null.collect.p_thresholds = meta.at("p_thresholds").get<std::vector<double>>();
  null.t_cutoffs = meta.at("t_cutoffs").get<std::vector<double>>();
  null.collect.tails = meta.at("tails").get<std::string>() == "two" ? Tails::two_sided
                                                                    : Tails::one_sided;
  null.collect.connectivity =
      static_cast<Connectivity>(meta.at("connectivity").get<int>());
  null.content_hash = std::stoull(meta.at("content_hash").get<std::string>(), nullptr, 16);

  const size_t n_thr = null.collect.p_thresholds.size();
  null.records.resize(null.n_perms);
  for (uint32_t i = 0; i < null.n_perms; ++i) {
    auto& rec = null.records[i];
    rec.perm_index = i;
    rec.top_t.resize(null.collect.top_k);
    for (auto& t : rec.top_t) t = take<double>(bytes, off, path);
    rec.cluster_sizes.resize(n_thr);
    rec.max_cluster.resize(n_thr);
    rec.supra_count.resize(n_thr);
  }
  for (size_t ti = 0; ti < n_thr; ++ti) {
    for (auto& rec : null.records) rec.max_cluster[ti] = take<uint32_t>(bytes, off, path);
    for (auto& rec : null.records) rec.supra_count[ti] = take<uint32_t>(bytes, off, path);
    std::vector<uint64_t> offsets(null.n_perms + 1);
    for (auto& o : offsets) o = take<uint64_t>(bytes, off, path);
    for (uint32_t i = 0; i < null.n_perms; ++i) {
      if (offsets[i + 1] < offsets[i]) throw ValidationError("corrupt null cache offsets", path);
      auto& sizes = null.records[i].cluster_sizes[ti];
      sizes.resize(offsets[i + 1] - offsets[i]);
      for (auto& s : sizes) s = take<uint32_t>(bytes, off, path);
    }
  }
  if (off != bytes.size()) throw ValidationError("trailing bytes in null cache", path);
  return null;
}

}  // namespace vlsm

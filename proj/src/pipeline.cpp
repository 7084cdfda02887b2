// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "vlsm/error.hpp"
#include "vlsm/report.hpp"
#include "vlsm/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vlsm {

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string tails_name(Tails t) { return t == Tails::two_sided ? "two" : "one"; }
Tails tails_from_name(const std::string& s) {
  if (s == "one") return Tails::one_sided;
  if (s == "two") return Tails::two_sided;
  throw ValidationError("tails must be 'one' or 'two'");
}

Connectivity connectivity_from_int(int c) {
  switch (c) {
    case 6: return Connectivity::six;
    case 18: return Connectivity::eighteen;
    case 26: return Connectivity::twentysix;
    default: throw ValidationError("connectivity must be 6, 18, or 26");
  }
}

std::string variant_name(ClusterVariant v) {
  return v == ClusterVariant::all ? "all" : "max";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create output directory: " + ec.message(), dir);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open JSON file", path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what(), path);
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open file for writing", path);
  out << text;
  if (!out) throw RuntimeError("write failed", path);
}

}  // namespace

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  if (!(fdr_q > 0.0 && fdr_q < 1.0)) throw ValidationError("q must be in (0, 1)");
  if (n_perms < 1) throw ValidationError("perms must be >= 1");
  if (v_list.empty()) throw ValidationError("v list must not be empty");
  for (size_t i = 1; i < v_list.size(); ++i)
    if (v_list[i] <= v_list[i - 1])
      throw ValidationError("v list must be strictly increasing");
  if (p_thresholds.empty()) throw ValidationError("p-thresholds must not be empty");
  for (size_t i = 0; i < p_thresholds.size(); ++i) {
    if (!(p_thresholds[i] > 0 && p_thresholds[i] < 1))
      throw ValidationError("p-thresholds must lie in (0, 1)");
    if (i > 0 && p_thresholds[i] >= p_thresholds[i - 1])
      throw ValidationError("p-thresholds must be strictly decreasing");
  }
  static const std::vector<std::string> corrections{"cluster-all", "cluster-max", "cfwer",
                                                    "fdr", "all"};
  if (std::find(corrections.begin(), corrections.end(), correction) == corrections.end())
    throw ValidationError("unknown correction '" + correction + "'");
  static const std::vector<std::string> experiments{"cluster-fpr", "spillover",
                                                    "method-comparison", "all"};
  if (std::find(experiments.begin(), experiments.end(), eval.experiment) == experiments.end())
    throw ValidationError("unknown experiment '" + eval.experiment + "'");
}

json config_to_json(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["manifest"] = c.manifest_path;
  j["scores"] = c.scores_path;
  j["roi"] = c.roi_path;
  j["null_cache"] = c.null_cache_path;
  j["out"] = c.out_dir;
  j["invert_scores"] = c.invert_scores;
  j["tails"] = tails_name(c.tails);
  j["connectivity"] = static_cast<int>(c.connectivity);
  if (c.mask_min_lesioned) j["mask_min_lesioned"] = *c.mask_min_lesioned;
  if (c.mask_min_intact) j["mask_min_intact"] = *c.mask_min_intact;
  j["alpha"] = c.alpha;
  j["v_list"] = c.v_list;
  j["p_thresholds"] = c.p_thresholds;
  j["fdr_q"] = c.fdr_q;
  j["perms"] = c.n_perms;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["correction"] = c.correction;
  j["degenerate_policy"] = c.degenerate == DegeneratePolicy::clamp ? "clamp" : "error";
  j["t_max"] = c.t_max;
  json sim;
  sim["grid"] = c.sim.grid;
  sim["voxel_size"] = c.sim.voxel_size;
  if (c.sim.subjects) sim["subjects"] = *c.sim.subjects;
  sim["lesion_mu"] = c.sim.lesion_mu;
  sim["lesion_sigma"] = c.sim.lesion_sigma;
  if (c.sim.center) sim["center"] = *c.sim.center;
  if (c.sim.decay) sim["decay"] = *c.sim.decay;
  if (c.sim.roi_center) sim["roi_center"] = *c.sim.roi_center;
  if (c.sim.roi_radius) sim["roi_radius"] = *c.sim.roi_radius;
  if (c.sim.noise_sd) sim["noise_sd"] = *c.sim.noise_sd;
  j["simulate"] = sim;
  json ev;
  ev["experiment"] = c.eval.experiment;
  ev["fractions"] = c.eval.fractions;
  ev["repeats"] = c.eval.repeats;
  ev["perms_defining"] = c.eval.perms_defining;
  ev["perms_holdout"] = c.eval.perms_holdout;
  j["evaluate"] = ev;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("subcommand")) c.subcommand = j["subcommand"].get<std::string>();
    if (j.contains("manifest")) c.manifest_path = j["manifest"].get<std::string>();
    if (j.contains("scores")) c.scores_path = j["scores"].get<std::string>();
    if (j.contains("roi")) c.roi_path = j["roi"].get<std::string>();
    if (j.contains("null_cache")) c.null_cache_path = j["null_cache"].get<std::string>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    if (j.contains("invert_scores")) c.invert_scores = j["invert_scores"].get<bool>();
    if (j.contains("tails")) c.tails = tails_from_name(j["tails"].get<std::string>());
    if (j.contains("connectivity"))
      c.connectivity = connectivity_from_int(j["connectivity"].get<int>());
    if (j.contains("mask_min_lesioned"))
      c.mask_min_lesioned = j["mask_min_lesioned"].get<uint32_t>();
    if (j.contains("mask_min_intact"))
      c.mask_min_intact = j["mask_min_intact"].get<uint32_t>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("v_list")) c.v_list = j["v_list"].get<std::vector<uint32_t>>();
    if (j.contains("p_thresholds"))
      c.p_thresholds = j["p_thresholds"].get<std::vector<double>>();
    if (j.contains("fdr_q")) c.fdr_q = j["fdr_q"].get<double>();
    if (j.contains("perms")) c.n_perms = j["perms"].get<uint32_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<unsigned>();
    if (j.contains("correction")) c.correction = j["correction"].get<std::string>();
    if (j.contains("degenerate_policy"))
      c.degenerate = j["degenerate_policy"].get<std::string>() == "clamp"
                         ? DegeneratePolicy::clamp
                         : DegeneratePolicy::error;
    if (j.contains("t_max")) c.t_max = j["t_max"].get<double>();
    if (j.contains("simulate")) {
      const auto& s = j["simulate"];
      if (s.contains("grid")) c.sim.grid = s["grid"].get<std::array<int32_t, 3>>();
      if (s.contains("voxel_size"))
        c.sim.voxel_size = s["voxel_size"].get<std::array<float, 3>>();
      if (s.contains("subjects")) c.sim.subjects = s["subjects"].get<uint32_t>();
      if (s.contains("lesion_mu")) c.sim.lesion_mu = s["lesion_mu"].get<double>();
      if (s.contains("lesion_sigma")) c.sim.lesion_sigma = s["lesion_sigma"].get<double>();
      if (s.contains("center")) c.sim.center = s["center"].get<std::array<double, 3>>();
      if (s.contains("decay")) c.sim.decay = s["decay"].get<double>();
      if (s.contains("roi_center"))
        c.sim.roi_center = s["roi_center"].get<std::array<double, 3>>();
      if (s.contains("roi_radius")) c.sim.roi_radius = s["roi_radius"].get<double>();
      if (s.contains("noise_sd")) c.sim.noise_sd = s["noise_sd"].get<double>();
    }
    if (j.contains("evaluate")) {
      const auto& e = j["evaluate"];
      if (e.contains("experiment")) c.eval.experiment = e["experiment"].get<std::string>();
      if (e.contains("fractions")) c.eval.fractions = e["fractions"].get<std::vector<double>>();
      if (e.contains("repeats")) c.eval.repeats = e["repeats"].get<uint32_t>();
      if (e.contains("perms_defining"))
        c.eval.perms_defining = e["perms_defining"].get<uint32_t>();
      if (e.contains("perms_holdout"))
        c.eval.perms_holdout = e["perms_holdout"].get<uint32_t>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return c;
}

SyntheticSpec spec_from_params(const SimulateParams& sim, uint32_t default_subjects,
                               double default_noise, uint64_t seed) {
  SyntheticSpec spec;
  spec.grid = GridShape{sim.grid, sim.voxel_size};
  spec.n_subjects = sim.subjects.value_or(default_subjects);
  spec.lesion_mu_log = sim.lesion_mu;
  spec.lesion_sigma_log = sim.lesion_sigma;
  const double nx = sim.grid[0];
  const std::array<double, 3> grid_center{(sim.grid[0] - 1) / 2.0, (sim.grid[1] - 1) / 2.0,
                                          (sim.grid[2] - 1) / 2.0};
  spec.territory_center = sim.center.value_or(grid_center);
  spec.territory_decay = sim.decay.value_or(nx / 4.0);
  const std::array<double, 3> roi_center = sim.roi_center.value_or(std::array<double, 3>{
      grid_center[0] + 5.0 * nx / 32.0, grid_center[1], grid_center[2]});
  spec.roi = make_sphere_roi(spec.grid, roi_center, sim.roi_radius.value_or(nx / 8.0));
  spec.noise_sd = sim.noise_sd.value_or(default_noise);
  spec.seed = seed;
  return spec;
}

SyntheticSpec desk_scale_spec(uint32_t n_subjects, uint64_t seed, double noise_sd) {
  return spec_from_params(SimulateParams{}, n_subjects, noise_sd, seed);
}

// Ingestion -----------------------------------------------------------------

ScoreVector read_scores_csv(const std::string& path,
                            const std::vector<std::string>& subject_ids, bool invert) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scores CSV", path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("scores CSV is empty", path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "subject_id,score")
    throw ValidationError("scores CSV must start with header 'subject_id,score'", path);

  std::unordered_map<std::string, double> by_id;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError("scores CSV line " + std::to_string(line_no) + " has no comma",
                            path);
    const std::string id = line.substr(0, comma);
    const std::string value_str = line.substr(comma + 1);
    size_t consumed = 0;
    double value = 0;
    try {
      value = std::stod(value_str, &consumed);
    } catch (const std::exception&) {
      throw ValidationError("scores CSV line " + std::to_string(line_no) +
                                " has a non-numeric score",
                            path);
    }
    if (consumed != value_str.size())
      throw ValidationError("scores CSV line " + std::to_string(line_no) +
                                " has trailing characters after the score",
                            path);
    if (!by_id.emplace(id, value).second)
      throw ValidationError("duplicate subject '" + id + "' in scores CSV", path);
  }

  ScoreVector scores;
  scores.values.reserve(subject_ids.size());
  for (const auto& id : subject_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw ValidationError("subject '" + id + "' missing from scores CSV", path);
    scores.values.push_back(invert ? -it->second : it->second);
  }
  if (by_id.size() != subject_ids.size())
    throw ValidationError("scores CSV contains subjects not in the manifest", path);
  return scores;
}

RoiMask read_roi(const std::string& path, const GridShape& grid) {
  if (path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    const json j = read_json_file(path);
    if (!j.is_array()) throw ValidationError("ROI JSON must be an array of voxel indices", path);
    RoiMask roi;
    roi.voxels = j.get<std::vector<int64_t>>();
    std::sort(roi.voxels.begin(), roi.voxels.end());
    roi.voxels.erase(std::unique(roi.voxels.begin(), roi.voxels.end()), roi.voxels.end());
    roi.validate(grid);
    return roi;
  }
  const Volume3D vol = read_nifti(path);
  if (!(vol.grid == grid))
    throw ValidationError("ROI volume grid does not match the cohort grid", path);
  return roi_from_volume(vol);
}

Dataset load_dataset(const RunConfig& config) {
  if (config.manifest_path.empty())
    throw ValidationError("a cohort manifest is required (--manifest)");
  const json manifest = read_json_file(config.manifest_path);
  if (!manifest.is_array() || manifest.empty())
    throw ValidationError("manifest must be a non-empty JSON array", config.manifest_path);

  const fs::path base = fs::path(config.manifest_path).parent_path();
  std::vector<std::string> ids;
  std::vector<Volume3D> volumes;
  ids.reserve(manifest.size());
  volumes.reserve(manifest.size());
  for (const auto& entry : manifest) {
    if (!entry.contains("subject_id") || !entry.contains("lesion_path"))
      throw ValidationError("manifest entries need subject_id and lesion_path",
                            config.manifest_path);
    ids.push_back(entry["subject_id"].get<std::string>());
    fs::path lesion = entry["lesion_path"].get<std::string>();
    if (lesion.is_relative()) lesion = base / lesion;
    volumes.push_back(read_nifti(lesion.string()));
  }

  Dataset ds;
  ds.cohort = build_cohort(volumes, ids);
  ds.cohort = apply_mask_rule(
      ds.cohort, MaskRule{config.mask_min_lesioned, config.mask_min_intact});

  if (!config.scores_path.empty()) {
    ds.scores = read_scores_csv(config.scores_path, ids, config.invert_scores);
  } else if (!config.roi_path.empty()) {
    const RoiMask roi = read_roi(config.roi_path, ds.cohort.grid);
    ds.scores = percent_damage_score(ds.cohort, roi);
  } else {
    throw ValidationError("either --scores or --roi must be given to derive deficit scores");
  }
  ds.scores.validate(ds.cohort.n_subjects());

  if (!config.roi_path.empty()) ds.roi = read_roi(config.roi_path, ds.cohort.grid);
  return ds;
}

// Provenance ----------------------------------------------------------------

json provenance_block(const RunConfig& config, uint64_t null_hash) {
  json p;
  p["tool"] = "vlsmperm";
  p["version"] = kToolVersion;
  p["seed"] = config.seed;
  p["perms"] = config.n_perms;
  p["alpha"] = config.alpha;
  p["v_list"] = config.v_list;
  p["p_thresholds"] = config.p_thresholds;
  p["fdr_q"] = config.fdr_q;
  p["tails"] = tails_name(config.tails);
  p["connectivity"] = static_cast<int>(config.connectivity);
  p["correction"] = config.correction;
  p["workers"] = config.workers;
  if (null_hash != 0) p["null_hash"] = hex64(null_hash);
  return p;
}

namespace {

std::vector<std::string> provenance_lines(const json& p) {
  return {std::string("provenance: ") + p.dump()};
}

std::string descrip_line(const RunConfig& config, uint64_t null_hash) {
  std::string s = "vlsmperm seed=" + std::to_string(config.seed);
  if (null_hash != 0) s += " null=" + hex64(null_hash);
  if (s.size() > 79) s.resize(79);
  return s;
}

Volume3D stat_map_volume(const StatMap& map, const CohortMatrix& cohort) {
  Volume3D v = make_volume(cohort.grid, VoxelType::float32, 0.0f);
  for (size_t j = 0; j < cohort.mask_size(); ++j)
    v.values[static_cast<size_t>(cohort.mask_index[j])] =
        static_cast<float>(map.t_values[j]);
  return v;
}

Volume3D mask_volume(const CohortMatrix& cohort) {
  Volume3D v = make_volume(cohort.grid, VoxelType::binary, 0.0f);
  for (int64_t lin : cohort.mask_index) v.values[static_cast<size_t>(lin)] = 1.0f;
  return v;
}

Volume3D supra_volume(const CorrectionResult& result, const CohortMatrix& cohort) {
  Volume3D v = make_volume(cohort.grid, VoxelType::binary, 0.0f);
  for (uint32_t pos : result.supra)
    v.values[static_cast<size_t>(cohort.mask_index[pos])] = 1.0f;
  return v;
}

json comparison_rows_json(const std::vector<ComparisonRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json row;
    row["v"] = r.v;
    row["t_cfwer"] = r.t_cfwer;
    row["n_supra_cfwer"] = r.n_supra_cfwer;
    row["effective_q"] = r.eff_q ? json(*r.eff_q) : json();
    row["t_fdr"] = r.t_fdr ? json(*r.t_fdr) : json();
    row["n_supra_fdr"] = r.n_supra_fdr ? json(*r.n_supra_fdr) : json();
    arr.push_back(row);
  }
  return arr;
}

Table comparison_table(const std::vector<ComparisonRow>& rows) {
  Table t({"v", "t_cfwer", "n_supra_cfwer", "effective_q", "t_fdr", "n_supra_fdr"});
  for (const auto& r : rows) {
    t.row({std::to_string(r.v), fmt_double(r.t_cfwer), std::to_string(r.n_supra_cfwer),
           r.eff_q ? fmt_double(*r.eff_q) : Table::na(),
           r.t_fdr ? fmt_double(*r.t_fdr) : Table::na(),
           r.n_supra_fdr ? std::to_string(*r.n_supra_fdr) : Table::na()});
  }
  return t;
}

}  // namespace

// run / report ---------------------------------------------------------------

namespace {

int run_impl(const RunConfig& config, bool require_cache) {
  config.validate();
  if (config.out_dir.empty()) throw ValidationError("--out is required");
  ensure_dir(config.out_dir);
  const fs::path out(config.out_dir);

  Dataset ds = load_dataset(config);
  const auto& cohort = ds.cohort;

  CollectConfig collect;
  collect.top_k = static_cast<uint32_t>(std::min<uint64_t>(
      std::max<uint64_t>(1000, config.v_list.back()), cohort.mask_size()));
  collect.p_thresholds = config.p_thresholds;
  collect.tails = config.tails;
  collect.connectivity = config.connectivity;
  collect.degenerate = config.degenerate;
  collect.t_max = config.t_max;

  const uint64_t expected_hash =
      null_content_hash(cohort, ds.scores, collect, config.seed, config.n_perms);

  const std::string cache_path = config.null_cache_path.empty()
                                     ? (out / "null.cache").string()
                                     : config.null_cache_path;
  NullDistribution null;
  if (fs::exists(cache_path)) {
    null = load_null_cache(cache_path);
    if (null.content_hash != expected_hash)
      throw ValidationError(
          "null cache does not match this cohort/scores/configuration "
          "(content hash mismatch)",
          cache_path);
  } else if (require_cache) {
    throw ValidationError("report requires an existing null cache (--null-cache)", cache_path);
  } else {
    const auto plan = generate_permutations(cohort.n_subjects(), config.n_perms, config.seed);
    null = run_permutation_pass(cohort, ds.scores, plan, collect, config.workers);
    save_null_cache(null, cache_path);
  }

  const TMapOptions t_options{config.tails, config.degenerate, config.t_max};
  const StatMap observed = voxel_t_map(cohort, ds.scores, t_options);

  const json prov = provenance_block(config, null.content_hash);
  const auto prov_lines = provenance_lines(prov);

  json results;
  results["provenance"] = prov;
  results["n_subjects"] = cohort.n_subjects();
  results["mask_voxels"] = cohort.mask_size();
  results["df"] = observed.df;
  {
    const auto [min_l, min_i] =
        MaskRule{config.mask_min_lesioned, config.mask_min_intact}.resolve(cohort.n_subjects());
    results["mask_min_lesioned"] = min_l;
    results["mask_min_intact"] = min_i;
  }
  json corrections = json::array();

  const bool want_cluster_all = config.correction == "cluster-all" || config.correction == "all";
  const bool want_cluster_max = config.correction == "cluster-max" || config.correction == "all";
  const bool want_cfwer = config.correction == "cfwer" || config.correction == "all";
  const bool want_fdr = config.correction == "fdr" || config.correction == "all";

  const std::string descrip = descrip_line(config, null.content_hash);
  const auto emit_supra_volume = [&](const CorrectionResult& r, const std::string& stem) {
    Volume3D v = supra_volume(r, cohort);
    write_nifti(v, (out / (stem + ".nii.gz")).string(), VoxelType::binary, descrip);
  };

  for (ClusterVariant variant : {ClusterVariant::all, ClusterVariant::max}) {
    if (variant == ClusterVariant::all && !want_cluster_all) continue;
    if (variant == ClusterVariant::max && !want_cluster_max) continue;
    for (double p : config.p_thresholds) {
      const uint32_t size_thr = cluster_size_threshold(null, p, variant, config.alpha);
      CorrectionResult r =
          apply_cluster_correction(observed, cohort, p, size_thr, config.connectivity);
      r.method = "cluster-" + variant_name(variant);
      json jc;
      jc["method"] = r.method;
      jc["p_threshold"] = p;
      jc["alpha"] = config.alpha;
      jc["size_threshold"] = size_thr;
      jc["n_supra"] = r.n_supra;
      if (ds.roi) {
        const auto m = spillover_metrics(r, cohort, *ds.roi);
        jc["spillover"] = {{"n_in_roi", m.n_in_roi},
                           {"n_out_roi", m.n_out_roi},
                           {"extent_ratio", m.extent_ratio},
                           {"dice", m.dice}};
      }
      corrections.push_back(jc);
      emit_supra_volume(r, "supra_cluster-" + variant_name(variant) + "_p" + fmt_double(p));
    }
  }

  if (want_cfwer) {
    for (uint32_t v : config.v_list) {
      if (v > null.collect.top_k) continue;  // mask smaller than v
      const double t_crit = cfwer_threshold(null, v, config.alpha);
      CorrectionResult r = apply_t_threshold(observed, t_crit);
      r.method = "cfwer";
      if (r.n_supra > 0) r.effective_q = effective_q(v, r.n_supra);
      json jc;
      jc["method"] = "cfwer";
      jc["v"] = v;
      jc["alpha"] = config.alpha;
      jc["t_crit"] = t_crit;
      jc["n_supra"] = r.n_supra;
      jc["effective_q"] = r.effective_q ? json(*r.effective_q) : json();
      if (ds.roi) {
        const auto m = spillover_metrics(r, cohort, *ds.roi);
        jc["spillover"] = {{"n_in_roi", m.n_in_roi},
                           {"n_out_roi", m.n_out_roi},
                           {"extent_ratio", m.extent_ratio},
                           {"dice", m.dice}};
      }
      corrections.push_back(jc);
      emit_supra_volume(r, "supra_cfwer_v" + std::to_string(v));
    }
  }

  if (want_fdr) {
    const PValueMap p_map = p_value_map(observed);
    const FdrResult fdr = fdr_threshold(p_map, config.fdr_q);
    json jc;
    jc["method"] = "fdr";
    jc["q"] = config.fdr_q;
    if (fdr.any_rejection) {
      jc["p_crit"] = fdr.p_crit;
      jc["t_crit"] = fdr.t_crit;
      jc["n_supra"] = fdr.n_supra;
      CorrectionResult r;
      r.method = "fdr";
      r.supra = fdr.supra;
      r.n_supra = fdr.n_supra;
      if (ds.roi) {
        const auto m = spillover_metrics(r, cohort, *ds.roi);
        jc["spillover"] = {{"n_in_roi", m.n_in_roi},
                           {"n_out_roi", m.n_out_roi},
                           {"extent_ratio", m.extent_ratio},
                           {"dice", m.dice}};
      }
      emit_supra_volume(r, "supra_fdr");
    } else {
      jc["p_crit"] = json();
      jc["t_crit"] = json();
      jc["n_supra"] = 0;
    }
    corrections.push_back(jc);
  }

  results["corrections"] = corrections;

  if (want_cfwer) {
    CorrectionConfig cc;
    cc.alpha = config.alpha;
    cc.p_thresholds = config.p_thresholds;
    cc.fdr_q = config.fdr_q;
    cc.v_list.clear();
    for (uint32_t v : config.v_list)
      if (v <= null.collect.top_k) cc.v_list.push_back(v);
    if (!cc.v_list.empty()) {
      const auto rows = compare_cfwer_fdr(observed, null, cc);
      results["comparison"] = comparison_rows_json(rows);
      comparison_table(rows).write_csv((out / "comparison.csv").string(), prov_lines);
    }
  }

  write_nifti(stat_map_volume(observed, cohort), (out / "tmap.nii.gz").string(),
              VoxelType::float32, descrip);
  write_nifti(mask_volume(cohort), (out / "mask.nii.gz").string(), VoxelType::binary, descrip);

  write_text_file((out / "results.json").string(), results.dump(2) + "\n");
  write_text_file((out / "config.json").string(), config_to_json(config).dump(2) + "\n");
  return 0;
}

}  // namespace

int cmd_run(const RunConfig& config) { return run_impl(config, false); }
int cmd_report(const RunConfig& config) { return run_impl(config, true); }

// simulate --------------------------------------------------------------------

int cmd_simulate(const RunConfig& config) {
  config.validate();
  if (config.out_dir.empty()) throw ValidationError("--out is required");
  ensure_dir(config.out_dir);
  const fs::path out(config.out_dir);
  ensure_dir((out / "lesions").string());

  SyntheticSpec spec = spec_from_params(config.sim, 60, 0.0, config.seed);
  spec.validate();

  const auto lesions = generate_synthetic_lesions(spec);

  json manifest = json::array();
  std::vector<std::string> ids;
  for (size_t s = 0; s < lesions.size(); ++s) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sub-%03zu", s);
    ids.emplace_back(buf);
    const std::string rel = std::string("lesions/") + buf + ".nii.gz";
    write_nifti(lesions[s], (out / rel).string(), VoxelType::binary);
    manifest.push_back({{"subject_id", ids.back()}, {"lesion_path", rel}});
  }
  write_text_file((out / "manifest.json").string(), manifest.dump(2) + "\n");

  Volume3D roi_vol = make_volume(spec.grid, VoxelType::binary, 0.0f);
  for (int64_t lin : spec.roi.voxels) roi_vol.values[static_cast<size_t>(lin)] = 1.0f;
  write_nifti(roi_vol, (out / "roi.nii.gz").string(), VoxelType::binary);

  // scores flow through the same ingestion path as real data
  CohortMatrix premask = build_cohort(lesions, ids);
  ScoreVector scores = percent_damage_score(premask, spec.roi);
  if (spec.noise_sd > 0)
    scores = add_noise(scores, spec.noise_sd, derive_seed(spec.seed, "noise"));
  std::ostringstream csv;
  csv << "subject_id,score\n";
  for (size_t s = 0; s < ids.size(); ++s)
    csv << ids[s] << "," << fmt_double(scores.values[s], 17) << "\n";
  write_text_file((out / "scores.csv").string(), csv.str());

  json truth;
  truth["provenance"] = provenance_block(config, 0);
  truth["spec"] = {{"grid", config.sim.grid},
                   {"voxel_size", config.sim.voxel_size},
                   {"subjects", spec.n_subjects},
                   {"lesion_mu", spec.lesion_mu_log},
                   {"lesion_sigma", spec.lesion_sigma_log},
                   {"center", spec.territory_center},
                   {"decay", spec.territory_decay},
                   {"roi_voxels", spec.roi.voxels.size()},
                   {"noise_sd", spec.noise_sd},
                   {"seed", spec.seed}};
  write_text_file((out / "truth.json").string(), truth.dump(2) + "\n");
  return 0;
}

// evaluate ---------------------------------------------------------------------

namespace {

void write_cluster_fpr_outputs(const ClusterFprReport& report, const fs::path& out,
                               const std::vector<std::string>& prov_lines) {
  Table t({"p_threshold", "variant", "size_threshold", "fpr_in_sample", "fpr_holdout"});
  for (const auto& r : report.rows)
    t.row({fmt_double(r.p_threshold), variant_name(r.variant),
           std::to_string(r.size_threshold), fmt_double(r.fpr_in_sample),
           fmt_double(r.fpr_holdout)});
  t.write_csv((out / "cluster_fpr.csv").string(), prov_lines);

  SvgPlot plot("Cluster size thresholds by voxel p-threshold", "voxel p-threshold",
               "cluster size threshold", true, true);
  std::vector<double> px_all, py_all, px_max, py_max;
  for (const auto& r : report.rows) {
    if (r.variant == ClusterVariant::all) {
      px_all.push_back(r.p_threshold);
      py_all.push_back(std::max<uint32_t>(r.size_threshold, 1));
    } else {
      px_max.push_back(r.p_threshold);
      py_max.push_back(std::max<uint32_t>(r.size_threshold, 1));
    }
  }
  plot.add_series("all clusters", px_all, py_all, "#d62728", true, true);
  plot.add_series("max cluster", px_max, py_max, "#1f77b4", true, true);
  plot.write((out / "cluster_thresholds.svg").string());

  SvgPlot fpr_plot("Held-out false positive rate", "voxel p-threshold",
                   "false positive rate", true, false);
  std::vector<double> fx_all, fy_all, fx_max, fy_max;
  for (const auto& r : report.rows) {
    if (r.variant == ClusterVariant::all) {
      fx_all.push_back(r.p_threshold);
      fy_all.push_back(r.fpr_holdout);
    } else {
      fx_max.push_back(r.p_threshold);
      fy_max.push_back(r.fpr_holdout);
    }
  }
  fpr_plot.add_series("all clusters", fx_all, fy_all, "#d62728", true, true);
  fpr_plot.add_series("max cluster", fx_max, fy_max, "#1f77b4", true, true);
  fpr_plot.write((out / "cluster_fpr.svg").string());
}

void write_spillover_outputs(const SpilloverReport& report, const fs::path& out,
                             const std::vector<std::string>& prov_lines) {
  Table t({"method", "critical_value", "n_supra", "n_in_roi", "n_out_roi", "extent_ratio",
           "dice"});
  for (const auto& r : report.rows)
    t.row({r.method, fmt_double(r.critical_value), std::to_string(r.metrics.n_supra),
           std::to_string(r.metrics.n_in_roi), std::to_string(r.metrics.n_out_roi),
           fmt_double(r.metrics.extent_ratio), fmt_double(r.metrics.dice)});
  t.write_csv((out / "spillover.csv").string(), prov_lines);
}

void write_method_comparison_outputs(const MethodComparisonReport& report, const fs::path& out,
                                     const std::vector<std::string>& prov_lines) {
  Table t({"fraction", "repeat", "n_subjects", "mask_voxels", "v", "t_cfwer",
           "n_supra_cfwer", "effective_q", "t_fdr", "n_supra_fdr"});
  for (const auto& c : report.cells) {
    const auto& r = c.row;
    t.row({fmt_double(c.fraction), std::to_string(c.repeat), std::to_string(c.n_subjects),
           std::to_string(c.mask_voxels), std::to_string(r.v), fmt_double(r.t_cfwer),
           std::to_string(r.n_supra_cfwer), r.eff_q ? fmt_double(*r.eff_q) : Table::na(),
           r.t_fdr ? fmt_double(*r.t_fdr) : Table::na(),
           r.n_supra_fdr ? std::to_string(*r.n_supra_fdr) : Table::na()});
  }
  t.write_csv((out / "method_comparison.csv").string(), prov_lines);

  Table s({"fraction", "n_cells_valid", "n_fdr_less", "fraction_fdr_less"});
  for (const auto& row : report.summaries)
    s.row({fmt_double(row.fraction), std::to_string(row.n_cells_valid),
           std::to_string(row.n_fdr_less),
           row.n_cells_valid > 0
               ? fmt_double(static_cast<double>(row.n_fdr_less) /
                            static_cast<double>(row.n_cells_valid))
               : Table::na()});
  s.write_csv((out / "method_comparison_summary.csv").string(), prov_lines);

  // t-vs-t scatter per fraction with the identity line
  std::vector<double> fractions;
  for (const auto& c : report.cells)
    if (std::find(fractions.begin(), fractions.end(), c.fraction) == fractions.end())
      fractions.push_back(c.fraction);
  for (double f : fractions) {
    SvgPlot plot("CFWER vs FDR critical t (fraction " + fmt_double(f) + ")",
                 "t threshold (CFWER)", "t threshold (FDR at effective q)", false, false);
    std::vector<double> xs, ys;
    for (const auto& c : report.cells) {
      if (c.fraction != f || !c.row.t_fdr) continue;
      xs.push_back(c.row.t_cfwer);
      ys.push_back(*c.row.t_fdr);
    }
    plot.add_identity_line();
    plot.add_series("sub-samples", xs, ys, "#2ca02c", false, true);
    std::string name = "comparison_scatter_f" + fmt_double(f) + ".svg";
    std::replace(name.begin(), name.end(), '.', '_');
    name.resize(name.size() - 4);
    plot.write((out / (name + ".svg")).string());
  }
}

}  // namespace

int cmd_evaluate(const RunConfig& config) {
  config.validate();
  if (config.out_dir.empty()) throw ValidationError("--out is required");
  ensure_dir(config.out_dir);
  const fs::path out(config.out_dir);

  const json prov = provenance_block(config, 0);
  const auto prov_lines = provenance_lines(prov);
  const bool run_fpr = config.eval.experiment == "cluster-fpr" || config.eval.experiment == "all";
  const bool run_spill = config.eval.experiment == "spillover" || config.eval.experiment == "all";
  const bool run_cmp =
      config.eval.experiment == "method-comparison" || config.eval.experiment == "all";

  json manifest;
  manifest["provenance"] = prov;
  manifest["experiments"] = json::array();

  const auto spec_for = [&](uint32_t default_subjects, double default_noise) {
    return spec_from_params(config.sim, default_subjects, default_noise, config.seed);
  };

  if (run_fpr) {
    ClusterFprConfig fpr;
    fpr.spec = spec_for(60, 0.0);
    fpr.n_perms_defining = config.eval.perms_defining;
    fpr.n_perms_holdout = config.eval.perms_holdout;
    fpr.p_thresholds = config.p_thresholds;
    fpr.alpha = config.alpha;
    fpr.tails = config.tails;
    fpr.connectivity = config.connectivity;
    fpr.workers = config.workers;
    const auto report = run_cluster_fpr_experiment(fpr);
    write_cluster_fpr_outputs(report, out, prov_lines);
    manifest["experiments"].push_back(
        {{"name", "cluster-fpr"},
         {"n_subjects", report.n_subjects},
         {"mask_voxels", report.mask_voxels},
         {"perms_defining", config.eval.perms_defining},
         {"perms_holdout", config.eval.perms_holdout},
         {"defining_null_hash", hex64(report.defining.content_hash)},
         {"holdout_null_hash", hex64(report.holdout.content_hash)}});
  }

  if (run_spill) {
    SpilloverConfig sp;
    sp.spec = spec_for(120, 0.0);
    sp.n_perms = config.n_perms;
    sp.cluster_p = config.p_thresholds.back();
    sp.alpha = config.alpha;
    sp.v_list = config.v_list;
    sp.tails = config.tails;
    sp.connectivity = config.connectivity;
    sp.workers = config.workers;
    const auto report = run_spillover_experiment(sp);
    write_spillover_outputs(report, out, prov_lines);
    manifest["experiments"].push_back({{"name", "spillover"},
                                       {"n_subjects", report.n_subjects},
                                       {"mask_voxels", report.mask_voxels},
                                       {"cluster_p", sp.cluster_p},
                                       {"null_hash", hex64(report.null_hash)}});
  }

  if (run_cmp) {
    MethodComparisonConfig mc;
    mc.spec = spec_for(120, kDeskNoiseSd);
    mc.fractions = config.eval.fractions;
    mc.n_repeats = config.eval.repeats;
    mc.n_perms = config.n_perms;
    mc.alpha = config.alpha;
    mc.v_list = config.v_list;
    mc.p_thresholds = config.p_thresholds;
    mc.tails = config.tails;
    mc.connectivity = config.connectivity;
    mc.workers = config.workers;
    const auto report = run_method_comparison(mc);
    write_method_comparison_outputs(report, out, prov_lines);
    manifest["experiments"].push_back({{"name", "method-comparison"},
                                       {"n_subjects", mc.spec.n_subjects},
                                       {"fractions", mc.fractions},
                                       {"repeats", mc.n_repeats},
                                       {"perms", mc.n_perms},
                                       {"noise_sd", mc.spec.noise_sd}});
  }

  write_text_file((out / "manifest.json").string(), manifest.dump(2) + "\n");
  write_text_file((out / "config.json").string(), config_to_json(config).dump(2) + "\n");
  return 0;
}

}  // namespace vlsm

// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlsm/simeval.hpp"

namespace vlsm {

// Knobs for synthetic data generation (simulate + evaluate). Geometry
// defaults are grid-relative: territory center at the grid center, decay
// nx/4, ROI sphere of radius nx/8 offset +5*nx/32 along x.
struct SimulateParams {
  std::array<int32_t, 3> grid{32, 32, 32};
  std::array<float, 3> voxel_size{1.0f, 1.0f, 1.0f};
  std::optional<uint32_t> subjects;           // default depends on command
  double lesion_mu = 5.3;                     // log-voxels
  double lesion_sigma = 0.45;
  std::optional<std::array<double, 3>> center;
  std::optional<double> decay;
  std::optional<std::array<double, 3>> roi_center;
  std::optional<double> roi_radius;
  std::optional<double> noise_sd;             // default depends on experiment
};

// Resolves SimulateParams into a concrete SyntheticSpec.
SyntheticSpec spec_from_params(const SimulateParams& sim, uint32_t default_subjects,
                               double default_noise, uint64_t seed);

struct EvaluateParams {
  std::string experiment = "all";  // cluster-fpr | spillover | method-comparison | all
  std::vector<double> fractions{1.0, 0.5, 0.25};
  uint32_t repeats = 5;
  uint32_t perms_defining = 500;
  uint32_t perms_holdout = 500;
};

struct RunConfig {
  std::string subcommand;  // run | simulate | evaluate | report

  std::string manifest_path;
  std::string scores_path;
  std::string roi_path;
  std::string null_cache_path;
  std::string out_dir;

  bool invert_scores = false;
  Tails tails = Tails::one_sided;
  Connectivity connectivity = Connectivity::twentysix;
  std::optional<uint32_t> mask_min_lesioned;
  std::optional<uint32_t> mask_min_intact;
  double alpha = 0.05;
  std::vector<uint32_t> v_list{1, 10, 100, 1000};
  std::vector<double> p_thresholds = default_p_thresholds();
  double fdr_q = 0.05;
  uint32_t n_perms = 1000;
  uint64_t seed = 42;
  unsigned workers = 0;  // 0 = all cores
  std::string correction = "all";  // cluster-all | cluster-max | cfwer | fdr | all
  DegeneratePolicy degenerate = DegeneratePolicy::error;
  double t_max = 1e6;

  SimulateParams sim;
  EvaluateParams eval;

  void validate() const;
};

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

// Tuned desk-scale synthetic cohort shared by evaluate defaults and the
// acceptance experiments: 32^3 grid, central territory gradient, spherical
// ground-truth ROI inside the territory.
SyntheticSpec desk_scale_spec(uint32_t n_subjects, uint64_t seed, double noise_sd);

// Noise level at which the strongest voxel t of the desk-scale percent-damage
// score roughly halves (see docs in README).
inline constexpr double kDeskNoiseSd = 0.16;

// Ingestion ---------------------------------------------------------------

struct Dataset {
  CohortMatrix cohort;   // masked
  ScoreVector scores;
  std::optional<RoiMask> roi;
};

// Manifest: JSON array of {subject_id, lesion_path}; order defines row order.
Dataset load_dataset(const RunConfig& config);
ScoreVector read_scores_csv(const std::string& path,
                            const std::vector<std::string>& subject_ids, bool invert);
RoiMask read_roi(const std::string& path, const GridShape& grid);

// Commands ----------------------------------------------------------------

int cmd_run(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_report(const RunConfig& config);

// Provenance block embedded in every output (CSV '#' lines, JSON object).
nlohmann::json provenance_block(const RunConfig& config, uint64_t null_hash);

}  // namespace vlsm

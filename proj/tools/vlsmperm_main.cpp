// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
//
// vlsmperm — permutation-corrected voxel-based lesion-symptom mapping.
// Subcommands: simulate, run, evaluate, report. Exit codes: 0 success,
// 2 usage/validation, 3 runtime failure. Failures print a one-line error
// JSON to stderr.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vlsm/error.hpp"
#include "vlsm/pipeline.hpp"

using nlohmann::json;

namespace {

struct FlagSet {
  std::string manifest, scores, roi, null_cache, out, config_path;
  bool invert_scores = false;
  std::string tails = "one";
  int connectivity = 26;
  uint32_t mask_min_lesioned = 0, mask_min_intact = 0;
  double alpha = 0.05;
  std::vector<uint32_t> v_list;
  std::vector<double> p_thresholds;
  double q = 0.05;
  uint32_t perms = 1000;
  uint64_t seed = 42;
  unsigned workers = 0;
  std::string correction = "all";
  std::string degenerate = "error";
  double t_max = 1e6;

  std::vector<int32_t> grid;
  std::vector<double> voxel_size;
  uint32_t subjects = 0;
  double lesion_mu = 5.3, lesion_sigma = 0.45;
  std::vector<double> center;
  double decay = 8.0;
  std::vector<double> roi_center;
  double roi_radius = 4.0;
  double noise_sd = 0.0;

  std::string experiment = "all";
  std::vector<double> fractions;
  uint32_t repeats = 5;
  uint32_t perms_defining = 500, perms_holdout = 500;

  bool dump_config = false;

  std::map<std::string, CLI::Option*> handles;
};

void add_common_options(CLI::App* cmd, FlagSet& f) {
  auto& h = f.handles;
  h["config"] = cmd->add_option("--config", f.config_path, "JSON config file (flags win)");
  h["dump-config"] = cmd->add_flag("--dump-config", f.dump_config,
                                   "print the effective config JSON and exit");
  h["out"] = cmd->add_option("--out", f.out, "output directory");
  h["seed"] = cmd->add_option("--seed", f.seed, "RNG seed");
  h["workers"] = cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  h["perms"] = cmd->add_option("--perms", f.perms, "number of permutations");
  h["alpha"] = cmd->add_option("--alpha", f.alpha, "family-wise alpha");
  h["v"] = cmd->add_option("--v", f.v_list, "critical voxel ranks v")->delimiter(',');
  h["p-thresholds"] =
      cmd->add_option("--p-thresholds", f.p_thresholds, "voxel p-thresholds")->delimiter(',');
  h["tails"] = cmd->add_option("--tails", f.tails, "one | two");
  h["connectivity"] = cmd->add_option("--connectivity", f.connectivity, "6 | 18 | 26");
  h["q"] = cmd->add_option("--q", f.q, "FDR q");
  h["correction"] = cmd->add_option("--correction", f.correction,
                                    "cluster-all | cluster-max | cfwer | fdr | all");
  h["mask-min-lesioned"] = cmd->add_option("--mask-min-lesioned", f.mask_min_lesioned,
                                           "min lesioned subjects per voxel");
  h["mask-min-intact"] =
      cmd->add_option("--mask-min-intact", f.mask_min_intact, "min intact subjects per voxel");
  h["degenerate"] = cmd->add_option("--degenerate", f.degenerate,
                                    "zero-variance voxel policy: error | clamp");
  h["t-max"] = cmd->add_option("--t-max", f.t_max, "clamp magnitude for degenerate voxels");
}

void add_data_options(CLI::App* cmd, FlagSet& f) {
  auto& h = f.handles;
  h["manifest"] = cmd->add_option("--manifest", f.manifest, "cohort manifest JSON");
  h["scores"] = cmd->add_option("--scores", f.scores, "scores CSV (subject_id,score)");
  h["roi"] = cmd->add_option("--roi", f.roi, "ROI (binary NIfTI or JSON index list)");
  h["null-cache"] = cmd->add_option("--null-cache", f.null_cache, "null cache file");
  h["invert-scores"] =
      cmd->add_flag("--invert-scores", f.invert_scores, "negate scores at ingestion");
}

void add_sim_options(CLI::App* cmd, FlagSet& f) {
  auto& h = f.handles;
  h["grid"] = cmd->add_option("--grid", f.grid, "grid dims nx,ny,nz")
                  ->delimiter(',')->expected(3);
  h["voxel-size"] = cmd->add_option("--voxel-size", f.voxel_size, "voxel size mm dx,dy,dz")
                        ->delimiter(',')->expected(3);
  h["subjects"] = cmd->add_option("--subjects", f.subjects, "synthetic cohort size");
  h["lesion-mu"] = cmd->add_option("--lesion-mu", f.lesion_mu,
                                   "log-normal mu of lesion size (log voxels)");
  h["lesion-sigma"] =
      cmd->add_option("--lesion-sigma", f.lesion_sigma, "log-normal sigma of lesion size");
  h["center"] = cmd->add_option("--center", f.center, "territory center i,j,k")
                    ->delimiter(',')->expected(3);
  h["decay"] = cmd->add_option("--decay", f.decay, "territory decay length (voxels)");
  h["roi-center"] = cmd->add_option("--roi-center", f.roi_center, "ROI sphere center i,j,k")
                        ->delimiter(',')->expected(3);
  h["roi-radius"] = cmd->add_option("--roi-radius", f.roi_radius, "ROI sphere radius (voxels)");
  h["noise-sd"] = cmd->add_option("--noise-sd", f.noise_sd, "Gaussian noise sd on scores");
}

void add_eval_options(CLI::App* cmd, FlagSet& f) {
  auto& h = f.handles;
  h["experiment"] = cmd->add_option("--experiment", f.experiment,
                                    "cluster-fpr | spillover | method-comparison | all");
  h["fractions"] =
      cmd->add_option("--fractions", f.fractions, "sub-sample fractions")->delimiter(',');
  h["repeats"] = cmd->add_option("--repeats", f.repeats, "sub-sample repeats per fraction");
  h["perms-defining"] =
      cmd->add_option("--perms-defining", f.perms_defining, "defining permutations");
  h["perms-holdout"] =
      cmd->add_option("--perms-holdout", f.perms_holdout, "held-out permutations");
}

bool given(const FlagSet& f, const std::string& name) {
  const auto it = f.handles.find(name);
  return it != f.handles.end() && it->second->count() > 0;
}

vlsm::RunConfig merge_config(const FlagSet& f, const std::string& subcommand) {
  vlsm::RunConfig c;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw vlsm::ValidationError("cannot open config file", f.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw vlsm::ValidationError(std::string("invalid config JSON: ") + e.what(),
                                  f.config_path);
    }
    c = vlsm::config_from_json(j);
  }
  c.subcommand = subcommand;

  if (given(f, "manifest")) c.manifest_path = f.manifest;
  if (given(f, "scores")) c.scores_path = f.scores;
  if (given(f, "roi")) c.roi_path = f.roi;
  if (given(f, "null-cache")) c.null_cache_path = f.null_cache;
  if (given(f, "out")) c.out_dir = f.out;
  if (given(f, "invert-scores")) c.invert_scores = f.invert_scores;
  if (given(f, "tails"))
    c.tails = f.tails == "two" ? vlsm::Tails::two_sided : vlsm::Tails::one_sided;
  if (given(f, "tails") && f.tails != "one" && f.tails != "two")
    throw vlsm::ValidationError("tails must be 'one' or 'two'");
  if (given(f, "connectivity")) {
    if (f.connectivity != 6 && f.connectivity != 18 && f.connectivity != 26)
      throw vlsm::ValidationError("connectivity must be 6, 18, or 26");
    c.connectivity = static_cast<vlsm::Connectivity>(f.connectivity);
  }
  if (given(f, "mask-min-lesioned")) c.mask_min_lesioned = f.mask_min_lesioned;
  if (given(f, "mask-min-intact")) c.mask_min_intact = f.mask_min_intact;
  if (given(f, "alpha")) c.alpha = f.alpha;
  if (given(f, "v")) c.v_list = f.v_list;
  if (given(f, "p-thresholds")) c.p_thresholds = f.p_thresholds;
  if (given(f, "q")) c.fdr_q = f.q;
  if (given(f, "perms")) c.n_perms = f.perms;
  if (given(f, "seed")) c.seed = f.seed;
  if (given(f, "workers")) c.workers = f.workers;
  if (given(f, "correction")) c.correction = f.correction;
  if (given(f, "degenerate")) {
    if (f.degenerate != "error" && f.degenerate != "clamp")
      throw vlsm::ValidationError("degenerate policy must be 'error' or 'clamp'");
    c.degenerate = f.degenerate == "clamp" ? vlsm::DegeneratePolicy::clamp
                                           : vlsm::DegeneratePolicy::error;
  }
  if (given(f, "t-max")) c.t_max = f.t_max;

  if (given(f, "grid")) c.sim.grid = {f.grid[0], f.grid[1], f.grid[2]};
  if (given(f, "voxel-size"))
    c.sim.voxel_size = {static_cast<float>(f.voxel_size[0]), static_cast<float>(f.voxel_size[1]),
                        static_cast<float>(f.voxel_size[2])};
  if (given(f, "subjects")) c.sim.subjects = f.subjects;
  if (given(f, "lesion-mu")) c.sim.lesion_mu = f.lesion_mu;
  if (given(f, "lesion-sigma")) c.sim.lesion_sigma = f.lesion_sigma;
  if (given(f, "center"))
    c.sim.center = std::array<double, 3>{f.center[0], f.center[1], f.center[2]};
  if (given(f, "decay")) c.sim.decay = f.decay;
  if (given(f, "roi-center"))
    c.sim.roi_center =
        std::array<double, 3>{f.roi_center[0], f.roi_center[1], f.roi_center[2]};
  if (given(f, "roi-radius")) c.sim.roi_radius = f.roi_radius;
  if (given(f, "noise-sd")) c.sim.noise_sd = f.noise_sd;

  if (given(f, "experiment")) c.eval.experiment = f.experiment;
  if (given(f, "fractions")) c.eval.fractions = f.fractions;
  if (given(f, "repeats")) c.eval.repeats = f.repeats;
  if (given(f, "perms-defining")) c.eval.perms_defining = f.perms_defining;
  if (given(f, "perms-holdout")) c.eval.perms_holdout = f.perms_holdout;
  return c;
}

int emit_error(vlsm::ErrorKind kind, const std::string& message, const std::string& file) {
  json e;
  e["error"] = {{"kind", kind == vlsm::ErrorKind::validation ? "validation" : "runtime"},
                {"message", message}};
  if (!file.empty()) e["error"]["file"] = file;
  std::cerr << e.dump() << std::endl;
  return kind == vlsm::ErrorKind::validation ? 2 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permutation-corrected voxel-based lesion-symptom mapping"};
  app.require_subcommand(1);

  FlagSet flags_sim, flags_run, flags_eval, flags_rep;
  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic cohort on disk");
  add_common_options(sim, flags_sim);
  add_sim_options(sim, flags_sim);

  CLI::App* run = app.add_subcommand("run", "run VLSM with permutation corrections");
  add_common_options(run, flags_run);
  add_data_options(run, flags_run);

  CLI::App* eval = app.add_subcommand("evaluate", "run the synthetic evaluation experiments");
  add_common_options(eval, flags_eval);
  add_sim_options(eval, flags_eval);
  add_eval_options(eval, flags_eval);

  CLI::App* rep = app.add_subcommand("report", "recompute corrections from a null cache");
  add_common_options(rep, flags_rep);
  add_data_options(rep, flags_rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error(vlsm::ErrorKind::validation, e.what(), "");
  }

  try {
    std::string sub;
    const FlagSet* flags_ptr = &flags_run;
    if (sim->parsed()) { sub = "simulate"; flags_ptr = &flags_sim; }
    if (run->parsed()) { sub = "run"; flags_ptr = &flags_run; }
    if (eval->parsed()) { sub = "evaluate"; flags_ptr = &flags_eval; }
    if (rep->parsed()) { sub = "report"; flags_ptr = &flags_rep; }
    const FlagSet& flags = *flags_ptr;

    const vlsm::RunConfig config = merge_config(flags, sub);
    if (flags.dump_config) {
      std::cout << vlsm::config_to_json(config).dump(2) << std::endl;
      return 0;
    }
    config.validate();
    if (sub == "simulate") return vlsm::cmd_simulate(config);
    if (sub == "run") return vlsm::cmd_run(config);
    if (sub == "evaluate") return vlsm::cmd_evaluate(config);
    if (sub == "report") return vlsm::cmd_report(config);
    return emit_error(vlsm::ErrorKind::validation, "no subcommand given", "");
  } catch (const vlsm::Error& e) {
    return emit_error(e.kind(), e.what(), e.file());
  } catch (const std::exception& e) {
    return emit_error(vlsm::ErrorKind::runtime, e.what(), "");
  }
}

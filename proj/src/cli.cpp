/* Copyright (c) 2026 catfuse authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "catfuse/errors.hpp"
#include "catfuse/harness.hpp"

namespace catfuse {

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"fuses two categorical surveys with disjoint respondents, optionally "
               "anchored by auxiliary data that observes both unique blocks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::uint64_t g_seed = 0;
  std::string g_missing = "NA";
  int g_threads = 0;
  CLI::Option* seed_opt = app.add_option("--seed", g_seed, "root RNG seed");
  CLI::Option* missing_opt =
      app.add_option("--missing-token", g_missing, "token marking missing cells in CSV files");
  CLI::Option* threads_opt = app.add_option(
      "--threads", g_threads, "worker threads: 0 auto, 1 serial, >1 parallel with that many");

  CLI::App* fuse = app.add_subcommand("fuse", "run the model and write completed datasets");
  std::string f_config, f_schema, f_d1, f_d2, f_glue, f_glue_mode, f_direction, f_out;
  std::vector<std::string> f_glue_vars;
  std::size_t f_glue_size = 0, f_burn = 0, f_iter = 0, f_thin = 0, f_m = 0;
  int f_classes = 0;
  double f_threshold = 0.0;
  bool f_keep_draws = false, f_impute_glue = false;
  CLI::Option* f_config_opt = fuse->add_option("--config", f_config, "run configuration JSON");
  CLI::Option* f_schema_opt = fuse->add_option("--schema", f_schema, "schema JSON");
  CLI::Option* f_d1_opt = fuse->add_option("--d1", f_d1, "first survey CSV");
  CLI::Option* f_d2_opt = fuse->add_option("--d2", f_d2, "second survey CSV");
  CLI::Option* f_out_opt = fuse->add_option("--out", f_out, "output directory");
  CLI::Option* f_glue_opt = fuse->add_option("--glue", f_glue, "auxiliary data CSV");
  CLI::Option* f_glue_mode_opt = fuse->add_option(
      "--glue-mode", f_glue_mode, "APPEND_RAW, DUPLICATE, or CONSTRUCT_FROM_CONDITIONAL");
  CLI::Option* f_glue_vars_opt =
      fuse->add_option("--glue-vars", f_glue_vars, "variables the auxiliary rows keep")
          ->delimiter(',');
  CLI::Option* f_glue_size_opt =
      fuse->add_option("--glue-size", f_glue_size, "auxiliary rows to keep or construct");
  CLI::Option* f_direction_opt = fuse->add_option(
      "--direction", f_direction, "B_given_ABprime or Bprime_given_AB (construct mode)");
  CLI::Option* f_classes_opt = fuse->add_option("--classes", f_classes, "latent classes");
  CLI::Option* f_burn_opt = fuse->add_option("--burn-in", f_burn, "burn-in sweeps");
  CLI::Option* f_iter_opt = fuse->add_option("--iterations", f_iter, "total planned sweeps");
  CLI::Option* f_thin_opt = fuse->add_option("--thin", f_thin, "sweeps between imputations");
  CLI::Option* f_m_opt = fuse->add_option("-m,--imputations", f_m, "completed datasets to emit");
  fuse->add_flag("--keep-draws", f_keep_draws, "store parameter draws at emission sweeps");
  fuse->add_flag("--impute-glue", f_impute_glue, "also complete auxiliary rows");
  CLI::Option* f_threshold_opt =
      fuse->add_option("--diag-threshold", f_threshold, "representativeness PASS threshold");

  CLI::App* simulate =
      app.add_subcommand("simulate", "synthetic-data studies against a known generator");
  std::string s_spec, s_out, s_study = "richness";
  std::vector<std::uint64_t> s_seeds;
  std::vector<std::size_t> s_ladder;
  std::size_t s_burn = 0, s_iter = 0, s_thin = 0, s_m = 0;
  int s_classes = 0;
  CLI::Option* s_spec_opt =
      simulate->add_option("--spec", s_spec, "generator JSON (default: built-in)");
  simulate->add_option("--out", s_out, "output directory")->required();
  simulate->add_option("--study", s_study, "richness, size, bias, or all")
      ->check(CLI::IsMember({"richness", "size", "bias", "all"}));
  CLI::Option* s_seeds_opt =
      simulate->add_option("--seeds", s_seeds, "population seeds")->delimiter(',');
  CLI::Option* s_ladder_opt =
      simulate->add_option("--size-ladder", s_ladder, "auxiliary sizes for the size study")
          ->delimiter(',');
  CLI::Option* s_classes_opt = simulate->add_option("--classes", s_classes, "latent classes");
  CLI::Option* s_burn_opt = simulate->add_option("--burn-in", s_burn, "burn-in sweeps");
  CLI::Option* s_iter_opt = simulate->add_option("--iterations", s_iter, "total planned sweeps");
  CLI::Option* s_thin_opt = simulate->add_option("--thin", s_thin, "sweeps between imputations");
  CLI::Option* s_m_opt =
      simulate->add_option("-m,--imputations", s_m, "completed datasets per chain");

  CLI::App* diagnose =
      app.add_subcommand("diagnose", "representativeness checks for auxiliary data");
  std::string dg_schema, dg_glue, dg_reference, dg_d1, dg_d2, dg_out;
  std::vector<std::string> dg_vars;
  double dg_threshold = 0.0;
  std::size_t dg_burn = 0, dg_iter = 0;
  int dg_classes = 0;
  diagnose->add_option("--schema", dg_schema, "schema JSON")->required();
  diagnose->add_option("--glue", dg_glue, "auxiliary data CSV")->required();
  diagnose->add_option("--reference", dg_reference, "reference CSV for a direct comparison");
  diagnose->add_option("--vars", dg_vars, "variables to compare (direct mode)")->delimiter(',');
  diagnose->add_option("--d1", dg_d1, "first survey CSV (two-direction mode)");
  diagnose->add_option("--d2", dg_d2, "second survey CSV (two-direction mode)");
  CLI::Option* dg_threshold_opt =
      diagnose->add_option("--threshold", dg_threshold, "PASS threshold on |diff|");
  CLI::Option* dg_out_opt = diagnose->add_option("--out", dg_out, "optional report directory");
  CLI::Option* dg_classes_opt = diagnose->add_option("--classes", dg_classes, "latent classes");
  CLI::Option* dg_burn_opt = diagnose->add_option("--burn-in", dg_burn, "burn-in sweeps");
  CLI::Option* dg_iter_opt =
      diagnose->add_option("--iterations", dg_iter, "fit sweeps for construction");

  CLI::App* metrics =
      app.add_subcommand("metrics", "recompute metrics from saved completed datasets");
  std::string mt_schema, mt_truth, mt_d1, mt_d2, mt_b, mt_bp, mt_out;
  std::vector<std::string> mt_completed, mt_vars;
  bool mt_unconditional = false;
  metrics->add_option("--schema", mt_schema, "schema JSON")->required();
  metrics
      ->add_option("--completed", mt_completed,
                   "completed dataset, repeatable; comma-join a d1/d2 pair")
      ->required();
  metrics->add_option("--vars", mt_vars, "joint-table variables")->delimiter(',')->required();
  metrics->add_option("--truth", mt_truth, "complete dataset to score against");
  metrics->add_option("--d1", mt_d1, "original first survey (enables bounds)");
  metrics->add_option("--d2", mt_d2, "original second survey (enables bounds)");
  metrics->add_option("--b-var", mt_b, "bound variable unique to d1");
  metrics->add_option("--bprime-var", mt_bp, "bound variable unique to d2");
  metrics->add_flag("--unconditional", mt_unconditional,
                    "margins-only bounds instead of conditioning on shared cells");
  CLI::Option* mt_out_opt = metrics->add_option("--out", mt_out, "optional report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    Exec exec = Exec::kAuto;
    if (threads_opt->count() > 0) {
      if (g_threads < 0) throw ValidationError("threads must be at least 0");
      if (g_threads == 1) {
        exec = Exec::kSerial;
      } else if (g_threads > 1) {
        exec = Exec::kParallel;
#ifdef _OPENMP
        omp_set_num_threads(g_threads);
#endif
      }
    }

    if (fuse->parsed()) {
      RunConfig config;
      if (f_config_opt->count()) config = RunConfig::load(f_config);
      if (f_schema_opt->count()) config.schema_path = f_schema;
      if (f_d1_opt->count()) config.d1_path = f_d1;
      if (f_d2_opt->count()) config.d2_path = f_d2;
      if (f_out_opt->count()) config.output_dir = f_out;
      if (f_glue_opt->count()) config.glue_path = f_glue;
      if (f_glue_mode_opt->count()) config.glue.mode = glue_mode_from_string(f_glue_mode);
      if (f_glue_vars_opt->count()) config.glue.variables_kept = f_glue_vars;
      if (f_glue_size_opt->count()) config.glue.n_s = f_glue_size;
      if (f_direction_opt->count()) config.glue.direction = direction_from_string(f_direction);
      if (f_classes_opt->count()) config.hyper.num_classes = f_classes;
      if (f_burn_opt->count()) config.sampler.burn_in = f_burn;
      if (f_iter_opt->count()) config.sampler.n_iterations = f_iter;
      if (f_thin_opt->count()) config.sampler.thin = f_thin;
      if (f_m_opt->count()) config.sampler.m = f_m;
      if (f_keep_draws) config.sampler.keep_param_draws = true;
      if (f_impute_glue) config.sampler.impute_glue = true;
      if (f_threshold_opt->count()) config.diagnostic_threshold = f_threshold;
      if (seed_opt->count()) config.sampler.seed = g_seed;
      if (missing_opt->count()) config.missing_token = g_missing;
      config.sampler.exec = exec;
      return cmd_fuse(config);
    }
    if (simulate->parsed()) {
      SimulateConfig config;
      if (s_spec_opt->count()) {
        config.spec = SyntheticSpec::from_json(read_json_file(s_spec));
      }
      config.output_dir = s_out;
      config.run_richness = s_study == "richness" || s_study == "all";
      config.run_size = s_study == "size" || s_study == "all";
      config.run_bias = s_study == "bias" || s_study == "all";
      if (s_seeds_opt->count()) config.seeds = s_seeds;
      if (s_ladder_opt->count()) config.size_ladder = s_ladder;
      if (s_classes_opt->count()) config.hyper.num_classes = s_classes;
      if (s_burn_opt->count()) config.sampler.burn_in = s_burn;
      if (s_iter_opt->count()) config.sampler.n_iterations = s_iter;
      if (s_thin_opt->count()) config.sampler.thin = s_thin;
      if (s_m_opt->count()) config.sampler.m = s_m;
      if (seed_opt->count()) config.sampler.seed = g_seed;
      config.sampler.exec = exec;
      return cmd_simulate(config);
    }
    if (diagnose->parsed()) {
      DiagnoseConfig config;
      config.schema_path = dg_schema;
      config.glue_path = dg_glue;
      config.reference_path = dg_reference;
      config.variables = dg_vars;
      config.d1_path = dg_d1;
      config.d2_path = dg_d2;
      config.sampler.burn_in = 500;
      config.sampler.n_iterations = 1000;
      config.sampler.thin = 50;
      if (dg_threshold_opt->count()) config.threshold = dg_threshold;
      if (dg_out_opt->count()) config.output_dir = dg_out;
      if (dg_classes_opt->count()) config.hyper.num_classes = dg_classes;
      if (dg_burn_opt->count()) config.sampler.burn_in = dg_burn;
      if (dg_iter_opt->count()) config.sampler.n_iterations = dg_iter;
      if (seed_opt->count()) config.sampler.seed = g_seed;
      if (missing_opt->count()) config.missing_token = g_missing;
      config.sampler.exec = exec;
      return cmd_diagnose(config);
    }
    if (metrics->parsed()) {
      MetricsConfig config;
      config.schema_path = mt_schema;
      for (const std::string& c : mt_completed) config.completed_paths.emplace_back(c);
      config.variables = mt_vars;
      config.truth_path = mt_truth;
      config.d1_path = mt_d1;
      config.d2_path = mt_d2;
      config.b_var = mt_b;
      config.bprime_var = mt_bp;
      config.conditional_bounds = !mt_unconditional;
      if (mt_out_opt->count()) config.output_dir = mt_out;
      if (missing_opt->count()) config.missing_token = g_missing;
      return cmd_metrics(config);
    }
    throw ValidationError("no subcommand selected");
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace catfuse

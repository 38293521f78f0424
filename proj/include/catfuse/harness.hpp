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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "catfuse/glue.hpp"
#include "catfuse/model.hpp"
#include "catfuse/simulate.hpp"

namespace catfuse {

inline constexpr const char* kVersion = "0.1.0";

// Parses a whole JSON file; IoError when unreadable, ValidationError on bad JSON.
nlohmann::json read_json_file(const std::filesystem::path& path);

// Temp-and-rename write so readers never see a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// 64-bit content hash of a file, as 16 lowercase hex digits.
std::string file_hash_hex(const std::filesystem::path& path);

// Hash of a manifest's compact JSON serialization.
std::string manifest_hash_hex(const nlohmann::json& manifest);

Hyperparams hyperparams_from_json(const nlohmann::json& j);
nlohmann::json hyperparams_to_json(const Hyperparams& hp);
SamplerConfig sampler_config_from_json(const nlohmann::json& j);
nlohmann::json sampler_config_to_json(const SamplerConfig& cfg);
GlueSpec glue_spec_from_json(const nlohmann::json& j);
nlohmann::json glue_spec_to_json(const GlueSpec& spec);

// One fusion run: inputs, auxiliary-data handling, sampler budget, outputs.
struct RunConfig {
  std::filesystem::path schema_path;
  std::filesystem::path d1_path;
  std::filesystem::path d2_path;
  std::filesystem::path glue_path;  // empty means fuse the two surveys alone
  GlueSpec glue;                    // consulted only when glue_path is set
  Hyperparams hyper;
  SamplerConfig sampler;
  std::filesystem::path output_dir;
  std::string missing_token = "NA";
  double diagnostic_threshold = 0.05;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // Input files exist and the output directory is named; one glue mode at
  // most is in play (none when glue_path is empty).
  void validate() const;
};

// Runs the model on the concatenated inputs and writes, per imputation k:
// d1_imp<k>.csv and d2_imp<k>.csv; plus posterior_summary.jsonl,
// fuse_report.json, fuse_report.txt, and manifest.json. Returns 0; failures
// throw. A failing glue diagnostic or an occupancy warning is surfaced in
// the reports but does not stop the run.
int cmd_fuse(const RunConfig& config);

struct SimulateConfig {
  SyntheticSpec spec;  // defaults to SyntheticSpec::builtin_default()
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool run_richness = true;
  bool run_size = false;
  bool run_bias = false;
  std::vector<std::size_t> size_ladder;  // empty means {0, n/2, 2n}
  BiasDesign bias;                       // defaults to BiasDesign::builtin_default()
  Hyperparams hyper;
  SamplerConfig sampler;  // per-chain budget; per-rung seeds are derived
  std::filesystem::path output_dir;

  SimulateConfig();
  void validate() const;
};

// Runs the requested synthetic studies and writes one report pair per study
// (richness_report, size_report, bias_report as .json and .txt) plus
// manifest.json.
int cmd_simulate(const SimulateConfig& config);

struct DiagnoseConfig {
  std::filesystem::path schema_path;
  std::filesystem::path glue_path;
  // Direct mode: compare the glue file's marginals against one reference.
  std::filesystem::path reference_path;
  std::vector<std::string> variables;
  // Two-direction mode (set d1 and d2 instead of reference): construct
  // completions under both conditionals and test each against the survey
  // observing the completed block.
  std::filesystem::path d1_path;
  std::filesystem::path d2_path;
  Hyperparams hyper;
  SamplerConfig sampler;
  double threshold = 0.05;
  std::filesystem::path output_dir;  // empty means stdout only
  std::string missing_token = "NA";

  void validate() const;
};

int cmd_diagnose(const DiagnoseConfig& config);

struct MetricsConfig {
  std::filesystem::path schema_path;
  std::vector<std::filesystem::path> completed_paths;
  std::vector<std::string> variables;   // cells of the reported joint table
  std::filesystem::path truth_path;     // optional complete dataset to score against
  std::filesystem::path d1_path;        // optional, with d2 enables bounds
  std::filesystem::path d2_path;
  std::string b_var;       // bound variables; default first B and first Bprime
  std::string bprime_var;
  bool conditional_bounds = true;
  std::filesystem::path output_dir;
  std::string missing_token = "NA";

  void validate() const;
};

// Recomputes metrics from saved completed datasets: per-cell combined
// estimates over `variables`, distances against the optional truth table,
// and bounds from the optional original surveys.
int cmd_metrics(const MetricsConfig& config);

// Full command-line surface; returns the process exit code
// (0 ok, 1 validation, 2 numerical, 3 I/O).
int cli_main(int argc, const char* const* argv);

}  // namespace catfuse

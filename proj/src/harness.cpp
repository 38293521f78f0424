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

#include "catfuse/harness.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "catfuse/contingency.hpp"
#include "catfuse/dataset.hpp"
#include "catfuse/errors.hpp"
#include "catfuse/metrics.hpp"
#include "catfuse/numeric.hpp"
#include "catfuse/rng.hpp"
#include "catfuse/sampler.hpp"

namespace catfuse {

namespace {

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw ValidationError("unknown key '" + it.key() + "' in " + what);
  }
}

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " path is required");
  if (!std::filesystem::exists(path)) {
    throw ValidationError(what + " file does not exist: " + path.string());
  }
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

std::vector<std::string> role_names(const Schema& schema, Role role) {
  std::vector<std::string> names;
  for (std::size_t c : schema.role_columns(role)) names.push_back(schema.var(c).name);
  return names;
}

std::shared_ptr<const Schema> load_schema(const std::filesystem::path& path) {
  return std::make_shared<Schema>(Schema::from_json(read_json_file(path)));
}

nlohmann::json write_report_pair(const std::filesystem::path& dir, const std::string& stem,
                                 const nlohmann::json& json_body, const std::string& text_body) {
  write_text_atomic(dir / (stem + ".json"), json_body.dump(2) + "\n");
  write_text_atomic(dir / (stem + ".txt"), text_body);
  nlohmann::json outputs = nlohmann::json::object();
  outputs[stem + ".json"] = file_hash_hex(dir / (stem + ".json"));
  outputs[stem + ".txt"] = file_hash_hex(dir / (stem + ".txt"));
  return outputs;
}

void finish_manifest(const std::filesystem::path& dir, nlohmann::json manifest,
                     const std::string& mhash, nlohmann::json outputs) {
  manifest["manifest_hash"] = mhash;
  manifest["outputs"] = std::move(outputs);
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path.string());
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError("invalid JSON in " + path.string());
  return j;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string());
}

std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path.string());
  return hex64(numeric::fnv1a64(bytes));
}

std::string manifest_hash_hex(const nlohmann::json& manifest) {
  return hex64(numeric::fnv1a64(manifest.dump()));
}

Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("hyperparams must be a JSON object");
  require_keys(j, {"num_classes", "a_alpha", "b_alpha", "dirichlet_a"}, "hyperparams");
  Hyperparams hp;
  if (j.contains("num_classes")) hp.num_classes = j.at("num_classes").get<int>();
  if (j.contains("a_alpha")) hp.a_alpha = j.at("a_alpha").get<double>();
  if (j.contains("b_alpha")) hp.b_alpha = j.at("b_alpha").get<double>();
  if (j.contains("dirichlet_a")) {
    hp.dirichlet_a = j.at("dirichlet_a").get<std::vector<std::vector<double>>>();
  }
  return hp;
}

nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
  nlohmann::json j = {{"num_classes", hp.num_classes},
                      {"a_alpha", hp.a_alpha},
                      {"b_alpha", hp.b_alpha}};
  if (!hp.dirichlet_a.empty()) j["dirichlet_a"] = hp.dirichlet_a;
  return j;
}

SamplerConfig sampler_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("sampler config must be a JSON object");
  require_keys(j,
               {"burn_in", "n_iterations", "thin", "seed", "m", "impute_glue",
                "keep_param_draws"},
               "sampler config");
  SamplerConfig cfg;
  if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<std::size_t>();
  if (j.contains("n_iterations")) cfg.n_iterations = j.at("n_iterations").get<std::size_t>();
  if (j.contains("thin")) cfg.thin = j.at("thin").get<std::size_t>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("m")) cfg.m = j.at("m").get<std::size_t>();
  if (j.contains("impute_glue")) cfg.impute_glue = j.at("impute_glue").get<bool>();
  if (j.contains("keep_param_draws")) {
    cfg.keep_param_draws = j.at("keep_param_draws").get<bool>();
  }
  return cfg;
}

nlohmann::json sampler_config_to_json(const SamplerConfig& cfg) {
  return {{"burn_in", cfg.burn_in},
          {"n_iterations", cfg.n_iterations},
          {"thin", cfg.thin},
          {"seed", cfg.seed},
          {"m", cfg.m},
          {"impute_glue", cfg.impute_glue},
          {"keep_param_draws", cfg.keep_param_draws}};
}

GlueSpec glue_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("glue spec must be a JSON object");
  require_keys(j, {"path", "mode", "variables_kept", "n_s", "direction"}, "glue spec");
  GlueSpec spec;
  if (j.contains("mode")) spec.mode = glue_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("variables_kept")) {
    spec.variables_kept = j.at("variables_kept").get<std::vector<std::string>>();
  }
  if (j.contains("n_s")) spec.n_s = j.at("n_s").get<std::size_t>();
  if (j.contains("direction")) {
    spec.direction = direction_from_string(j.at("direction").get<std::string>());
  }
  return spec;
}

nlohmann::json glue_spec_to_json(const GlueSpec& spec) {
  return {{"mode", to_string(spec.mode)},
          {"variables_kept", spec.variables_kept},
          {"n_s", spec.n_s},
          {"direction", to_string(spec.direction)}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  require_keys(j,
               {"schema", "d1", "d2", "glue", "hyperparams", "sampler", "output_dir",
                "missing_token", "diagnostic_threshold"},
               "run config");
  RunConfig config;
  if (j.contains("schema")) config.schema_path = j.at("schema").get<std::string>();
  if (j.contains("d1")) config.d1_path = j.at("d1").get<std::string>();
  if (j.contains("d2")) config.d2_path = j.at("d2").get<std::string>();
  if (j.contains("glue")) {
    const nlohmann::json& g = j.at("glue");
    if (!g.contains("path")) throw ValidationError("glue spec needs its data file under 'path'");
    config.glue_path = g.at("path").get<std::string>();
    config.glue = glue_spec_from_json(g);
  }
  if (j.contains("hyperparams")) config.hyper = hyperparams_from_json(j.at("hyperparams"));
  if (j.contains("sampler")) config.sampler = sampler_config_from_json(j.at("sampler"));
  if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("missing_token")) config.missing_token = j.at("missing_token").get<std::string>();
  if (j.contains("diagnostic_threshold")) {
    config.diagnostic_threshold = j.at("diagnostic_threshold").get<double>();
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"schema", schema_path.string()},
                      {"d1", d1_path.string()},
                      {"d2", d2_path.string()},
                      {"hyperparams", hyperparams_to_json(hyper)},
                      {"sampler", sampler_config_to_json(sampler)},
                      {"output_dir", output_dir.string()},
                      {"missing_token", missing_token},
                      {"diagnostic_threshold", diagnostic_threshold}};
  if (!glue_path.empty()) {
    nlohmann::json g = glue_spec_to_json(glue);
    g["path"] = glue_path.string();
    j["glue"] = std::move(g);
  }
  return j;
}

void RunConfig::validate() const {
  require_file(schema_path, "schema");
  require_file(d1_path, "first survey");
  require_file(d2_path, "second survey");
  if (!glue_path.empty()) require_file(glue_path, "auxiliary data");
  if (output_dir.empty()) throw ValidationError("output directory is required");
  if (missing_token.empty()) throw ValidationError("missing token must be non-empty");
  if (!(diagnostic_threshold > 0.0)) {
    throw ValidationError("diagnostic threshold must be positive");
  }
  sampler.validate();
}

int cmd_fuse(const RunConfig& config) {
  config.validate();
  const std::shared_ptr<const Schema> schema = load_schema(config.schema_path);
  config.hyper.validate(*schema);
  const Dataset d1 =
      Dataset::load_csv(schema, config.d1_path, Provenance::kD1, config.missing_token);
  const Dataset d2 =
      Dataset::load_csv(schema, config.d2_path, Provenance::kD2, config.missing_token);

  nlohmann::json manifest = {{"command", "fuse"},
                             {"version", kVersion},
                             {"config", config.to_json()},
                             {"seed", config.sampler.seed}};
  nlohmann::json input_hashes = {{"schema", file_hash_hex(config.schema_path)},
                                 {"d1", file_hash_hex(config.d1_path)},
                                 {"d2", file_hash_hex(config.d2_path)}};
  if (!config.glue_path.empty()) input_hashes["glue"] = file_hash_hex(config.glue_path);
  manifest["inputs"] = std::move(input_hashes);
  const std::string mhash = manifest_hash_hex(manifest);

  std::vector<std::string> warnings;
  Dataset glue;
  DiagnosticReport diagnostic;
  bool have_glue = false;
  bool have_diagnostic = false;
  if (!config.glue_path.empty()) {
    have_glue = true;
    const Dataset raw =
        Dataset::load_csv(schema, config.glue_path, Provenance::kGlue, config.missing_token);
    switch (config.glue.mode) {
      case GlueMode::kAppendRaw:
        glue = make_append_glue(raw, config.glue);
        break;
      case GlueMode::kDuplicate:
        glue = make_duplicate_glue(raw, config.glue, config.sampler.seed);
        break;
      case GlueMode::kConstructFromConditional: {
        const bool b_direction = config.glue.direction == ConditionalDirection::kBGivenABprime;
        SamplerConfig fit_cfg = config.sampler;
        fit_cfg.seed = rng::derive_stream(config.sampler.seed, rng::StreamPurpose::kHarness, 1);
        glue = construct_glue(raw, b_direction ? d2 : d1, config.glue.direction, config.hyper,
                              fit_cfg, config.glue.n_s);
        const std::vector<std::string> block =
            role_names(*schema, b_direction ? Role::kB : Role::kBprime);
        diagnostic = representativeness_diagnostic(glue, b_direction ? d1 : d2, block,
                                                   config.diagnostic_threshold);
        have_diagnostic = true;
        if (!diagnostic.pass) {
          warnings.push_back(
              "constructed auxiliary rows FAILED the representativeness check "
              "(max |diff| " +
              std::to_string(diagnostic.max_abs_diff) +
              "); the imputed block's conditional is not supported by the surveys");
        }
        break;
      }
    }
  }

  std::vector<Dataset> parts{d1, d2};
  if (have_glue) parts.push_back(glue);
  const Dataset combined = Dataset::concat(parts);
  const ChainResult chain = run_chain(combined, config.hyper, config.sampler);

  std::filesystem::create_directories(config.output_dir);
  const std::filesystem::path dir = config.output_dir;
  nlohmann::json outputs = nlohmann::json::object();
  for (std::size_t k = 0; k < chain.completed.size(); ++k) {
    const std::string d1_name = "d1_imp" + std::to_string(k + 1) + ".csv";
    const std::string d2_name = "d2_imp" + std::to_string(k + 1) + ".csv";
    chain.completed[k].filter_source({Provenance::kD1}).save_csv(dir / d1_name,
                                                                 config.missing_token);
    chain.completed[k].filter_source({Provenance::kD2}).save_csv(dir / d2_name,
                                                                 config.missing_token);
    outputs[d1_name] = file_hash_hex(dir / d1_name);
    outputs[d2_name] = file_hash_hex(dir / d2_name);
  }
  chain.summary.save_jsonl(dir / "posterior_summary.jsonl");
  outputs["posterior_summary.jsonl"] = file_hash_hex(dir / "posterior_summary.jsonl");

  const OccupancyVerdict occupancy = occupancy_check(chain.summary, config.hyper.num_classes);
  if (occupancy.warn) {
    std::ostringstream w;
    w << "occupied classes pressed the truncation limit in "
      << std::fixed << std::setprecision(1) << 100.0 * occupancy.mass_near_limit
      << "% of retained iterates; rerun with more classes";
    warnings.push_back(w.str());
  }

  std::vector<double> alphas;
  double n_star_sum = 0.0;
  alphas.reserve(chain.summary.trace.size());
  for (const IterateRecord& r : chain.summary.trace) {
    alphas.push_back(r.alpha);
    n_star_sum += r.n_star;
  }
  const double alpha_mean = numeric::mean(alphas);
  const double n_star_mean = n_star_sum / static_cast<double>(chain.summary.trace.size());

  nlohmann::json report = {
      {"manifest_hash", mhash},
      {"rows", {{"d1", d1.n_rows()}, {"d2", d2.n_rows()}, {"glue", have_glue ? glue.n_rows() : 0}}},
      {"missing_cells", {{"d1", d1.count_missing()}, {"d2", d2.count_missing()}}},
      {"sampler",
       {{"total_sweeps", config.sampler.total_sweeps()},
        {"retained_iterates", chain.summary.trace.size()},
        {"imputations", chain.completed.size()}}},
      {"posterior",
       {{"alpha_mean", alpha_mean},
        {"n_star_mean", n_star_mean},
        {"max_n_star", occupancy.max_n_star}}},
      {"occupancy",
       {{"warn", occupancy.warn},
        {"mass_near_limit", occupancy.mass_near_limit},
        {"max_n_star", occupancy.max_n_star}}},
      {"warnings", warnings}};
  if (have_glue) {
    nlohmann::json g = {{"mode", to_string(config.glue.mode)}, {"rows", glue.n_rows()}};
    if (have_diagnostic) g["diagnostic"] = diagnostic.to_json();
    report["glue"] = std::move(g);
  }

  std::ostringstream text;
  text << "fusion run report\n"
       << "manifest " << mhash << "\n";
  for (const std::string& w : warnings) text << "WARNING: " << w << "\n";
  text << "\n";
  text << "inputs\n"
       << "  d1    rows " << d1.n_rows() << "  missing cells " << d1.count_missing() << "\n"
       << "  d2    rows " << d2.n_rows() << "  missing cells " << d2.count_missing() << "\n";
  if (have_glue) {
    text << "  glue  rows " << glue.n_rows() << "  mode " << to_string(config.glue.mode) << "\n";
  }
  text << "\nsampler\n"
       << "  classes " << config.hyper.num_classes << "  total sweeps "
       << config.sampler.total_sweeps() << "  burn-in " << config.sampler.burn_in << "  thin "
       << config.sampler.thin << "  imputations " << chain.completed.size() << "\n";
  text << "\nposterior\n"
       << std::fixed << std::setprecision(4)
       << "  concentration mean " << alpha_mean << "\n"
       << "  occupied classes mean " << n_star_mean << "  max " << occupancy.max_n_star << "\n";
  text << "\noccupancy check: " << (occupancy.warn ? "WARN" : "OK") << " (mass near limit "
       << occupancy.mass_near_limit << ")\n";
  if (have_diagnostic) {
    text << "\nauxiliary-data diagnostic (" << to_string(config.glue.direction) << ")\n"
         << diagnostic.to_text();
  }

  outputs.update(write_report_pair(dir, "fuse_report", report, text.str()));
  finish_manifest(dir, std::move(manifest), mhash, std::move(outputs));
  std::cout << text.str();
  return 0;
}

SimulateConfig::SimulateConfig()
    : spec(SyntheticSpec::builtin_default()), bias(BiasDesign::builtin_default()) {
  sampler.burn_in = 400;
  sampler.n_iterations = 800;
  sampler.thin = 40;
  sampler.m = 10;
}

void SimulateConfig::validate() const {
  spec.validate();
  if (seeds.empty()) throw ValidationError("at least one seed is required");
  if (!(run_richness || run_size || run_bias)) {
    throw ValidationError("no study selected");
  }
  if (output_dir.empty()) throw ValidationError("output directory is required");
  sampler.validate();
}

namespace {

nlohmann::json bias_design_to_json(const BiasDesign& design) {
  nlohmann::json conditions = nlohmann::json::array();
  for (const BiasDesign::Condition& c : design.oversample) {
    conditions.push_back({{"var", c.var}, {"min_level", c.min_level}});
  }
  return {{"oversample", conditions},
          {"base_rate", design.base_rate},
          {"bprime_var", design.bprime_var},
          {"bprime_marginal", design.bprime_marginal},
          {"b_var", design.b_var}};
}

}  // namespace

int cmd_simulate(const SimulateConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.output_dir);
  const std::filesystem::path dir = config.output_dir;

  std::vector<std::size_t> ladder = config.size_ladder;
  if (config.run_size && ladder.empty()) {
    ladder = {0, config.spec.n / 2, 2 * config.spec.n};
  }
  std::vector<std::string> studies;
  if (config.run_richness) studies.push_back("richness");
  if (config.run_size) studies.push_back("size");
  if (config.run_bias) studies.push_back("bias");

  nlohmann::json manifest = {{"command", "simulate"},
                             {"version", kVersion},
                             {"spec", config.spec.to_json()},
                             {"seeds", config.seeds},
                             {"studies", studies},
                             {"size_ladder", ladder},
                             {"bias_design", bias_design_to_json(config.bias)},
                             {"hyperparams", hyperparams_to_json(config.hyper)},
                             {"sampler", sampler_config_to_json(config.sampler)}};
  const std::string mhash = manifest_hash_hex(manifest);
  nlohmann::json outputs = nlohmann::json::object();

  if (config.run_richness) {
    const RichnessStudy study =
        run_richness_study(config.spec, config.seeds, config.hyper, config.sampler);
    const nlohmann::json body = {{"manifest_hash", mhash}, {"study", study.to_json()}};
    const std::string text =
        "glue richness study\nmanifest " + mhash + "\n\n" + study.to_text();
    outputs.update(write_report_pair(dir, "richness_report", body, text));
    std::cout << text;
  }
  if (config.run_size) {
    const SizeStudy study =
        run_size_study(config.spec, ladder, config.seeds, config.hyper, config.sampler);
    const nlohmann::json body = {{"manifest_hash", mhash}, {"study", study.to_json()}};
    const std::string text = "glue size study\nmanifest " + mhash + "\n\n" + study.to_text();
    outputs.update(write_report_pair(dir, "size_report", body, text));
    std::cout << text;
  }
  if (config.run_bias) {
    const BiasStudy study =
        run_bias_study(config.spec, config.bias, config.seeds.front(), config.hyper,
                       config.sampler);
    const nlohmann::json body = {{"manifest_hash", mhash}, {"study", study.to_json()}};
    const std::string text =
        "nonrepresentative auxiliary-data study\nmanifest " + mhash + "\n\n" + study.to_text();
    outputs.update(write_report_pair(dir, "bias_report", body, text));
    std::cout << text;
  }

  finish_manifest(dir, std::move(manifest), mhash, std::move(outputs));
  return 0;
}

void DiagnoseConfig::validate() const {
  require_file(schema_path, "schema");
  require_file(glue_path, "auxiliary data");
  const bool two_direction = !d1_path.empty() || !d2_path.empty();
  if (two_direction) {
    require_file(d1_path, "first survey");
    require_file(d2_path, "second survey");
    sampler.validate();
  } else {
    require_file(reference_path, "reference data");
    if (variables.empty()) {
      throw ValidationError("name the variables to compare with --vars");
    }
  }
  if (!(threshold > 0.0)) throw ValidationError("threshold must be positive");
}

int cmd_diagnose(const DiagnoseConfig& config) {
  config.validate();
  const std::shared_ptr<const Schema> schema = load_schema(config.schema_path);
  const Dataset glue =
      Dataset::load_csv(schema, config.glue_path, Provenance::kGlue, config.missing_token);

  nlohmann::json manifest = {{"command", "diagnose"},
                             {"version", kVersion},
                             {"threshold", config.threshold},
                             {"inputs",
                              {{"schema", file_hash_hex(config.schema_path)},
                               {"glue", file_hash_hex(config.glue_path)}}}};
  nlohmann::json body;
  std::ostringstream text;

  if (!config.d1_path.empty()) {
    config.hyper.validate(*schema);
    manifest["inputs"]["d1"] = file_hash_hex(config.d1_path);
    manifest["inputs"]["d2"] = file_hash_hex(config.d2_path);
    manifest["sampler"] = sampler_config_to_json(config.sampler);
    manifest["hyperparams"] = hyperparams_to_json(config.hyper);
    const std::string mhash = manifest_hash_hex(manifest);
    const Dataset d1 =
        Dataset::load_csv(schema, config.d1_path, Provenance::kD1, config.missing_token);
    const Dataset d2 =
        Dataset::load_csv(schema, config.d2_path, Provenance::kD2, config.missing_token);
    const std::vector<std::string> b_names = role_names(*schema, Role::kB);
    const std::vector<std::string> bp_names = role_names(*schema, Role::kBprime);

    SamplerConfig ccfg = config.sampler;
    ccfg.seed = rng::derive_stream(config.sampler.seed, rng::StreamPurpose::kHarness, 8);
    const Dataset completed_b =
        construct_glue(glue, d2, ConditionalDirection::kBGivenABprime, config.hyper, ccfg);
    const DiagnosticReport rep_b =
        representativeness_diagnostic(completed_b, d1, b_names, config.threshold);

    ccfg.seed = rng::derive_stream(config.sampler.seed, rng::StreamPurpose::kHarness, 9);
    const Dataset completed_bp =
        construct_glue(glue, d1, ConditionalDirection::kBprimeGivenAB, config.hyper, ccfg);
    const DiagnosticReport rep_bp =
        representativeness_diagnostic(completed_bp, d2, bp_names, config.threshold);

    body = {{"manifest_hash", mhash},
            {"b_direction", rep_b.to_json()},
            {"bprime_direction", rep_bp.to_json()}};
    text << "auxiliary-data diagnostic\nmanifest " << mhash << "\n\n"
         << "direction: impute B from P(B | shared, B')\n"
         << rep_b.to_text() << "\n"
         << "direction: impute B' from P(B' | shared, B)\n"
         << rep_bp.to_text();
  } else {
    manifest["inputs"]["reference"] = file_hash_hex(config.reference_path);
    manifest["variables"] = config.variables;
    const std::string mhash = manifest_hash_hex(manifest);
    const Dataset reference = Dataset::load_csv(schema, config.reference_path,
                                                Provenance::kComplete, config.missing_token);
    const DiagnosticReport rep =
        representativeness_diagnostic(glue, reference, config.variables, config.threshold);
    body = {{"manifest_hash", mhash}, {"comparison", rep.to_json()}};
    text << "marginal comparison\nmanifest " << mhash << "\n\n" << rep.to_text();
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    nlohmann::json outputs = write_report_pair(config.output_dir, "diagnose_report", body,
                                               text.str());
    finish_manifest(config.output_dir, std::move(manifest),
                    body.at("manifest_hash").get<std::string>(), std::move(outputs));
  }
  std::cout << text.str();
  return 0;
}

void MetricsConfig::validate() const {
  require_file(schema_path, "schema");
  if (completed_paths.empty()) {
    throw ValidationError("at least one completed dataset is required");
  }
  if (variables.empty()) throw ValidationError("name the table variables with --vars");
  if (!truth_path.empty()) require_file(truth_path, "truth data");
  if (d1_path.empty() != d2_path.empty()) {
    throw ValidationError("bounds need both original surveys");
  }
}

namespace {

std::vector<std::string> split_commas(const std::string& arg) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start <= arg.size()) {
    const std::size_t comma = arg.find(',', start);
    const std::string piece =
        arg.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (piece.empty()) throw ValidationError("empty entry in comma-separated list");
    pieces.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return pieces;
}

// A completed dataset argument may name several files joined by commas;
// they are loaded and stacked (the d1/d2 halves of one imputation).
Dataset load_completed(const std::shared_ptr<const Schema>& schema, const std::string& arg,
                       const std::string& missing_token) {
  std::vector<Dataset> parts;
  for (const std::string& piece : split_commas(arg)) {
    require_file(piece, "completed dataset");
    parts.push_back(Dataset::load_csv(schema, piece, Provenance::kComplete, missing_token));
  }
  return parts.size() == 1 ? std::move(parts.front()) : Dataset::concat(parts);
}

}  // namespace

int cmd_metrics(const MetricsConfig& config) {
  config.validate();
  const std::shared_ptr<const Schema> schema = load_schema(config.schema_path);

  std::vector<Dataset> completed;
  nlohmann::json input_hashes = {{"schema", file_hash_hex(config.schema_path)}};
  nlohmann::json completed_hashes = nlohmann::json::object();
  for (const std::filesystem::path& p : config.completed_paths) {
    completed.push_back(load_completed(schema, p.string(), config.missing_token));
    for (const std::string& piece : split_commas(p.string())) {
      completed_hashes[piece] = file_hash_hex(piece);
    }
  }
  input_hashes["completed"] = completed_hashes;

  nlohmann::json manifest = {{"command", "metrics"},
                             {"version", kVersion},
                             {"variables", config.variables},
                             {"inputs", input_hashes}};
  const std::string mhash = manifest_hash_hex(manifest);

  std::vector<ContingencyTable> tables;
  tables.reserve(completed.size());
  for (const Dataset& c : completed) tables.push_back(tabulate(c, config.variables));

  std::ostringstream text;
  text << "metric report\nmanifest " << mhash << "\n\n";
  nlohmann::json body = {{"manifest_hash", mhash}, {"variables", config.variables}};

  // Per-cell proportion estimates combined across imputations; the within
  // variance of a proportion is p(1-p)/n.
  const std::size_t cells = tables.front().counts().size();
  nlohmann::json cell_rows = nlohmann::json::array();
  text << "combined cell estimates\n";
  text << std::fixed << std::setprecision(4);
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<std::pair<double, double>> estimates;
    estimates.reserve(tables.size());
    for (const ContingencyTable& t : tables) {
      const double n = static_cast<double>(t.total());
      const double p = static_cast<double>(t.count(c)) / n;
      estimates.emplace_back(p, p * (1.0 - p) / n);
    }
    const std::vector<std::int32_t> codes = tables.front().codes_at(c);
    std::string label;
    for (std::size_t v = 0; v < config.variables.size(); ++v) {
      if (v) label += ",";
      label += config.variables[v] + "=" + std::to_string(codes[v]);
    }
    nlohmann::json row = {{"cell", label}};
    if (estimates.size() >= 2) {
      const MIEstimate est = mi_combine(estimates);
      row["estimate"] = est.q_bar;
      row["lower"] = est.lower;
      row["upper"] = est.upper;
      row["total_variance"] = est.total;
      row["df"] = std::isinf(est.df) ? nlohmann::json("inf") : nlohmann::json(est.df);
      text << "  " << label << "  " << est.q_bar << "  [" << est.lower << ", " << est.upper
           << "]\n";
    } else {
      row["estimate"] = estimates.front().first;
      text << "  " << label << "  " << estimates.front().first << "\n";
    }
    cell_rows.push_back(std::move(row));
  }
  body["cells"] = std::move(cell_rows);

  if (!config.truth_path.empty()) {
    const Dataset truth_data = Dataset::load_csv(schema, config.truth_path,
                                                 Provenance::kComplete, config.missing_token);
    const ContingencyTable truth = tabulate(truth_data, config.variables);
    const std::vector<double> truth_props = truth.proportions();
    std::vector<double> dists;
    dists.reserve(tables.size());
    for (const ContingencyTable& t : tables) {
      dists.push_back(hellinger(t.proportions(), truth_props));
    }
    body["hellinger_mean"] = numeric::mean(dists);
    text << "\nhellinger distance to truth: mean " << numeric::mean(dists) << " over "
         << dists.size() << " imputations\n";
    bool totals_match = true;
    for (const ContingencyTable& t : tables) totals_match &= t.total() == truth.total();
    if (totals_match) {
      const double mis = misclassified_count(truth, tables);
      body["misclassified"] = mis;
      text << "expected misclassified rows: " << std::setprecision(1) << mis
           << std::setprecision(4) << "\n";
    } else {
      text << "expected misclassified rows: skipped (row counts differ from truth)\n";
    }
  }

  if (!config.d1_path.empty()) {
    const Dataset d1 =
        Dataset::load_csv(schema, config.d1_path, Provenance::kD1, config.missing_token);
    const Dataset d2 =
        Dataset::load_csv(schema, config.d2_path, Provenance::kD2, config.missing_token);
    std::string b_var = config.b_var;
    std::string bprime_var = config.bprime_var;
    if (b_var.empty()) b_var = role_names(*schema, Role::kB).front();
    if (bprime_var.empty()) bprime_var = role_names(*schema, Role::kBprime).front();
    const FrechetBoundsResult bounds =
        frechet_bounds(d1, d2, b_var, bprime_var, config.conditional_bounds);
    nlohmann::json rows = nlohmann::json::array();
    text << "\n" << (bounds.conditional ? "conditional" : "unconditional")
         << " bounds on P(" << b_var << "," << bprime_var << ")\n";
    for (const FrechetInterval& iv : bounds.intervals) {
      rows.push_back({{"b_level", iv.b_level},
                      {"bprime_level", iv.bprime_level},
                      {"lower", iv.lower},
                      {"upper", iv.upper}});
      text << "  (" << b_var << "=" << iv.b_level << "," << bprime_var << "=" << iv.bprime_level
           << ")  [" << iv.lower << ", " << iv.upper << "]  width " << iv.width() << "\n";
    }
    body["bounds"] = {{"b_var", b_var},
                      {"bprime_var", bprime_var},
                      {"conditional", bounds.conditional},
                      {"intervals", std::move(rows)}};
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    nlohmann::json outputs =
        write_report_pair(config.output_dir, "metrics_report", body, text.str());
    finish_manifest(config.output_dir, std::move(manifest), mhash, std::move(outputs));
  }
  std::cout << text.str();
  return 0;
}

}  // namespace catfuse

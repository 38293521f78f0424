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

#include "catfuse/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "catfuse/contingency.hpp"
#include "catfuse/errors.hpp"
#include "catfuse/matching.hpp"
#include "catfuse/metrics.hpp"
#include "catfuse/numeric.hpp"
#include "catfuse/rng.hpp"
#include "catfuse/sampler.hpp"

namespace catfuse {

namespace {

void require_simplex(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw ValidationError(what + " has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(what + " must sum to 1, got " + std::to_string(sum));
  }
}

std::vector<std::string> role_names(const Schema& schema, Role role) {
  std::vector<std::string> names;
  for (std::size_t c : schema.role_columns(role)) names.push_back(schema.var(c).name);
  return names;
}

std::string join(std::span<const std::string> parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (!schema) throw ValidationError("synthetic spec has no schema");
  if (n < 2) throw ValidationError("synthetic population needs at least 2 rows");
  if (!(split_fraction > 0.0) || !(split_fraction < 1.0)) {
    throw ValidationError("split fraction must lie strictly inside (0,1)");
  }
  if (class_weight.empty()) throw ValidationError("synthetic spec has no classes");
  require_simplex(class_weight, "class weights");
  if (class_profile.size() != class_weight.size()) {
    throw ValidationError("one profile set per class is required");
  }
  for (std::size_t k = 0; k < class_profile.size(); ++k) {
    if (class_profile[k].size() != schema->num_vars()) {
      throw ValidationError("class " + std::to_string(k + 1) +
                            " must profile every schema variable");
    }
    for (std::size_t j = 0; j < class_profile[k].size(); ++j) {
      if (class_profile[k][j].size() != static_cast<std::size_t>(schema->var(j).num_levels)) {
        throw ValidationError("class " + std::to_string(k + 1) + " profile for '" +
                              schema->var(j).name + "' has the wrong length");
      }
      require_simplex(class_profile[k][j], "profile of '" + schema->var(j).name + "'");
    }
  }
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synthetic spec must be a JSON object");
  for (const char* field : {"schema", "class_weight", "class_profile"}) {
    if (!j.contains(field)) {
      throw ValidationError(std::string("synthetic spec is missing '") + field + "'");
    }
  }
  SyntheticSpec spec;
  spec.schema = std::make_shared<Schema>(Schema::from_json(j.at("schema")));
  spec.class_weight = j.at("class_weight").get<std::vector<double>>();
  spec.class_profile = j.at("class_profile").get<std::vector<std::vector<std::vector<double>>>>();
  if (j.contains("n")) spec.n = j.at("n").get<std::size_t>();
  if (j.contains("split_fraction")) spec.split_fraction = j.at("split_fraction").get<double>();
  spec.validate();
  return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
  return {{"schema", schema->to_json()},
          {"n", n},
          {"split_fraction", split_fraction},
          {"class_weight", class_weight},
          {"class_profile", class_profile}};
}

SyntheticSpec SyntheticSpec::builtin_default() {
  SyntheticSpec spec;
  spec.schema = std::make_shared<Schema>(std::vector<Variable>{
      {"gender", 2, Role::kA},
      {"age", 6, Role::kA},
      {"ebook", 2, Role::kB},
      {"hours", 3, Role::kBprime},
  });
  spec.n = 3566;
  spec.split_fraction = 0.5;
  // Two age groups, each split into two classes that share the group's
  // shared-variable profiles but couple the unique blocks in opposite
  // directions. Within a group the coupling is unidentifiable from the
  // surveys alone, so fusion without auxiliary rows degrades to conditional
  // independence, while auxiliary rows that add the age variable pin the
  // per-group coupling.
  spec.class_weight = {0.26, 0.24, 0.22, 0.28};
  spec.class_profile = {
      {
          {0.52, 0.48},
          {0.26, 0.24, 0.18, 0.14, 0.10, 0.08},
          {0.90, 0.10},
          {0.78, 0.15, 0.07},
      },
      {
          {0.52, 0.48},
          {0.26, 0.24, 0.18, 0.14, 0.10, 0.08},
          {0.18, 0.82},
          {0.10, 0.42, 0.48},
      },
      {
          {0.48, 0.52},
          {0.08, 0.10, 0.14, 0.18, 0.24, 0.26},
          {0.82, 0.18},
          {0.08, 0.64, 0.28},
      },
      {
          {0.48, 0.52},
          {0.08, 0.10, 0.14, 0.18, 0.24, 0.26},
          {0.10, 0.90},
          {0.04, 0.14, 0.82},
      },
  };
  spec.validate();
  return spec;
}

double SyntheticSpec::cell_probability(
    std::span<const std::pair<std::string, std::int32_t>> cells) const {
  std::vector<std::pair<std::size_t, std::int32_t>> resolved;
  resolved.reserve(cells.size());
  for (const auto& [name, level] : cells) {
    const std::size_t j = schema->index_of(name);
    if (level < 1 || level > schema->var(j).num_levels) {
      throw ValidationError("cell level out of range for '" + name + "'");
    }
    resolved.emplace_back(j, level);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < class_weight.size(); ++k) {
    double term = class_weight[k];
    for (const auto& [j, level] : resolved) {
      term *= class_profile[k][j][static_cast<std::size_t>(level - 1)];
    }
    total += term;
  }
  return total;
}

std::vector<double> SyntheticSpec::joint_table(std::span<const std::string> variables) const {
  std::vector<std::size_t> cols;
  std::vector<int> levels;
  for (const std::string& name : variables) {
    cols.push_back(schema->index_of(name));
    levels.push_back(schema->var(cols.back()).num_levels);
  }
  std::size_t cells = 1;
  for (int d : levels) cells *= static_cast<std::size_t>(d);
  std::vector<double> probs(cells);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    // Decode in the contingency-table order: first variable slowest.
    std::size_t rem = flat;
    std::vector<std::int32_t> codes(cols.size());
    for (std::size_t v = cols.size(); v-- > 0;) {
      codes[v] = static_cast<std::int32_t>(rem % static_cast<std::size_t>(levels[v])) + 1;
      rem /= static_cast<std::size_t>(levels[v]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < class_weight.size(); ++k) {
      double term = class_weight[k];
      for (std::size_t v = 0; v < cols.size(); ++v) {
        term *= class_profile[k][cols[v]][static_cast<std::size_t>(codes[v] - 1)];
      }
      total += term;
    }
    probs[flat] = total;
  }
  return probs;
}

std::vector<double> SyntheticSpec::conditional_table(
    const std::string& target, std::span<const std::pair<std::string, std::int32_t>> given) const {
  const std::size_t jt = schema->index_of(target);
  const int d = schema->var(jt).num_levels;
  std::vector<double> probs(static_cast<std::size_t>(d));
  std::vector<std::pair<std::string, std::int32_t>> cells(given.begin(), given.end());
  cells.emplace_back(target, 0);
  double total = 0.0;
  for (std::int32_t y = 1; y <= d; ++y) {
    cells.back().second = y;
    probs[static_cast<std::size_t>(y - 1)] = cell_probability(cells);
    total += probs[static_cast<std::size_t>(y - 1)];
  }
  if (!(total > 0.0)) {
    throw ValidationError("conditioning event has zero probability under the generator");
  }
  for (double& p : probs) p /= total;
  return probs;
}

Dataset draw_population(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Dataset out(spec.schema, spec.n, Provenance::kComplete);
  const std::size_t p = spec.schema->num_vars();
  for (std::size_t i = 0; i < spec.n; ++i) {
    rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kPopulation, 0, i));
    const std::size_t k = static_cast<std::size_t>(gen.categorical(spec.class_weight));
    for (std::size_t j = 0; j < p; ++j) {
      out.set_code(i, j, gen.categorical(spec.class_profile[k][j]) + 1);
    }
  }
  return out;
}

SplitResult split_and_mask(const Dataset& population, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw ValidationError("split fraction must lie strictly inside (0,1)");
  }
  const std::size_t n = population.n_rows();
  const std::size_t n1 =
      std::min(n - 1, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                   fraction * static_cast<double>(n)))));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kSplit));
  for (std::size_t i = 0; i < n1; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(gen.below(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n1));
  std::vector<std::size_t> second(order.begin() + static_cast<std::ptrdiff_t>(n1), order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());

  const Schema& schema = population.schema();
  const std::vector<std::size_t> b_cols = schema.role_columns(Role::kB);
  const std::vector<std::size_t> bp_cols = schema.role_columns(Role::kBprime);

  SplitResult split{Dataset(population.schema_ptr(), first.size(), Provenance::kD1),
                    Dataset(population.schema_ptr(), second.size(), Provenance::kD2),
                    std::move(first),
                    std::move(second)};
  for (std::size_t r = 0; r < split.d1_index.size(); ++r) {
    for (std::size_t j = 0; j < schema.num_vars(); ++j) {
      split.d1.set_code(r, j, population.code(split.d1_index[r], j));
    }
    for (std::size_t c : bp_cols) split.d1.set_code(r, c, kMissing);
  }
  for (std::size_t r = 0; r < split.d2_index.size(); ++r) {
    for (std::size_t j = 0; j < schema.num_vars(); ++j) {
      split.d2.set_code(r, j, population.code(split.d2_index[r], j));
    }
    for (std::size_t c : b_cols) split.d2.set_code(r, c, kMissing);
  }
  return split;
}

BiasDesign BiasDesign::builtin_default() {
  BiasDesign design;
  design.oversample = {{"gender", 2}, {"age", 5}};
  design.base_rate = 0.5;
  design.bprime_var = "hours";
  design.bprime_marginal = {0.70, 0.15, 0.15};
  design.b_var = "ebook";
  return design;
}

Dataset make_biased_glue(const Dataset& population, const SyntheticSpec& truth,
                         const BiasDesign& design, std::uint64_t seed) {
  const Schema& schema = population.schema();
  const std::size_t jbp = schema.index_of(design.bprime_var);
  const std::size_t jb = schema.index_of(design.b_var);
  if (schema.var(jbp).role != Role::kBprime || schema.var(jb).role != Role::kB) {
    throw ValidationError("bias design must redraw one B and one Bprime variable");
  }
  if (design.bprime_marginal.size() != static_cast<std::size_t>(schema.var(jbp).num_levels)) {
    throw ValidationError("bias marginal length does not match '" + design.bprime_var + "'");
  }
  require_simplex(design.bprime_marginal, "bias marginal");
  if (!(design.base_rate > 0.0) || design.base_rate > 1.0) {
    throw ValidationError("bias base rate must lie in (0,1]");
  }
  std::vector<std::pair<std::size_t, std::int32_t>> conditions;
  for (const BiasDesign::Condition& c : design.oversample) {
    conditions.emplace_back(schema.index_of(c.var), c.min_level);
  }

  // Empirical conditional of the B variable given (shared variables, B'),
  // tabulated from the complete population; generator fallback for empty
  // conditioning cells.
  std::vector<std::string> cond_names = role_names(schema, Role::kA);
  const std::vector<std::size_t> a_cols = schema.indices_of(cond_names);
  cond_names.push_back(design.bprime_var);
  cond_names.push_back(design.b_var);
  const ContingencyTable counts = tabulate(population, cond_names);
  const int db = schema.var(jb).num_levels;

  rng::Xoshiro256 select(rng::derive_stream(seed, rng::StreamPurpose::kBias, 0));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < population.n_rows(); ++i) {
    bool certain = false;
    for (const auto& [col, min_level] : conditions) {
      if (population.code(i, col) >= min_level) {
        certain = true;
        break;
      }
    }
    if (certain || select.u01() < design.base_rate) rows.push_back(i);
  }
  if (rows.empty()) throw ValidationError("bias selection kept no rows");

  Dataset glue(population.schema_ptr(), rows.size(), Provenance::kGlue);
  std::vector<std::int32_t> key(cond_names.size());
  std::vector<double> cond(static_cast<std::size_t>(db));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    for (std::size_t j = 0; j < schema.num_vars(); ++j) glue.set_code(r, j, population.code(i, j));
    rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kBias, 1, i));
    const std::int32_t new_bp =
        static_cast<std::int32_t>(gen.categorical(design.bprime_marginal)) + 1;
    glue.set_code(r, jbp, new_bp);

    for (std::size_t v = 0; v < a_cols.size(); ++v) key[v] = glue.code(r, a_cols[v]);
    key[a_cols.size()] = new_bp;
    double total = 0.0;
    for (std::int32_t y = 1; y <= db; ++y) {
      key[a_cols.size() + 1] = y;
      cond[static_cast<std::size_t>(y - 1)] = static_cast<double>(counts.count(
          counts.flat_index(key)));
      total += cond[static_cast<std::size_t>(y - 1)];
    }
    if (total > 0.0) {
      for (double& c : cond) c /= total;
    } else {
      std::vector<std::pair<std::string, std::int32_t>> given;
      for (std::size_t v = 0; v < a_cols.size(); ++v) {
        given.emplace_back(schema.var(a_cols[v]).name, glue.code(r, a_cols[v]));
      }
      given.emplace_back(design.bprime_var, new_bp);
      cond = truth.conditional_table(design.b_var, given);
    }
    glue.set_code(r, jb, static_cast<std::int32_t>(gen.categorical(cond)) + 1);
  }
  return glue;
}

const RichnessRung& RichnessStudy::rung(const std::string& label) const {
  for (const RichnessRung& r : rungs) {
    if (r.label == label) return r;
  }
  throw ValidationError("no study rung labeled '" + label + "'");
}

namespace {

struct FusedScore {
  double hellinger_mean = 0.0;
  double misclassified = 0.0;
};

FusedScore score_completions(std::span<const Dataset> completed,
                             std::span<const std::string> all_names,
                             const ContingencyTable& truth_counts) {
  FusedScore score;
  const std::vector<double> truth_probs = truth_counts.proportions();
  std::vector<ContingencyTable> tables;
  tables.reserve(completed.size());
  for (const Dataset& c : completed) {
    const Dataset fused = c.filter_source({Provenance::kD1, Provenance::kD2});
    ContingencyTable t = tabulate(fused, all_names);
    score.hellinger_mean += hellinger(t.proportions(), truth_probs);
    tables.push_back(std::move(t));
  }
  score.hellinger_mean /= static_cast<double>(completed.size());
  score.misclassified = misclassified_count(truth_counts, tables);
  return score;
}

}  // namespace

RichnessStudy run_richness_study(const SyntheticSpec& spec, std::span<const std::uint64_t> seeds,
                                 const Hyperparams& hp, const SamplerConfig& cfg) {
  spec.validate();
  if (seeds.empty()) throw ValidationError("richness study needs at least one seed");
  const Schema& schema = *spec.schema;
  schema.require_all_roles();
  const std::vector<std::string> a_names = role_names(schema, Role::kA);
  const std::vector<std::string> b_names = role_names(schema, Role::kB);
  const std::vector<std::string> bp_names = role_names(schema, Role::kBprime);
  std::vector<std::string> all_names;
  for (std::size_t j = 0; j < schema.num_vars(); ++j) all_names.push_back(schema.var(j).name);

  RichnessStudy study;
  study.seeds.assign(seeds.begin(), seeds.end());

  std::vector<std::string> base_kept = b_names;
  base_kept.insert(base_kept.end(), bp_names.begin(), bp_names.end());
  std::vector<std::vector<std::string>> ladder;
  ladder.push_back({});         // no glue
  ladder.push_back(base_kept);  // unseen blocks only
  for (const std::string& a : a_names) {
    std::vector<std::string> kept = base_kept;
    kept.push_back(a);
    ladder.push_back(std::move(kept));
  }
  if (a_names.size() > 1) {
    std::vector<std::string> kept = base_kept;
    kept.insert(kept.end(), a_names.begin(), a_names.end());
    ladder.push_back(std::move(kept));
  }

  for (const auto& kept : ladder) {
    RichnessRung rung;
    rung.kept = kept;
    rung.label = kept.empty() ? "no glue" : "glue {" + join(kept, ",") + "}";
    study.rungs.push_back(std::move(rung));
  }
  RichnessRung match_rung;
  match_rung.label = "exact matching";
  study.rungs.push_back(std::move(match_rung));

  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const Dataset population = draw_population(spec, seeds[s]);
    const SplitResult split = split_and_mask(population, spec.split_fraction, seeds[s]);
    const ContingencyTable truth_counts = tabulate(population, all_names);

    for (std::size_t r = 0; r < ladder.size(); ++r) {
      std::vector<Dataset> parts{split.d1, split.d2};
      if (!ladder[r].empty()) {
        GlueSpec gs;
        gs.variables_kept = ladder[r];
        gs.n_s = population.n_rows();
        gs.mode = GlueMode::kDuplicate;
        parts.push_back(make_duplicate_glue(population, gs, seeds[s]));
      }
      const Dataset combined = Dataset::concat(parts);
      SamplerConfig run_cfg = cfg;
      run_cfg.seed = rng::derive_stream(seeds[s], rng::StreamPurpose::kHarness, r);
      const ChainResult chain = run_chain(combined, hp, run_cfg);
      const FusedScore score =
          score_completions(chain.completed, all_names, truth_counts);
      study.rungs[r].per_seed_hellinger.push_back(score.hellinger_mean);
      study.rungs[r].per_seed_misclassified.push_back(score.misclassified);
    }

    // Repeated matchings, averaged, to play the role of the m completions.
    constexpr std::size_t kMatchReps = 10;
    std::vector<Dataset> matched;
    matched.reserve(kMatchReps);
    MatchOptions mo;
    mo.key = a_names;
    for (std::size_t rep = 0; rep < kMatchReps; ++rep) {
      MatchResult mr = exact_match_fuse(
          split.d1, split.d2, mo,
          rng::derive_stream(seeds[s], rng::StreamPurpose::kHarness, 1000 + rep));
      matched.push_back(Dataset::concat(std::vector<Dataset>{std::move(mr.d1_completed),
                                                             std::move(mr.d2_completed)}));
    }
    const FusedScore score = score_completions(matched, all_names, truth_counts);
    RichnessRung& rung = study.rungs.back();
    rung.per_seed_hellinger.push_back(score.hellinger_mean);
    rung.per_seed_misclassified.push_back(score.misclassified);
  }

  for (RichnessRung& rung : study.rungs) {
    rung.mean_hellinger = numeric::mean(rung.per_seed_hellinger);
    rung.mean_misclassified = numeric::mean(rung.per_seed_misclassified);
  }
  return study;
}

nlohmann::json RichnessStudy::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const RichnessRung& r : rungs) {
    rows.push_back({{"label", r.label},
                    {"kept", r.kept},
                    {"per_seed_hellinger", r.per_seed_hellinger},
                    {"per_seed_misclassified", r.per_seed_misclassified},
                    {"mean_hellinger", r.mean_hellinger},
                    {"mean_misclassified", r.mean_misclassified}});
  }
  return {{"seeds", seeds}, {"rungs", rows}};
}

std::string RichnessStudy::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(34) << "configuration" << std::setw(12) << "hellinger"
      << "misclassified\n";
  for (const RichnessRung& r : rungs) {
    out << std::left << std::setw(34) << r.label << std::setw(12) << r.mean_hellinger
        << std::setprecision(1) << r.mean_misclassified << std::setprecision(4) << "\n";
  }
  return out.str();
}

SizeStudy run_size_study(const SyntheticSpec& spec, std::span<const std::size_t> n_s_ladder,
                         std::span<const std::uint64_t> seeds, const Hyperparams& hp,
                         const SamplerConfig& cfg) {
  spec.validate();
  if (seeds.empty()) throw ValidationError("size study needs at least one seed");
  if (n_s_ladder.empty()) throw ValidationError("size study needs at least one glue size");
  const Schema& schema = *spec.schema;
  schema.require_all_roles();
  const std::vector<std::string> a_names = role_names(schema, Role::kA);
  const std::vector<std::string> b_names = role_names(schema, Role::kB);
  const std::vector<std::string> bp_names = role_names(schema, Role::kBprime);

  SizeStudy study;
  study.seeds.assign(seeds.begin(), seeds.end());
  study.b_var = b_names.front();
  study.bprime_var = bp_names.front();
  const int db = schema.var(schema.index_of(study.b_var)).num_levels;
  const int dbp = schema.var(schema.index_of(study.bprime_var)).num_levels;

  std::vector<std::string> full_kept = b_names;
  full_kept.insert(full_kept.end(), bp_names.begin(), bp_names.end());
  full_kept.insert(full_kept.end(), a_names.begin(), a_names.end());

  for (const std::size_t n_s : n_s_ladder) {
    SizeRung rung;
    rung.n_s = n_s;
    for (std::int32_t j = 1; j <= db; ++j) {
      for (std::int32_t k = 1; k <= dbp; ++k) {
        SizeCell cell;
        cell.b_level = j;
        cell.bprime_level = k;
        rung.cells.push_back(std::move(cell));
      }
    }
    study.rungs.push_back(std::move(rung));
  }

  const std::vector<std::string> cell_vars{study.b_var, study.bprime_var};
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const Dataset population = draw_population(spec, seeds[s]);
    const ContingencyTable pop_table = tabulate(population, cell_vars);
    const std::vector<double> pop_probs = pop_table.proportions();
    const SplitResult split = split_and_mask(population, spec.split_fraction, seeds[s]);
    for (std::size_t r = 0; r < study.rungs.size(); ++r) {
      SizeRung& rung = study.rungs[r];
      std::vector<Dataset> parts{split.d1, split.d2};
      if (rung.n_s > 0) {
        GlueSpec gs;
        gs.variables_kept = full_kept;
        gs.n_s = rung.n_s;
        gs.mode = GlueMode::kDuplicate;
        parts.push_back(make_duplicate_glue(population, gs, seeds[s]));
      }
      const Dataset combined = Dataset::concat(parts);
      SamplerConfig run_cfg = cfg;
      run_cfg.keep_param_draws = true;
      run_cfg.seed = rng::derive_stream(seeds[s], rng::StreamPurpose::kHarness, 2000 + r);
      const ChainResult chain = run_chain(combined, hp, run_cfg);
      for (SizeCell& cell : rung.cells) {
        const std::vector<std::pair<std::string, std::int32_t>> assign = {
            {study.b_var, cell.b_level}, {study.bprime_var, cell.bprime_level}};
        const IntervalEstimate est = joint_probability(chain.summary, schema, assign);
        const std::array<std::int32_t, 2> codes{cell.b_level, cell.bprime_level};
        const double truth = pop_probs[pop_table.flat_index(codes)];
        cell.per_seed_truth.push_back(truth);
        cell.per_seed_mean.push_back(est.mean);
        cell.per_seed_width.push_back(est.upper - est.lower);
        cell.per_seed_covered.push_back(truth >= est.lower && truth <= est.upper);
      }
    }
  }
  for (SizeRung& rung : study.rungs) {
    for (SizeCell& cell : rung.cells) cell.truth = numeric::mean(cell.per_seed_truth);
  }
  return study;
}

nlohmann::json SizeStudy::to_json() const {
  nlohmann::json rungs_json = nlohmann::json::array();
  for (const SizeRung& r : rungs) {
    nlohmann::json cells = nlohmann::json::array();
    for (const SizeCell& c : r.cells) {
      cells.push_back({{"b_level", c.b_level},
                       {"bprime_level", c.bprime_level},
                       {"truth", c.truth},
                       {"per_seed_truth", c.per_seed_truth},
                       {"per_seed_mean", c.per_seed_mean},
                       {"per_seed_width", c.per_seed_width},
                       {"per_seed_covered", c.per_seed_covered}});
    }
    rungs_json.push_back({{"n_s", r.n_s}, {"cells", cells}});
  }
  return {{"seeds", seeds}, {"b_var", b_var}, {"bprime_var", bprime_var}, {"rungs", rungs_json}};
}

std::string SizeStudy::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  for (const SizeRung& r : rungs) {
    out << "glue size " << r.n_s << "\n";
    out << "  cell            truth   mean    width   covered\n";
    for (const SizeCell& c : r.cells) {
      double mean_of_means = numeric::mean(c.per_seed_mean);
      double mean_width = numeric::mean(c.per_seed_width);
      std::size_t covered = 0;
      for (const bool b : c.per_seed_covered) covered += b;
      out << "  (" << b_var << "=" << c.b_level << "," << bprime_var << "=" << c.bprime_level
          << ")  " << c.truth << "  " << mean_of_means << "  " << mean_width << "  " << covered
          << "/" << c.per_seed_covered.size() << "\n";
    }
  }
  return out.str();
}

BiasStudy run_bias_study(const SyntheticSpec& spec, const BiasDesign& design, std::uint64_t seed,
                         const Hyperparams& hp, const SamplerConfig& cfg) {
  spec.validate();
  const Schema& schema = *spec.schema;
  schema.require_all_roles();
  const Dataset population = draw_population(spec, seed);
  const SplitResult split = split_and_mask(population, spec.split_fraction, seed);
  const Dataset glue = make_biased_glue(
      population, spec, design, rng::derive_stream(seed, rng::StreamPurpose::kHarness, 7));

  BiasStudy study;
  const std::vector<std::string> b_names = role_names(schema, Role::kB);
  const std::vector<std::string> bp_names = role_names(schema, Role::kBprime);

  SamplerConfig ccfg = cfg;
  ccfg.seed = rng::derive_stream(seed, rng::StreamPurpose::kHarness, 8);
  const Dataset completed_b =
      construct_glue(glue, split.d2, ConditionalDirection::kBGivenABprime, hp, ccfg);
  study.b_direction = representativeness_diagnostic(completed_b, split.d1, b_names);

  ccfg.seed = rng::derive_stream(seed, rng::StreamPurpose::kHarness, 9);
  const Dataset completed_bp =
      construct_glue(glue, split.d1, ConditionalDirection::kBprimeGivenAB, hp, ccfg);
  study.bprime_direction = representativeness_diagnostic(completed_bp, split.d2, bp_names);
  return study;
}

nlohmann::json BiasStudy::to_json() const {
  return {{"b_direction", b_direction.to_json()},
          {"bprime_direction", bprime_direction.to_json()}};
}

std::string BiasStudy::to_text() const {
  std::ostringstream out;
  out << "direction: impute B from P(B | shared, B')\n"
      << b_direction.to_text() << "\n"
      << "direction: impute B' from P(B' | shared, B)\n"
      << bprime_direction.to_text();
  return out.str();
}

}  // namespace catfuse

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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "catfuse/dataset.hpp"
#include "catfuse/glue.hpp"
#include "catfuse/model.hpp"

namespace catfuse {

// Ground-truth generator: a finite mixture of per-variable level
// distributions, from which complete populations are drawn and against which
// fused estimates are scored.
struct SyntheticSpec {
  std::shared_ptr<const Schema> schema;
  std::vector<double> class_weight;
  // class -> variable (schema order) -> level probabilities.
  std::vector<std::vector<std::vector<double>>> class_profile;
  std::size_t n = 3566;
  double split_fraction = 0.5;

  void validate() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  // The generator shipped as the zero-argument simulation target.
  static SyntheticSpec builtin_default();

  // Exact cell probability for an assignment over any variable subset.
  double cell_probability(std::span<const std::pair<std::string, std::int32_t>> cells) const;
  // Exact probabilities over the full cross-product of the named variables,
  // in the contingency-table cell order.
  std::vector<double> joint_table(std::span<const std::string> variables) const;
  // Exact conditional P(target = y | given), normalized over target levels.
  std::vector<double> conditional_table(
      const std::string& target,
      std::span<const std::pair<std::string, std::int32_t>> given) const;
};

// Complete population of spec.n rows.
Dataset draw_population(const SyntheticSpec& spec, std::uint64_t seed);

struct SplitResult {
  Dataset d1;  // holds shared and B columns, B' removed
  Dataset d2;  // holds shared and B' columns, B removed
  std::vector<std::size_t> d1_index;  // population row behind each d1 row
  std::vector<std::size_t> d2_index;
};

// Random split of a complete population into the two survey files, masking
// each side's unseen block.
SplitResult split_and_mask(const Dataset& population, double fraction, std::uint64_t seed);

// Selection bias plus block redraws, for exercising the nonrepresentative
// glue workflow: rows matching any oversample condition always enter, the
// rest enter at base_rate; the listed B' variable is then redrawn from a
// fixed marginal and the listed B variable from the population's empirical
// conditional given (shared variables, new B').
struct BiasDesign {
  struct Condition {
    std::string var;
    std::int32_t min_level = 1;  // row qualifies when code >= min_level
  };
  std::vector<Condition> oversample;
  double base_rate = 0.5;
  std::string bprime_var;
  std::vector<double> bprime_marginal;
  std::string b_var;

  static BiasDesign builtin_default();
};

Dataset make_biased_glue(const Dataset& population, const SyntheticSpec& truth,
                         const BiasDesign& design, std::uint64_t seed);

// One rung of the glue-richness ladder.
struct RichnessRung {
  std::string label;
  std::vector<std::string> kept;  // empty for the no-glue and matching rungs
  std::vector<double> per_seed_hellinger;
  std::vector<double> per_seed_misclassified;
  double mean_hellinger = 0.0;
  double mean_misclassified = 0.0;
};

struct RichnessStudy {
  std::vector<std::uint64_t> seeds;
  std::vector<RichnessRung> rungs;  // none, glue subsets, then matching

  const RichnessRung& rung(const std::string& label) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Fuses the default ladder of glue subsets plus the matching baseline over
// the given seeds and scores each against the drawn population's joint table.
RichnessStudy run_richness_study(const SyntheticSpec& spec, std::span<const std::uint64_t> seeds,
                                 const Hyperparams& hp, const SamplerConfig& cfg);

struct SizeCell {
  std::int32_t b_level = 0;
  std::int32_t bprime_level = 0;
  double truth = 0.0;  // mean over seeds of the drawn population's cell proportion
  std::vector<double> per_seed_truth;
  std::vector<double> per_seed_mean;
  std::vector<double> per_seed_width;
  std::vector<bool> per_seed_covered;
};

struct SizeRung {
  std::size_t n_s = 0;
  std::vector<SizeCell> cells;  // all (B level, B' level) pairs
};

struct SizeStudy {
  std::vector<std::uint64_t> seeds;
  std::string b_var;
  std::string bprime_var;
  std::vector<SizeRung> rungs;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Full-richness glue at each size in n_s_ladder (0 means no glue); posterior
// mean, equal-tailed 95% interval width, and truth coverage per joint cell
// of the first B and first B' variable.
SizeStudy run_size_study(const SyntheticSpec& spec, std::span<const std::size_t> n_s_ladder,
                         std::span<const std::uint64_t> seeds, const Hyperparams& hp,
                         const SamplerConfig& cfg);

struct BiasStudy {
  DiagnosticReport b_direction;       // completing B from P(B | shared, B')
  DiagnosticReport bprime_direction;  // completing B' from P(B' | shared, B)

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Builds biased glue, constructs completion datasets in both directions, and
// compares each imputed block's marginals against the survey that observes
// that block.
BiasStudy run_bias_study(const SyntheticSpec& spec, const BiasDesign& design,
                         std::uint64_t seed, const Hyperparams& hp, const SamplerConfig& cfg);

}  // namespace catfuse

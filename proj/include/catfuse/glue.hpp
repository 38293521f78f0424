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
#include <vector>

#include <json.hpp>

#include "catfuse/dataset.hpp"
#include "catfuse/model.hpp"

namespace catfuse {

enum class GlueMode { kAppendRaw, kDuplicate, kConstructFromConditional };
GlueMode glue_mode_from_string(const std::string& s);
std::string to_string(GlueMode mode);

// Which block the constructed rows get sampled for: the conditional of B
// given (A, B') uses donors observing (A, B'), and vice versa.
enum class ConditionalDirection { kBGivenABprime, kBprimeGivenAB };
ConditionalDirection direction_from_string(const std::string& s);
std::string to_string(ConditionalDirection d);

struct GlueSpec {
  std::vector<std::string> variables_kept;
  std::size_t n_s = 0;
  GlueMode mode = GlueMode::kDuplicate;
  ConditionalDirection direction = ConditionalDirection::kBGivenABprime;

  // variables_kept must exist, cover at least one B and one Bprime variable,
  // and n_s must be positive.
  void validate(const Schema& schema) const;
};

// Auxiliary rows cut from a jointly observed source: keeps variables_kept,
// blanks everything else, and sizes the result to n_s (all rows in order
// when n_s equals the usable-row count; a subsample without replacement when
// smaller; draws with replacement when larger).
Dataset make_duplicate_glue(const Dataset& source, const GlueSpec& spec, std::uint64_t seed);

// APPEND_RAW: all source rows in order, masked to variables_kept.
Dataset make_append_glue(const Dataset& source, const GlueSpec& spec);

// Two-step construction for auxiliary sources that are trustworthy only
// conditionally: fits the latent class model to glue_raw alone, then
// replicates donor rows' observed block and draws the complementary block
// from the fitted conditional (class draw given the observed columns, then
// level draws from that class). n_out = 0 means glue_raw's row count.
Dataset construct_glue(const Dataset& glue_raw, const Dataset& donors,
                       ConditionalDirection direction, const Hyperparams& hp,
                       const SamplerConfig& cfg, std::size_t n_out = 0);

struct VariableComparison {
  std::string name;
  std::vector<double> sampled;    // level shares in the constructed data
  std::vector<double> reference;  // level shares in the reference data
  double max_abs_diff = 0.0;
};

struct DiagnosticReport {
  std::vector<VariableComparison> variables;
  double max_abs_diff = 0.0;
  double threshold = 0.05;
  bool pass = true;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Compares empirical level distributions of the named variables between a
// constructed dataset and a reference; PASS when the largest absolute
// difference stays at or under the threshold.
DiagnosticReport representativeness_diagnostic(const Dataset& constructed,
                                               const Dataset& reference,
                                               std::span<const std::string> variables,
                                               double threshold = 0.05);

}  // namespace catfuse

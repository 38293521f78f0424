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
#include <memory>
#include <span>
#include <vector>

#include "catfuse/schema.hpp"

namespace catfuse {

// How row-parallel kernels execute. kAuto picks kParallel when built with
// OpenMP and more than one thread is available.
enum class Exec { kAuto, kSerial, kParallel };

struct Hyperparams {
  int num_classes = 30;
  double a_alpha = 0.5;
  double b_alpha = 0.5;
  // Per-variable Dirichlet concentrations; empty means all ones.
  std::vector<std::vector<double>> dirichlet_a;

  void validate(const Schema& schema) const;
  // Concentrations flattened in schema order, defaults filled in.
  std::vector<double> flat_dirichlet_a(const Schema& schema) const;
};

struct SamplerConfig {
  std::size_t burn_in = 5000;
  std::size_t n_iterations = 30000;
  std::size_t thin = 500;
  std::uint64_t seed = 0;
  std::size_t m = 50;
  bool impute_glue = false;
  // Store pi and phi at every emission sweep (for posterior functionals).
  bool keep_param_draws = false;
  Exec exec = Exec::kAuto;

  void validate() const;
  // Sweeps run in total; emission continues past n_iterations when
  // burn_in + m*thin demands it.
  std::size_t total_sweeps() const;
  // 1-based sweep indices at which completed datasets are emitted.
  std::vector<std::size_t> emission_sweeps() const;
};

// Flattened addressing for the per-class level-probability array: variable j
// occupies the half-open offset range [offset[j], offset[j] + levels[j]).
struct LevelLayout {
  std::vector<std::size_t> offset;
  std::vector<int> levels;
  std::size_t total_levels = 0;

  LevelLayout() = default;
  explicit LevelLayout(const Schema& schema);

  std::size_t num_vars() const { return levels.size(); }
};

struct ModelState {
  std::shared_ptr<const Schema> schema;
  LevelLayout layout;
  int num_classes = 0;

  // 1-based class allocations, one per data row.
  std::vector<std::int32_t> z;
  // profile[l * layout.total_levels + layout.offset[j] + (code-1)].
  std::vector<double> profile;
  // Stick proportions, last entry pinned at 1.
  std::vector<double> stick;
  // Mixture weights derived from the stick proportions.
  std::vector<double> weight;
  double concentration = 1.0;

  double profile_at(int cls, std::size_t var, std::int32_t code) const {
    return profile[static_cast<std::size_t>(cls) * layout.total_levels + layout.offset[var] +
                   static_cast<std::size_t>(code - 1)];
  }

  // Simplex and range checks at 1e-12; throws NumericalError on violation.
  void check_invariants() const;
};

struct IterateRecord {
  std::size_t sweep = 0;  // 1-based
  double alpha = 0.0;
  int n_star = 0;
};

struct PosteriorSummary {
  std::size_t burn_in = 0;
  std::size_t n_sweeps = 0;
  int num_classes = 0;
  // One record per post-burn-in sweep.
  std::vector<IterateRecord> trace;
  std::vector<std::size_t> emission_sweep;
  // Parameter draws captured at emission sweeps when requested.
  std::vector<std::vector<double>> weight_draws;
  std::vector<std::vector<double>> profile_draws;

  // JSON-lines export: one record per retained iterate, with the mixture
  // weights attached on emission sweeps when parameter draws were kept.
  void save_jsonl(const std::filesystem::path& path) const;
};

}  // namespace catfuse

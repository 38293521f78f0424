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

#include "catfuse/dataset.hpp"
#include "catfuse/kernels.hpp"
#include "catfuse/model.hpp"

namespace catfuse {

// Latent class mixture of per-variable multinomials with a truncated
// stick-breaking prior, fit by Gibbs sampling. Missing cells never enter the
// complete conditionals; they are filled in only when a completed dataset is
// emitted.

ModelState init_state(const Dataset& data, const Hyperparams& hp, std::uint64_t seed);

// One draw of every row's class allocation given weights and profiles.
void update_allocations(ModelState& state, const Dataset& data, std::uint64_t seed,
                        std::uint64_t sweep, Exec exec);

// Class-and-variable level probabilities from their conjugate posterior given
// the allocations and observed cells.
void update_class_profiles(ModelState& state, const Dataset& data, const Hyperparams& hp,
                           std::uint64_t seed, std::uint64_t sweep, Exec exec);

// Stick proportions from their Beta conditionals, then the mixture weights
// by the stick-breaking recursion.
void update_stick_weights(ModelState& state, std::uint64_t seed, std::uint64_t sweep);

// Concentration parameter from its Gamma conditional.
void update_concentration(ModelState& state, const Hyperparams& hp, std::uint64_t seed,
                          std::uint64_t sweep);

// A completed copy of `data`: missing survey cells drawn from the allocated
// class's level probabilities; glue rows completed only when impute_glue.
Dataset impute_missing(const ModelState& state, const Dataset& data, std::uint64_t seed,
                       std::uint64_t sweep, bool impute_glue, Exec exec);

struct ChainResult {
  std::vector<Dataset> completed;
  PosteriorSummary summary;
  // Parameters after the last sweep, usable as a single posterior draw.
  ModelState final_state;
};

// Full Gibbs run: init, then sweeps of allocations, profiles, sticks,
// concentration; emits completed datasets on the configured schedule.
ChainResult run_chain(const Dataset& data, const Hyperparams& hp, const SamplerConfig& cfg);

// Probability of a cell assignment (variable name, 1-based level) over any
// variable subset, under one parameter draw: sum_l w_l prod_j profile.
double joint_probability(const ModelState& state,
                         std::span<const std::pair<std::string, std::int32_t>> cells);

struct IntervalEstimate {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> draws;
};

// The same probability averaged over stored parameter draws, with an
// equal-tailed 95% interval.
IntervalEstimate joint_probability(const PosteriorSummary& summary, const Schema& schema,
                                   std::span<const std::pair<std::string, std::int32_t>> cells);

struct OccupancyVerdict {
  bool warn = false;
  double mass_near_limit = 0.0;  // share of iterates with n_star >= N-2
  int max_n_star = 0;
};

// Flags truncation pressure: WARN when more than 5% of retained iterates
// occupy N-2 classes or more.
OccupancyVerdict occupancy_check(const PosteriorSummary& summary, int num_classes);

// Pieces exposed for direct verification.
std::vector<double> stick_to_weights(std::span<const double> stick);
std::pair<double, double> concentration_posterior(const Hyperparams& hp, int num_classes,
                                                  double last_weight);
std::pair<double, double> stick_beta_params(std::span<const std::int64_t> class_size,
                                            double concentration, std::size_t h);
// Direct-space allocation probabilities for one row (reference for the
// log-space kernel).
std::vector<double> allocation_probabilities(const ModelState& state, const Dataset& data,
                                             std::size_t row);

}  // namespace catfuse

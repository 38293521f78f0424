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

#include "catfuse/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "catfuse/errors.hpp"
#include "catfuse/numeric.hpp"
#include "catfuse/rng.hpp"

namespace catfuse {

namespace {

constexpr double kWeightFloor = 1e-300;

std::vector<double> log_vector(std::span<const double> xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = xs[i] > 0.0 ? std::log(xs[i]) : numeric::kNegInf;
  }
  return out;
}

int count_occupied(std::span<const std::int64_t> class_size) {
  int k = 0;
  for (std::int64_t s : class_size) k += (s > 0);
  return k;
}

}  // namespace

std::vector<double> stick_to_weights(std::span<const double> stick) {
  std::vector<double> w(stick.size());
  double remaining = 1.0;
  for (std::size_t h = 0; h < stick.size(); ++h) {
    w[h] = stick[h] * remaining;
    remaining *= 1.0 - stick[h];
  }
  return w;
}

std::pair<double, double> concentration_posterior(const Hyperparams& hp, int num_classes,
                                                  double last_weight) {
  const double shape = static_cast<double>(num_classes) + hp.a_alpha - 1.0;
  const double rate = hp.b_alpha - std::log(std::max(last_weight, kWeightFloor));
  return {shape, rate};
}

std::pair<double, double> stick_beta_params(std::span<const std::int64_t> class_size,
                                            double concentration, std::size_t h) {
  double above = 0.0;
  for (std::size_t j = h + 1; j < class_size.size(); ++j) {
    above += static_cast<double>(class_size[j]);
  }
  return {static_cast<double>(class_size[h]) + 1.0, concentration + above};
}

ModelState init_state(const Dataset& data, const Hyperparams& hp, std::uint64_t seed) {
  hp.validate(data.schema());
  ModelState state;
  state.schema = data.schema_ptr();
  state.layout = LevelLayout(data.schema());
  state.num_classes = hp.num_classes;
  const std::size_t N = static_cast<std::size_t>(hp.num_classes);
  const std::size_t L = state.layout.total_levels;

  rng::Xoshiro256 alloc_gen(rng::derive_stream(seed, rng::StreamPurpose::kInitAlloc));
  state.z.resize(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    state.z[i] = static_cast<std::int32_t>(alloc_gen.below(N)) + 1;
  }

  const std::vector<double> flat_a = hp.flat_dirichlet_a(data.schema());
  state.profile.resize(N * L);
  for (std::size_t l = 0; l < N; ++l) {
    rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kInitProfile, l));
    for (std::size_t j = 0; j < state.layout.num_vars(); ++j) {
      const std::size_t off = state.layout.offset[j];
      const std::size_t d = static_cast<std::size_t>(state.layout.levels[j]);
      gen.dirichlet(std::span<const double>(flat_a.data() + off, d),
                    std::span<double>(state.profile.data() + l * L + off, d));
    }
  }

  const double alpha0 = hp.a_alpha / hp.b_alpha;
  rng::Xoshiro256 stick_gen(rng::derive_stream(seed, rng::StreamPurpose::kInitStick));
  state.stick.assign(N, 1.0);
  for (std::size_t h = 0; h + 1 < N; ++h) {
    state.stick[h] = stick_gen.beta(1.0, alpha0);
  }
  state.weight = stick_to_weights(state.stick);
  state.concentration = alpha0;
  state.check_invariants();
  return state;
}

void update_allocations(ModelState& state, const Dataset& data, std::uint64_t seed,
                        std::uint64_t sweep, Exec exec) {
  const std::vector<double> log_weight = log_vector(state.weight);
  const std::vector<double> lpt = build_log_profile_t(state);
  allocation_kernel(data, state.layout, state.num_classes, log_weight, lpt, seed, sweep,
                    state.z, exec);
}

void update_class_profiles(ModelState& state, const Dataset& data, const Hyperparams& hp,
                           std::uint64_t seed, std::uint64_t sweep, Exec exec) {
  const std::size_t N = static_cast<std::size_t>(state.num_classes);
  const std::size_t L = state.layout.total_levels;
  std::vector<std::int64_t> level_count(N * L);
  std::vector<std::int64_t> class_size(N);
  count_kernel(data, state.layout, state.num_classes, state.z, level_count, class_size, exec);

  const std::vector<double> flat_a = hp.flat_dirichlet_a(data.schema());
  std::vector<double> conc(L);
  for (std::size_t l = 0; l < N; ++l) {
    rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kProfileSweep, sweep, l));
    const std::int64_t* counts = level_count.data() + l * L;
    for (std::size_t e = 0; e < L; ++e) {
      conc[e] = flat_a[e] + static_cast<double>(counts[e]);
    }
    for (std::size_t j = 0; j < state.layout.num_vars(); ++j) {
      const std::size_t off = state.layout.offset[j];
      const std::size_t d = static_cast<std::size_t>(state.layout.levels[j]);
      gen.dirichlet(std::span<const double>(conc.data() + off, d),
                    std::span<double>(state.profile.data() + l * L + off, d));
    }
  }
}

void update_stick_weights(ModelState& state, std::uint64_t seed, std::uint64_t sweep) {
  const std::size_t N = static_cast<std::size_t>(state.num_classes);
  std::vector<std::int64_t> class_size(N, 0);
  for (std::int32_t zi : state.z) ++class_size[static_cast<std::size_t>(zi - 1)];

  rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kStickSweep, sweep));
  for (std::size_t h = 0; h + 1 < N; ++h) {
    const auto [a, b] = stick_beta_params(class_size, state.concentration, h);
    state.stick[h] = gen.beta(a, b);
  }
  state.stick[N - 1] = 1.0;
  state.weight = stick_to_weights(state.stick);
}

void update_concentration(ModelState& state, const Hyperparams& hp, std::uint64_t seed,
                          std::uint64_t sweep) {
  if (state.num_classes == 1) {
    // Degenerate mixture: the concentration never enters any conditional, so
    // hold it at the prior mean.
    state.concentration = hp.a_alpha / hp.b_alpha;
    return;
  }
  const auto [shape, rate] =
      concentration_posterior(hp, state.num_classes, state.weight.back());
  rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kConcentrationSweep, sweep));
  state.concentration = gen.gamma(shape, rate);
}

Dataset impute_missing(const ModelState& state, const Dataset& data, std::uint64_t seed,
                       std::uint64_t sweep, bool impute_glue, Exec exec) {
  Dataset out = data;
  impute_kernel(state, out, seed, sweep, impute_glue, exec);
  return out;
}

ChainResult run_chain(const Dataset& data, const Hyperparams& hp, const SamplerConfig& cfg) {
  cfg.validate();
  hp.validate(data.schema());
  data.validate(false);

  ChainResult result;
  ModelState state = init_state(data, hp, cfg.seed);

  const std::size_t total = cfg.total_sweeps();
  const std::vector<std::size_t> emissions = cfg.emission_sweeps();
  std::size_t next_emit = 0;

  result.summary.burn_in = cfg.burn_in;
  result.summary.n_sweeps = total;
  result.summary.num_classes = hp.num_classes;
  result.summary.trace.reserve(total > cfg.burn_in ? total - cfg.burn_in : 0);
  result.completed.reserve(cfg.m);

  std::vector<std::int64_t> class_size(static_cast<std::size_t>(hp.num_classes));
  for (std::size_t sweep = 1; sweep <= total; ++sweep) {
    update_allocations(state, data, cfg.seed, sweep, cfg.exec);
    update_class_profiles(state, data, hp, cfg.seed, sweep, cfg.exec);
    update_stick_weights(state, cfg.seed, sweep);
    update_concentration(state, hp, cfg.seed, sweep);
    state.check_invariants();

    if (sweep > cfg.burn_in) {
      std::fill(class_size.begin(), class_size.end(), 0);
      for (std::int32_t zi : state.z) ++class_size[static_cast<std::size_t>(zi - 1)];
      IterateRecord rec;
      rec.sweep = sweep;
      rec.alpha = state.concentration;
      rec.n_star = count_occupied(class_size);
      result.summary.trace.push_back(rec);
    }

    if (next_emit < emissions.size() && sweep == emissions[next_emit]) {
      result.completed.push_back(
          impute_missing(state, data, cfg.seed, sweep, cfg.impute_glue, cfg.exec));
      result.summary.emission_sweep.push_back(sweep);
      if (cfg.keep_param_draws) {
        result.summary.weight_draws.push_back(state.weight);
        result.summary.profile_draws.push_back(state.profile);
      }
      ++next_emit;
    }
  }
  result.final_state = std::move(state);
  return result;
}

double joint_probability(const ModelState& state,
                         std::span<const std::pair<std::string, std::int32_t>> cells) {
  const Schema& schema = *state.schema;
  std::vector<std::pair<std::size_t, std::int32_t>> resolved;
  resolved.reserve(cells.size());
  for (const auto& [name, level] : cells) {
    const std::size_t j = schema.index_of(name);
    if (level < 1 || level > schema.var(j).num_levels) {
      throw ValidationError("joint_probability: level " + std::to_string(level) +
                            " out of range for '" + name + "'");
    }
    resolved.emplace_back(j, level);
  }
  double total = 0.0;
  for (int l = 0; l < state.num_classes; ++l) {
    double term = state.weight[static_cast<std::size_t>(l)];
    for (const auto& [j, level] : resolved) {
      term *= state.profile_at(l, j, level);
    }
    total += term;
  }
  return total;
}

IntervalEstimate joint_probability(const PosteriorSummary& summary, const Schema& schema,
                                   std::span<const std::pair<std::string, std::int32_t>> cells) {
  if (summary.weight_draws.empty() ||
      summary.weight_draws.size() != summary.profile_draws.size()) {
    throw ValidationError("posterior summary holds no parameter draws");
  }
  ModelState probe;
  probe.schema = std::shared_ptr<const Schema>(&schema, [](const Schema*) {});
  probe.layout = LevelLayout(schema);
  probe.num_classes = summary.num_classes;

  IntervalEstimate est;
  est.draws.reserve(summary.weight_draws.size());
  for (std::size_t k = 0; k < summary.weight_draws.size(); ++k) {
    probe.weight = summary.weight_draws[k];
    probe.profile = summary.profile_draws[k];
    est.draws.push_back(joint_probability(probe, cells));
  }
  est.mean = numeric::mean(est.draws);
  est.lower = numeric::quantile(est.draws, 0.025);
  est.upper = numeric::quantile(est.draws, 0.975);
  return est;
}

OccupancyVerdict occupancy_check(const PosteriorSummary& summary, int num_classes) {
  if (summary.trace.empty()) {
    throw ValidationError("occupancy check needs a non-empty iterate trace");
  }
  OccupancyVerdict v;
  std::size_t near = 0;
  for (const IterateRecord& r : summary.trace) {
    v.max_n_star = std::max(v.max_n_star, r.n_star);
    if (r.n_star >= num_classes - 2) ++near;
  }
  v.mass_near_limit = static_cast<double>(near) / static_cast<double>(summary.trace.size());
  v.warn = v.mass_near_limit > 0.05;
  return v;
}

std::vector<double> allocation_probabilities(const ModelState& state, const Dataset& data,
                                             std::size_t row) {
  const std::size_t N = static_cast<std::size_t>(state.num_classes);
  std::vector<double> w(N);
  for (std::size_t l = 0; l < N; ++l) {
    double term = state.weight[l];
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
      const std::int32_t y = data.code(row, j);
      if (y == kMissing) continue;
      term *= state.profile_at(static_cast<int>(l), j, y);
    }
    w[l] = term;
  }
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) {
    throw NumericalError("allocation probabilities underflowed; log-space path required");
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace catfuse

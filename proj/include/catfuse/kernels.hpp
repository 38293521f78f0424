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

#include "catfuse/dataset.hpp"
#include "catfuse/model.hpp"

// Row-parallel sweep kernels. Each row draws from its own derived RNG stream,
// so the serial and OpenMP paths produce bit-identical results; the serial
// path is kept as the reference implementation for tests and benchmarks.

namespace catfuse {

bool openmp_enabled();
Exec resolve_exec(Exec exec);

// Transposed per-level log profiles: entry (offset[j] + code - 1) * N + class.
// Zero profile entries map to -infinity.
std::vector<double> build_log_profile_t(const ModelState& state);

// Resamples every row's class allocation from
//   p(z_i = h) proportional to weight_h * prod_{observed j} profile[h][j][y_ij],
// computed in log space with max subtraction. Rows observing nothing fall
// back to the mixture weights. Throws NumericalError when a row's weights
// all underflow to zero.
void allocation_kernel(const Dataset& data, const LevelLayout& layout, int num_classes,
                       std::span<const double> log_weight,
                       std::span<const double> log_profile_t, std::uint64_t seed,
                       std::uint64_t sweep, std::span<std::int32_t> z, Exec exec);

// Tabulates observed cells by class: level_count[l * total_levels +
// offset[j] + code - 1] and per-class row counts.
void count_kernel(const Dataset& data, const LevelLayout& layout, int num_classes,
                  std::span<const std::int32_t> z, std::span<std::int64_t> level_count,
                  std::span<std::int64_t> class_size, Exec exec);

// Replaces missing cells of `data` in place with draws from the allocated
// class's level probabilities. Glue rows are skipped unless impute_glue.
void impute_kernel(const ModelState& state, Dataset& data, std::uint64_t seed,
                   std::uint64_t sweep, bool impute_glue, Exec exec);

}  // namespace catfuse

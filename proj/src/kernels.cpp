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

#include "catfuse/kernels.hpp"

#include <atomic>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "catfuse/errors.hpp"
#include "catfuse/numeric.hpp"
#include "catfuse/rng.hpp"

namespace catfuse {

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

Exec resolve_exec(Exec exec) {
  if (exec != Exec::kAuto) return exec;
  return openmp_enabled() ? Exec::kParallel : Exec::kSerial;
}

std::vector<double> build_log_profile_t(const ModelState& state) {
  const std::size_t N = static_cast<std::size_t>(state.num_classes);
  const std::size_t L = state.layout.total_levels;
  std::vector<double> lpt(L * N);
  for (std::size_t l = 0; l < N; ++l) {
    const double* row = state.profile.data() + l * L;
    for (std::size_t e = 0; e < L; ++e) {
      lpt[e * N + l] = row[e] > 0.0 ? std::log(row[e]) : numeric::kNegInf;
    }
  }
  return lpt;
}

namespace {

struct RowAllocator {
  const Dataset& data;
  const LevelLayout& layout;
  int num_classes;
  std::span<const double> log_weight;
  std::span<const double> log_profile_t;
  std::uint64_t seed;
  std::uint64_t sweep;
  std::span<std::int32_t> z;
  std::atomic<bool>* bad;

  void operator()(std::size_t i, std::vector<double>& logw) const {
    const std::size_t N = static_cast<std::size_t>(num_classes);
    for (std::size_t l = 0; l < N; ++l) logw[l] = log_weight[l];
    const std::int32_t* row = data.raw() + i * layout.num_vars();
    for (std::size_t j = 0; j < layout.num_vars(); ++j) {
      const std::int32_t y = row[j];
      if (y == kMissing) continue;
      const double* col =
          log_profile_t.data() + (layout.offset[j] + static_cast<std::size_t>(y - 1)) * N;
      for (std::size_t l = 0; l < N; ++l) logw[l] += col[l];
    }
    double max_w = numeric::kNegInf;
    for (std::size_t l = 0; l < N; ++l) max_w = std::max(max_w, logw[l]);
    if (max_w == numeric::kNegInf) {
      bad->store(true, std::memory_order_relaxed);
      return;
    }
    double total = 0.0;
    for (std::size_t l = 0; l < N; ++l) {
      logw[l] = std::exp(logw[l] - max_w);
      total += logw[l];
    }
    rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kAllocSweep, sweep, i));
    const double target = gen.u01() * total;
    double acc = 0.0;
    std::size_t pick = N - 1;
    for (std::size_t l = 0; l < N; ++l) {
      acc += logw[l];
      if (target < acc) {
        pick = l;
        break;
      }
    }
    z[i] = static_cast<std::int32_t>(pick) + 1;
  }
};

}  // namespace

void allocation_kernel(const Dataset& data, const LevelLayout& layout, int num_classes,
                       std::span<const double> log_weight,
                       std::span<const double> log_profile_t, std::uint64_t seed,
                       std::uint64_t sweep, std::span<std::int32_t> z, Exec exec) {
  std::atomic<bool> bad{false};
  const RowAllocator body{data,         layout, num_classes, log_weight, log_profile_t,
                          seed,         sweep,  z,           &bad};
  const std::int64_t n = static_cast<std::int64_t>(data.n_rows());
  if (resolve_exec(exec) == Exec::kParallel) {
#ifdef _OPENMP
#pragma omp parallel
    {
      std::vector<double> logw(static_cast<std::size_t>(num_classes));
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i), logw);
    }
#else
    std::vector<double> logw(static_cast<std::size_t>(num_classes));
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i), logw);
#endif
  } else {
    std::vector<double> logw(static_cast<std::size_t>(num_classes));
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i), logw);
  }
  if (bad.load()) {
    throw NumericalError("a row's class weights all underflowed to zero");
  }
}

void count_kernel(const Dataset& data, const LevelLayout& layout, int num_classes,
                  std::span<const std::int32_t> z, std::span<std::int64_t> level_count,
                  std::span<std::int64_t> class_size, Exec exec) {
  const std::size_t L = layout.total_levels;
  const std::size_t p = layout.num_vars();
  std::fill(level_count.begin(), level_count.end(), 0);
  std::fill(class_size.begin(), class_size.end(), 0);
  const std::int64_t n = static_cast<std::int64_t>(data.n_rows());

  auto accumulate = [&](std::size_t i, std::int64_t* levels, std::int64_t* sizes) {
    const std::size_t l = static_cast<std::size_t>(z[i] - 1);
    ++sizes[l];
    const std::int32_t* row = data.raw() + i * p;
    std::int64_t* base = levels + l * L;
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j] != kMissing) {
        ++base[layout.offset[j] + static_cast<std::size_t>(row[j] - 1)];
      }
    }
  };

  if (resolve_exec(exec) == Exec::kParallel) {
#ifdef _OPENMP
#pragma omp parallel
    {
      std::vector<std::int64_t> local_levels(static_cast<std::size_t>(num_classes) * L, 0);
      std::vector<std::int64_t> local_sizes(static_cast<std::size_t>(num_classes), 0);
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < n; ++i) {
        accumulate(static_cast<std::size_t>(i), local_levels.data(), local_sizes.data());
      }
#pragma omp critical
      {
        for (std::size_t e = 0; e < local_levels.size(); ++e) level_count[e] += local_levels[e];
        for (std::size_t l = 0; l < local_sizes.size(); ++l) class_size[l] += local_sizes[l];
      }
    }
#else
    for (std::int64_t i = 0; i < n; ++i) {
      accumulate(static_cast<std::size_t>(i), level_count.data(), class_size.data());
    }
#endif
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      accumulate(static_cast<std::size_t>(i), level_count.data(), class_size.data());
    }
  }
}

void impute_kernel(const ModelState& state, Dataset& data, std::uint64_t seed,
                   std::uint64_t sweep, bool impute_glue, Exec exec) {
  const LevelLayout& layout = state.layout;
  const std::size_t p = layout.num_vars();
  const std::int64_t n = static_cast<std::int64_t>(data.n_rows());

  auto body = [&](std::size_t i) {
    if (!impute_glue && data.is_glue_row(i)) return;
    std::int32_t* row = data.raw() + i * p;
    bool any_missing = false;
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j] == kMissing) {
        any_missing = true;
        break;
      }
    }
    if (!any_missing) return;
    rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kImputeSweep, sweep, i));
    const std::size_t cls = static_cast<std::size_t>(state.z[i] - 1);
    const double* prof = state.profile.data() + cls * layout.total_levels;
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j] != kMissing) continue;
      const double* cell = prof + layout.offset[j];
      const int d = layout.levels[j];
      const double u = gen.u01();
      double acc = 0.0;
      std::int32_t code = d;
      for (int y = 0; y < d; ++y) {
        acc += cell[y];
        if (u < acc) {
          code = y + 1;
          break;
        }
      }
      row[j] = code;
    }
  };

  if (resolve_exec(exec) == Exec::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
#else
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
#endif
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  }
}

}  // namespace catfuse

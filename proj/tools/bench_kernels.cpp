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

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "catfuse/kernels.hpp"
#include "catfuse/sampler.hpp"
#include "catfuse/simulate.hpp"

namespace {

double time_ms(std::size_t reps, const std::function<void(std::uint64_t)>& fn) {
  fn(0);  // warmup
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t s = 1; s <= reps; ++s) fn(s);
  const std::chrono::duration<double, std::milli> elapsed =
      std::chrono::steady_clock::now() - t0;
  return elapsed.count() / static_cast<double>(reps);
}

void print_row(const std::string& name, double serial_ms, double parallel_ms, bool identical) {
  std::cout << std::left << std::setw(12) << name << std::right << std::fixed
            << std::setprecision(3) << std::setw(12) << serial_ms << std::setw(12) << parallel_ms
            << std::setw(10) << std::setprecision(2) << (serial_ms / parallel_ms) << "x"
            << std::setw(12) << (identical ? "yes" : "NO") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"times the serial and parallel sweep kernels on one synthetic dataset"};
  std::size_t rows = 20000;
  int classes = 30;
  std::size_t reps = 20;
  std::uint64_t seed = 7;
  app.add_option("--rows", rows, "rows in the benchmark dataset");
  app.add_option("--classes", classes, "latent classes");
  app.add_option("--reps", reps, "timed repetitions per kernel");
  app.add_option("--seed", seed, "RNG seed");
  CLI11_PARSE(app, argc, argv);

  using namespace catfuse;
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = rows;
  const Dataset population = draw_population(spec, seed);
  const SplitResult split = split_and_mask(population, 0.5, seed);
  const Dataset data = Dataset::concat(std::vector<Dataset>{split.d1, split.d2});

  Hyperparams hp;
  hp.num_classes = classes;
  ModelState state = init_state(data, hp, seed);

  std::vector<double> log_weight(state.weight.size());
  for (std::size_t l = 0; l < state.weight.size(); ++l) {
    log_weight[l] = std::log(state.weight[l]);
  }
  const std::vector<double> lpt = build_log_profile_t(state);
  const int n_classes = state.num_classes;
  const LevelLayout& layout = state.layout;

  std::cout << "rows " << data.n_rows() << "  classes " << n_classes << "  reps " << reps << "\n";
  if (!openmp_enabled()) {
    std::cout << "built without OpenMP; the parallel path falls back to serial\n";
  }
  std::cout << std::left << std::setw(12) << "kernel" << std::right << std::setw(12)
            << "serial ms" << std::setw(12) << "parallel ms" << std::setw(11) << "speedup"
            << std::setw(12) << "identical\n";

  {
    std::vector<std::int32_t> z_serial(data.n_rows());
    std::vector<std::int32_t> z_parallel(data.n_rows());
    const double serial_ms = time_ms(reps, [&](std::uint64_t sweep) {
      allocation_kernel(data, layout, n_classes, log_weight, lpt, seed, sweep, z_serial,
                        Exec::kSerial);
    });
    const double parallel_ms = time_ms(reps, [&](std::uint64_t sweep) {
      allocation_kernel(data, layout, n_classes, log_weight, lpt, seed, sweep, z_parallel,
                        Exec::kParallel);
    });
    print_row("allocation", serial_ms, parallel_ms, z_serial == z_parallel);
    state.z = z_serial;
  }
  {
    std::vector<std::int64_t> lc_serial(
        static_cast<std::size_t>(n_classes) * layout.total_levels);
    std::vector<std::int64_t> cs_serial(static_cast<std::size_t>(n_classes));
    std::vector<std::int64_t> lc_parallel(lc_serial.size());
    std::vector<std::int64_t> cs_parallel(cs_serial.size());
    const double serial_ms = time_ms(reps, [&](std::uint64_t) {
      count_kernel(data, layout, n_classes, state.z, lc_serial, cs_serial, Exec::kSerial);
    });
    const double parallel_ms = time_ms(reps, [&](std::uint64_t) {
      count_kernel(data, layout, n_classes, state.z, lc_parallel, cs_parallel, Exec::kParallel);
    });
    print_row("count", serial_ms, parallel_ms,
              lc_serial == lc_parallel && cs_serial == cs_parallel);
  }
  {
    Dataset serial_out = data;
    Dataset parallel_out = data;
    const double serial_ms = time_ms(reps, [&](std::uint64_t sweep) {
      serial_out = data;
      impute_kernel(state, serial_out, seed, sweep, true, Exec::kSerial);
    });
    const double parallel_ms = time_ms(reps, [&](std::uint64_t sweep) {
      parallel_out = data;
      impute_kernel(state, parallel_out, seed, sweep, true, Exec::kParallel);
    });
    print_row("impute", serial_ms, parallel_ms, serial_out == parallel_out);
  }
  return 0;
}

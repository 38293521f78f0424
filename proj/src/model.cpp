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

#include "catfuse/model.hpp"

#include <cmath>
#include <fstream>

#include "catfuse/errors.hpp"

namespace catfuse {

void Hyperparams::validate(const Schema& schema) const {
  if (num_classes < 1) {
    throw ValidationError("number of latent classes must be at least 1");
  }
  if (!(a_alpha > 0.0) || !(b_alpha > 0.0)) {
    throw ValidationError("concentration prior shape and rate must be positive");
  }
  if (dirichlet_a.empty()) return;
  if (dirichlet_a.size() != schema.num_vars()) {
    throw ValidationError("dirichlet_a must list one concentration vector per variable");
  }
  for (std::size_t j = 0; j < dirichlet_a.size(); ++j) {
    if (dirichlet_a[j].size() != static_cast<std::size_t>(schema.var(j).num_levels)) {
      throw ValidationError("dirichlet_a for '" + schema.var(j).name +
                            "' has the wrong number of entries");
    }
    for (double a : dirichlet_a[j]) {
      if (!(a > 0.0)) {
        throw ValidationError("dirichlet_a entries must be positive");
      }
    }
  }
}

std::vector<double> Hyperparams::flat_dirichlet_a(const Schema& schema) const {
  const LevelLayout layout(schema);
  std::vector<double> flat(layout.total_levels, 1.0);
  if (dirichlet_a.empty()) return flat;
  for (std::size_t j = 0; j < schema.num_vars(); ++j) {
    for (std::size_t y = 0; y < dirichlet_a[j].size(); ++y) {
      flat[layout.offset[j] + y] = dirichlet_a[j][y];
    }
  }
  return flat;
}

void SamplerConfig::validate() const {
  if (thin == 0) throw ValidationError("thin must be at least 1");
  if (n_iterations == 0) throw ValidationError("n_iterations must be at least 1");
  if (burn_in >= n_iterations && m == 0) {
    throw ValidationError("burn_in consumes the whole run and nothing is emitted");
  }
}

std::size_t SamplerConfig::total_sweeps() const {
  return std::max(n_iterations, burn_in + m * thin);
}

std::vector<std::size_t> SamplerConfig::emission_sweeps() const {
  std::vector<std::size_t> sweeps;
  sweeps.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    sweeps.push_back(burn_in + (k + 1) * thin);
  }
  return sweeps;
}

LevelLayout::LevelLayout(const Schema& schema) {
  offset.reserve(schema.num_vars());
  levels.reserve(schema.num_vars());
  std::size_t at = 0;
  for (std::size_t j = 0; j < schema.num_vars(); ++j) {
    offset.push_back(at);
    levels.push_back(schema.var(j).num_levels);
    at += static_cast<std::size_t>(schema.var(j).num_levels);
  }
  total_levels = at;
}

void ModelState::check_invariants() const {
  constexpr double kTol = 1e-12;
  const int N = num_classes;
  for (std::int32_t zi : z) {
    if (zi < 1 || zi > N) throw NumericalError("class allocation out of range");
  }
  double wsum = 0.0;
  for (int l = 0; l < N; ++l) {
    if (!(weight[static_cast<std::size_t>(l)] >= 0.0)) {
      throw NumericalError("negative mixture weight");
    }
    wsum += weight[static_cast<std::size_t>(l)];
  }
  if (std::abs(wsum - 1.0) > kTol) {
    throw NumericalError("mixture weights do not sum to 1");
  }
  for (int l = 0; l < N; ++l) {
    for (std::size_t j = 0; j < layout.num_vars(); ++j) {
      double s = 0.0;
      const std::size_t base =
          static_cast<std::size_t>(l) * layout.total_levels + layout.offset[j];
      for (int y = 0; y < layout.levels[j]; ++y) {
        const double v = profile[base + static_cast<std::size_t>(y)];
        if (!(v >= 0.0)) throw NumericalError("negative level probability");
        s += v;
      }
      if (std::abs(s - 1.0) > kTol) {
        throw NumericalError("level probabilities do not sum to 1");
      }
    }
  }
  if (!(concentration > 0.0)) throw NumericalError("concentration must stay positive");
}

void PosteriorSummary::save_jsonl(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write posterior summary: " + path.string());
    out.precision(17);
    std::size_t emitted = 0;
    for (const IterateRecord& r : trace) {
      out << "{\"sweep\":" << r.sweep << ",\"alpha\":" << r.alpha << ",\"n_star\":" << r.n_star;
      if (emitted < emission_sweep.size() && emission_sweep[emitted] == r.sweep) {
        if (emitted < weight_draws.size()) {
          out << ",\"weights\":[";
          const std::vector<double>& w = weight_draws[emitted];
          for (std::size_t l = 0; l < w.size(); ++l) {
            if (l) out << ',';
            out << w[l];
          }
          out << ']';
        }
        ++emitted;
      }
      out << "}\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace catfuse

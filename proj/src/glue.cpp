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

#include "catfuse/glue.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "catfuse/errors.hpp"
#include "catfuse/kernels.hpp"
#include "catfuse/numeric.hpp"
#include "catfuse/rng.hpp"
#include "catfuse/sampler.hpp"

namespace catfuse {

GlueMode glue_mode_from_string(const std::string& s) {
  if (s == "APPEND_RAW") return GlueMode::kAppendRaw;
  if (s == "DUPLICATE") return GlueMode::kDuplicate;
  if (s == "CONSTRUCT_FROM_CONDITIONAL") return GlueMode::kConstructFromConditional;
  throw ValidationError("unknown glue mode '" + s + "'");
}

std::string to_string(GlueMode mode) {
  switch (mode) {
    case GlueMode::kAppendRaw: return "APPEND_RAW";
    case GlueMode::kDuplicate: return "DUPLICATE";
    case GlueMode::kConstructFromConditional: return "CONSTRUCT_FROM_CONDITIONAL";
  }
  return "?";
}

ConditionalDirection direction_from_string(const std::string& s) {
  if (s == "B_given_ABprime") return ConditionalDirection::kBGivenABprime;
  if (s == "Bprime_given_AB") return ConditionalDirection::kBprimeGivenAB;
  throw ValidationError("unknown conditional direction '" + s + "'");
}

std::string to_string(ConditionalDirection d) {
  return d == ConditionalDirection::kBGivenABprime ? "B_given_ABprime" : "Bprime_given_AB";
}

void GlueSpec::validate(const Schema& schema) const {
  if (n_s < 1) throw ValidationError("glue size n_s must be at least 1");
  if (variables_kept.empty()) throw ValidationError("glue keeps no variables");
  bool has_b = false;
  bool has_bprime = false;
  for (const std::string& name : variables_kept) {
    switch (schema.var(schema.index_of(name)).role) {
      case Role::kB: has_b = true; break;
      case Role::kBprime: has_bprime = true; break;
      case Role::kA: break;
    }
  }
  if (!has_b || !has_bprime) {
    throw ValidationError(
        "glue must keep at least one B and one Bprime variable to be informative");
  }
}

namespace {

std::vector<std::size_t> select_rows(std::span<const std::size_t> pool, std::size_t want,
                                     std::uint64_t stream) {
  std::vector<std::size_t> rows(pool.begin(), pool.end());
  if (want == rows.size()) return rows;
  rng::Xoshiro256 gen(stream);
  if (want < rows.size()) {
    for (std::size_t i = 0; i < want; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(gen.below(rows.size() - i));
      std::swap(rows[i], rows[j]);
    }
    rows.resize(want);
    std::sort(rows.begin(), rows.end());
    return rows;
  }
  std::vector<std::size_t> out(want);
  for (std::size_t i = 0; i < want; ++i) {
    out[i] = rows[static_cast<std::size_t>(gen.below(rows.size()))];
  }
  return out;
}

Dataset mask_rows(const Dataset& source, std::span<const std::size_t> rows,
                  std::span<const std::size_t> kept_cols, Provenance provenance) {
  Dataset out(source.schema_ptr(), rows.size(), provenance);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c : kept_cols) {
      out.set_code(r, c, source.code(rows[r], c));
    }
  }
  return out;
}

std::vector<std::size_t> jointly_observed_pool(const Dataset& source,
                                               std::span<const std::size_t> kept_cols) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < source.n_rows(); ++i) {
    bool all = true;
    for (std::size_t c : kept_cols) {
      if (!source.observed(i, c)) {
        all = false;
        break;
      }
    }
    if (all) pool.push_back(i);
  }
  return pool;
}

void require_each_kept_observed(const Dataset& source, std::span<const std::size_t> kept_cols) {
  for (std::size_t c : kept_cols) {
    bool any = false;
    for (std::size_t i = 0; i < source.n_rows(); ++i) {
      if (source.observed(i, c)) {
        any = true;
        break;
      }
    }
    if (!any) {
      throw ValidationError("glue variable '" + source.schema().var(c).name +
                            "' is entirely missing in the source");
    }
  }
}

}  // namespace

Dataset make_duplicate_glue(const Dataset& source, const GlueSpec& spec, std::uint64_t seed) {
  spec.validate(source.schema());
  if (spec.mode != GlueMode::kDuplicate) {
    throw ValidationError("make_duplicate_glue requires DUPLICATE mode");
  }
  const std::vector<std::size_t> kept = source.schema().indices_of(spec.variables_kept);
  require_each_kept_observed(source, kept);
  const std::vector<std::size_t> pool = jointly_observed_pool(source, kept);
  if (pool.empty()) {
    throw ValidationError("no source row observes all kept glue variables jointly");
  }
  const std::vector<std::size_t> rows =
      select_rows(pool, spec.n_s, rng::derive_stream(seed, rng::StreamPurpose::kGlueSample));
  return mask_rows(source, rows, kept, Provenance::kGlue);
}

Dataset make_append_glue(const Dataset& source, const GlueSpec& spec) {
  spec.validate(source.schema());
  const std::vector<std::size_t> kept = source.schema().indices_of(spec.variables_kept);
  require_each_kept_observed(source, kept);
  std::vector<std::size_t> rows(source.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return mask_rows(source, rows, kept, Provenance::kGlue);
}

Dataset construct_glue(const Dataset& glue_raw, const Dataset& donors,
                       ConditionalDirection direction, const Hyperparams& hp,
                       const SamplerConfig& cfg, std::size_t n_out) {
  const Schema& schema = glue_raw.schema();
  if (!(schema == donors.schema())) {
    throw ValidationError("construct_glue: glue and donors use different schemas");
  }
  const Provenance need = direction == ConditionalDirection::kBGivenABprime ? Provenance::kD2
                                                                            : Provenance::kD1;
  for (std::size_t i = 0; i < donors.n_rows(); ++i) {
    if (donors.source(i) != need) {
      throw ValidationError("direction " + to_string(direction) + " needs donors tagged " +
                            to_string(need) + ", found " + to_string(donors.source(i)));
    }
  }
  if (donors.n_rows() == 0) throw ValidationError("construct_glue: donor dataset is empty");

  // The glue must actually inform the conditional being borrowed.
  const Role imputed_role =
      direction == ConditionalDirection::kBGivenABprime ? Role::kB : Role::kBprime;
  for (std::size_t c : schema.role_columns(imputed_role)) {
    bool any = false;
    for (std::size_t i = 0; i < glue_raw.n_rows() && !any; ++i) {
      any = glue_raw.observed(i, c);
    }
    if (!any) {
      throw ValidationError("glue never observes '" + schema.var(c).name +
                            "', so its conditional cannot be fitted");
    }
  }

  SamplerConfig fit_cfg = cfg;
  fit_cfg.m = 0;
  fit_cfg.keep_param_draws = false;
  ChainResult fit = run_chain(glue_raw, hp, fit_cfg);
  ModelState state = std::move(fit.final_state);

  const std::size_t want = n_out ? n_out : glue_raw.n_rows();
  std::vector<std::size_t> pool(donors.n_rows());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  const std::vector<std::size_t> rows =
      select_rows(pool, want, rng::derive_stream(cfg.seed, rng::StreamPurpose::kGlueSample));

  Dataset staged(glue_raw.schema_ptr(), want, Provenance::kConstructedGlue);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < schema.num_vars(); ++j) {
      staged.set_code(r, j, donors.code(rows[r], j));
    }
  }

  // Class draw per staged row from the fitted model, given the observed
  // donor block; then the missing block from that class's profile.
  state.z.assign(want, 1);
  std::vector<double> log_weight(state.weight.size());
  for (std::size_t l = 0; l < state.weight.size(); ++l) {
    log_weight[l] = state.weight[l] > 0.0 ? std::log(state.weight[l]) : numeric::kNegInf;
  }
  const std::vector<double> lpt = build_log_profile_t(state);
  const std::uint64_t complete_seed =
      rng::derive_stream(cfg.seed, rng::StreamPurpose::kGlueComplete);
  allocation_kernel(staged, state.layout, state.num_classes, log_weight, lpt, complete_seed, 0,
                    state.z, cfg.exec);
  impute_kernel(state, staged, complete_seed, 1, true, cfg.exec);
  return staged;
}

DiagnosticReport representativeness_diagnostic(const Dataset& constructed,
                                               const Dataset& reference,
                                               std::span<const std::string> variables,
                                               double threshold) {
  if (variables.empty()) {
    throw ValidationError("diagnostic needs at least one variable to compare");
  }
  DiagnosticReport report;
  report.threshold = threshold;

  auto level_shares = [](const Dataset& d, std::size_t col, int levels,
                         const std::string& name) {
    std::vector<double> share(static_cast<std::size_t>(levels), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
      const std::int32_t c = d.code(i, col);
      if (c == kMissing) continue;
      share[static_cast<std::size_t>(c - 1)] += 1.0;
      total += 1.0;
    }
    if (total <= 0.0) {
      throw ValidationError("diagnostic variable '" + name + "' has no observed values");
    }
    for (double& s : share) s /= total;
    return share;
  };

  for (const std::string& name : variables) {
    const std::size_t cc = constructed.schema().index_of(name);
    const std::size_t rc = reference.schema().index_of(name);
    const int levels = constructed.schema().var(cc).num_levels;
    if (levels != reference.schema().var(rc).num_levels) {
      throw ValidationError("diagnostic variable '" + name + "' has mismatched level counts");
    }
    VariableComparison cmp;
    cmp.name = name;
    cmp.sampled = level_shares(constructed, cc, levels, name);
    cmp.reference = level_shares(reference, rc, levels, name);
    for (std::size_t y = 0; y < cmp.sampled.size(); ++y) {
      cmp.max_abs_diff = std::max(cmp.max_abs_diff, std::abs(cmp.sampled[y] - cmp.reference[y]));
    }
    report.max_abs_diff = std::max(report.max_abs_diff, cmp.max_abs_diff);
    report.variables.push_back(std::move(cmp));
  }
  report.pass = report.max_abs_diff <= threshold;
  return report;
}

nlohmann::json DiagnosticReport::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const VariableComparison& v : variables) {
    vars.push_back({{"name", v.name},
                    {"sampled", v.sampled},
                    {"reference", v.reference},
                    {"max_abs_diff", v.max_abs_diff}});
  }
  return {{"variables", vars},
          {"max_abs_diff", max_abs_diff},
          {"threshold", threshold},
          {"verdict", pass ? "PASS" : "FAIL"}};
}

std::string DiagnosticReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "variable        level  sampled  reference  |diff|\n";
  for (const VariableComparison& v : variables) {
    for (std::size_t y = 0; y < v.sampled.size(); ++y) {
      out << std::left << std::setw(16) << v.name << std::setw(7) << (y + 1) << std::setw(9)
          << v.sampled[y] << std::setw(11) << v.reference[y] << std::abs(v.sampled[y] -
                                                                         v.reference[y])
          << "\n";
    }
  }
  out << "max |diff| " << max_abs_diff << "  threshold " << threshold << "  verdict "
      << (pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace catfuse

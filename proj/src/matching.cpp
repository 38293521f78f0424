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

#include "catfuse/matching.hpp"

#include "catfuse/errors.hpp"
#include "catfuse/rng.hpp"

namespace catfuse {

namespace {

void validate_key(const Schema& schema, const std::vector<std::string>& key) {
  if (key.empty()) throw ValidationError("matching needs a non-empty key");
  for (const std::string& name : key) {
    if (schema.var(schema.index_of(name)).role != Role::kA) {
      throw ValidationError("matching key '" + name + "' is not a shared (A) variable");
    }
  }
}

// Mixed-radix encoding of the first `depth` key values; nullopt-like -1 when
// any of them is missing.
std::int64_t encode_prefix(const Dataset& d, std::size_t row,
                           const std::vector<std::size_t>& cols,
                           const std::vector<int>& levels, std::size_t depth) {
  std::int64_t code = 1;  // distinguish depth-0 (global pool) from "missing"
  for (std::size_t v = 0; v < depth; ++v) {
    const std::int32_t y = d.code(row, cols[v]);
    if (y == kMissing) return -1;
    code = code * levels[v] + (y - 1);
  }
  return code;
}

struct DonorIndex {
  // One map per key-prefix depth (0..K): prefix code -> donor rows.
  std::vector<std::unordered_map<std::int64_t, std::vector<std::size_t>>> by_depth;
};

DonorIndex build_donor_index(const Dataset& d, const std::vector<std::size_t>& key_cols,
                             const std::vector<int>& key_levels,
                             const std::vector<std::size_t>& block_cols) {
  DonorIndex index;
  index.by_depth.resize(key_cols.size() + 1);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    bool block_complete = true;
    for (std::size_t c : block_cols) {
      if (!d.observed(i, c)) {
        block_complete = false;
        break;
      }
    }
    if (!block_complete) continue;
    for (std::size_t depth = 0; depth <= key_cols.size(); ++depth) {
      const std::int64_t code = encode_prefix(d, i, key_cols, key_levels, depth);
      if (code < 0) break;
      index.by_depth[depth][code].push_back(i);
    }
  }
  return index;
}

// Fills the missing part of `block_cols` for every recipient row, donating
// whole blocks from `donors`. Returns how many recipients fell back to a
// shorter key prefix.
std::size_t donate(Dataset& recipients, const Dataset& donors, const DonorIndex& index,
                   const std::vector<std::size_t>& key_cols, const std::vector<int>& key_levels,
                   const std::vector<std::size_t>& block_cols, bool strict, std::uint64_t seed,
                   std::uint64_t side) {
  std::size_t coarsened = 0;
  for (std::size_t i = 0; i < recipients.n_rows(); ++i) {
    bool needs = false;
    for (std::size_t c : block_cols) {
      if (!recipients.observed(i, c)) {
        needs = true;
        break;
      }
    }
    if (!needs) continue;

    const std::vector<std::size_t>* pool = nullptr;
    std::size_t depth = key_cols.size() + 1;
    while (depth-- > 0) {
      const std::int64_t code = encode_prefix(recipients, i, key_cols, key_levels, depth);
      if (code < 0) continue;
      const auto& level = index.by_depth[depth];
      const auto it = level.find(code);
      if (it != level.end() && !it->second.empty()) {
        pool = &it->second;
        break;
      }
    }
    if (pool == nullptr) {
      throw ValidationError("no donor observes the full block needed by row " +
                            std::to_string(i + 1));
    }
    if (depth < key_cols.size()) {
      if (strict) {
        throw ValidationError("row " + std::to_string(i + 1) +
                              " has no donor with identical key values");
      }
      ++coarsened;
    }
    rng::Xoshiro256 gen(rng::derive_stream(seed, rng::StreamPurpose::kMatch, side, i));
    const std::size_t donor = (*pool)[static_cast<std::size_t>(gen.below(pool->size()))];
    for (std::size_t c : block_cols) {
      if (!recipients.observed(i, c)) {
        recipients.set_code(i, c, donors.code(donor, c));
      }
    }
  }
  return coarsened;
}

}  // namespace

MatchGroupIndex build_match_groups(const Dataset& d1, const Dataset& d2,
                                   const std::vector<std::string>& key) {
  if (!(d1.schema() == d2.schema())) {
    throw ValidationError("matching needs both datasets on one schema");
  }
  const Schema& schema = d1.schema();
  validate_key(schema, key);
  const std::vector<std::size_t> cols = schema.indices_of(key);
  std::vector<int> levels;
  for (std::size_t c : cols) levels.push_back(schema.var(c).num_levels);

  MatchGroupIndex groups;
  groups.key = key;
  for (std::size_t i = 0; i < d1.n_rows(); ++i) {
    const std::int64_t code = encode_prefix(d1, i, cols, levels, cols.size());
    if (code >= 0) groups.d1_rows[static_cast<std::uint64_t>(code)].push_back(i);
  }
  for (std::size_t i = 0; i < d2.n_rows(); ++i) {
    const std::int64_t code = encode_prefix(d2, i, cols, levels, cols.size());
    if (code >= 0) groups.d2_rows[static_cast<std::uint64_t>(code)].push_back(i);
  }
  return groups;
}

MatchResult exact_match_fuse(const Dataset& d1, const Dataset& d2, const MatchOptions& options,
                             std::uint64_t seed) {
  if (!(d1.schema() == d2.schema())) {
    throw ValidationError("matching needs both datasets on one schema");
  }
  const Schema& schema = d1.schema();
  validate_key(schema, options.key);
  const std::vector<std::size_t> key_cols = schema.indices_of(options.key);
  std::vector<int> key_levels;
  for (std::size_t c : key_cols) key_levels.push_back(schema.var(c).num_levels);
  const std::vector<std::size_t> b_cols = schema.role_columns(Role::kB);
  const std::vector<std::size_t> bp_cols = schema.role_columns(Role::kBprime);
  if (b_cols.empty() || bp_cols.empty()) {
    throw ValidationError("matching needs at least one B and one Bprime variable");
  }

  MatchResult result{d1, d2, 0};
  // D1 recipients take whole Bprime blocks from D2 donors, and vice versa.
  const DonorIndex bp_donors = build_donor_index(d2, key_cols, key_levels, bp_cols);
  const DonorIndex b_donors = build_donor_index(d1, key_cols, key_levels, b_cols);
  result.n_coarsened += donate(result.d1_completed, d2, bp_donors, key_cols, key_levels,
                               bp_cols, options.strict, seed, 0);
  result.n_coarsened += donate(result.d2_completed, d1, b_donors, key_cols, key_levels, b_cols,
                               options.strict, seed, 1);
  return result;
}

}  // namespace catfuse

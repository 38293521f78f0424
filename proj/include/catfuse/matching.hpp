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
#include <string>
#include <unordered_map>
#include <vector>

#include "catfuse/dataset.hpp"

namespace catfuse {

// Rows of each dataset grouped by their (complete) key values; keys are
// encoded mixed-radix over the key variables' levels.
struct MatchGroupIndex {
  std::vector<std::string> key;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> d1_rows;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> d2_rows;
};

MatchGroupIndex build_match_groups(const Dataset& d1, const Dataset& d2,
                                   const std::vector<std::string>& key);

struct MatchOptions {
  // Ordered key variables; must be shared (role A) variables.
  std::vector<std::string> key;
  // Error out instead of coarsening when a recipient finds no donor on the
  // full key.
  bool strict = false;
};

struct MatchResult {
  Dataset d1_completed;
  Dataset d2_completed;
  // Recipients that had to match on a shortened key prefix.
  std::size_t n_coarsened = 0;
};

// Hot-deck fusion: each recipient row draws one donor uniformly from the
// rows of the other dataset sharing its key values and takes that donor's
// whole unseen block. Donor-less groups retry on successively shorter key
// prefixes (or fail under strict).
MatchResult exact_match_fuse(const Dataset& d1, const Dataset& d2, const MatchOptions& options,
                             std::uint64_t seed);

}  // namespace catfuse

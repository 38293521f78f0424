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

#include "catfuse/contingency.hpp"

#include "catfuse/errors.hpp"
#include "catfuse/numeric.hpp"

namespace catfuse {

ContingencyTable::ContingencyTable(std::vector<std::string> names, std::vector<int> levels)
    : names_(std::move(names)), levels_(std::move(levels)) {
  if (names_.empty() || names_.size() != levels_.size()) {
    throw ValidationError("contingency table needs matching names and level counts");
  }
  counts_.assign(numeric::checked_cell_product(levels_), 0);
}

std::size_t ContingencyTable::flat_index(std::span<const std::int32_t> codes) const {
  if (codes.size() != levels_.size()) {
    throw ValidationError("flat_index: expected " + std::to_string(levels_.size()) + " codes");
  }
  std::size_t idx = 0;
  for (std::size_t v = 0; v < codes.size(); ++v) {
    if (codes[v] < 1 || codes[v] > levels_[v]) {
      throw ValidationError("flat_index: code out of range for '" + names_[v] + "'");
    }
    idx = idx * static_cast<std::size_t>(levels_[v]) + static_cast<std::size_t>(codes[v] - 1);
  }
  return idx;
}

std::vector<std::int32_t> ContingencyTable::codes_at(std::size_t flat) const {
  if (flat >= counts_.size()) throw ValidationError("codes_at: cell index out of range");
  std::vector<std::int32_t> codes(levels_.size());
  for (std::size_t v = levels_.size(); v-- > 0;) {
    codes[v] = static_cast<std::int32_t>(flat % static_cast<std::size_t>(levels_[v])) + 1;
    flat /= static_cast<std::size_t>(levels_[v]);
  }
  return codes;
}

void ContingencyTable::add(std::span<const std::int32_t> codes, std::int64_t by) {
  counts_[flat_index(codes)] += by;
}

std::int64_t ContingencyTable::total() const {
  std::int64_t t = 0;
  for (std::int64_t c : counts_) t += c;
  return t;
}

std::vector<double> ContingencyTable::proportions() const {
  const std::int64_t t = total();
  if (t <= 0) throw ValidationError("cannot normalize an empty contingency table");
  std::vector<double> p(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    p[i] = static_cast<double>(counts_[i]) / static_cast<double>(t);
  }
  return p;
}

ContingencyTable tabulate(const Dataset& data, std::span<const std::string> variables) {
  if (variables.empty()) throw ValidationError("tabulate needs at least one variable");
  const Schema& schema = data.schema();
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  std::vector<int> levels;
  cols.reserve(variables.size());
  for (const std::string& name : variables) {
    const std::size_t j = schema.index_of(name);
    cols.push_back(j);
    names.push_back(name);
    levels.push_back(schema.var(j).num_levels);
  }

  ContingencyTable table(std::move(names), std::move(levels));
  std::vector<std::int32_t> codes(cols.size());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    bool complete = true;
    for (std::size_t v = 0; v < cols.size(); ++v) {
      const std::int32_t c = data.code(i, cols[v]);
      if (c == kMissing) {
        complete = false;
        break;
      }
      codes[v] = c;
    }
    if (!complete) {
      ++table.n_excluded;
      continue;
    }
    table.add(codes);
    ++table.n_used;
  }
  return table;
}

ContingencyTable tabulate(const Dataset& data, std::initializer_list<std::string> variables) {
  const std::vector<std::string> v(variables);
  return tabulate(data, std::span<const std::string>(v));
}

}  // namespace catfuse

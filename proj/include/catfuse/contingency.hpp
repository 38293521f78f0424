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
#include <vector>

#include "catfuse/dataset.hpp"

namespace catfuse {

// Dense cross-tabulation over a subset of variables. Cells are stored in
// mixed-radix order with the first selected variable varying slowest.
class ContingencyTable {
 public:
  ContingencyTable(std::vector<std::string> names, std::vector<int> levels);

  std::size_t num_cells() const { return counts_.size(); }
  std::size_t num_vars() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<int>& levels() const { return levels_; }

  // codes are 1-based, one per selected variable, in selection order.
  std::size_t flat_index(std::span<const std::int32_t> codes) const;
  std::vector<std::int32_t> codes_at(std::size_t flat) const;

  std::int64_t count(std::size_t flat) const { return counts_.at(flat); }
  void add(std::span<const std::int32_t> codes, std::int64_t by = 1);
  const std::vector<std::int64_t>& counts() const { return counts_; }

  std::int64_t total() const;
  // Cell proportions; throws ValidationError when the table is empty.
  std::vector<double> proportions() const;

  std::size_t n_used = 0;      // complete rows tabulated
  std::size_t n_excluded = 0;  // rows dropped for missingness in the selection

 private:
  std::vector<std::string> names_;
  std::vector<int> levels_;
  std::vector<std::int64_t> counts_;
};

// Cross-tabulates the selected variables, using only rows fully observed on
// the selection. Excluded-row counts are recorded on the result.
ContingencyTable tabulate(const Dataset& data, std::span<const std::string> variables);

ContingencyTable tabulate(const Dataset& data, std::initializer_list<std::string> variables);

}  // namespace catfuse

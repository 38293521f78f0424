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
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "catfuse/schema.hpp"

namespace catfuse {

// Where a row came from. D1 rows lack every Bprime variable by design,
// D2 rows lack every B variable by design; glue rows follow whatever
// observation pattern the auxiliary source provides.
enum class Provenance : std::uint8_t { kD1, kD2, kGlue, kConstructedGlue, kComplete };

Provenance provenance_from_string(const std::string& s);
std::string to_string(Provenance p);

// Missing-cell sentinel; observed codes run 1..num_levels.
inline constexpr std::int32_t kMissing = 0;

// Rectangular table of level codes with an explicit missingness sentinel and
// per-row provenance. Treated as immutable once built; completed copies are
// made by the sampler rather than mutating shared data.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::shared_ptr<const Schema> schema, std::size_t n_rows,
          Provenance source = Provenance::kComplete);

  static Dataset load_csv(std::shared_ptr<const Schema> schema,
                          const std::filesystem::path& path, Provenance source,
                          const std::string& missing_token = "NA");
  void save_csv(const std::filesystem::path& path,
                const std::string& missing_token = "NA") const;

  static Dataset concat(std::span<const Dataset> parts);

  Dataset filter_source(std::initializer_list<Provenance> keep) const;

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return schema_ ? schema_->num_vars() : 0; }

  std::int32_t code(std::size_t i, std::size_t j) const {
    return cells_[i * n_cols() + j];
  }
  void set_code(std::size_t i, std::size_t j, std::int32_t code) {
    cells_[i * n_cols() + j] = code;
  }
  bool observed(std::size_t i, std::size_t j) const { return code(i, j) != kMissing; }

  Provenance source(std::size_t i) const { return row_source_[i]; }
  void set_source(std::size_t i, Provenance p) { row_source_[i] = p; }
  bool is_glue_row(std::size_t i) const {
    return row_source_[i] == Provenance::kGlue ||
           row_source_[i] == Provenance::kConstructedGlue;
  }

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }
  const std::int32_t* raw() const { return cells_.data(); }
  std::int32_t* raw() { return cells_.data(); }

  std::size_t count_missing() const;

  // Validates code ranges, and for D1/D2 rows the by-design missingness of
  // the opposite block. Completed copies skip the design check.
  void validate(bool enforce_design_missingness = true) const;

  bool operator==(const Dataset& other) const;

 private:
  std::shared_ptr<const Schema> schema_;
  std::size_t n_rows_ = 0;
  std::vector<std::int32_t> cells_;       // row-major
  std::vector<Provenance> row_source_;
};

}  // namespace catfuse

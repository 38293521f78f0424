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

#include "catfuse/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "catfuse/errors.hpp"

namespace catfuse {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Provenance provenance_from_string(const std::string& s) {
  if (s == "D1") return Provenance::kD1;
  if (s == "D2") return Provenance::kD2;
  if (s == "GLUE") return Provenance::kGlue;
  if (s == "CONSTRUCTED_GLUE") return Provenance::kConstructedGlue;
  if (s == "COMPLETE") return Provenance::kComplete;
  throw ValidationError("unknown provenance tag '" + s + "'");
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kD1: return "D1";
    case Provenance::kD2: return "D2";
    case Provenance::kGlue: return "GLUE";
    case Provenance::kConstructedGlue: return "CONSTRUCTED_GLUE";
    case Provenance::kComplete: return "COMPLETE";
  }
  return "?";
}

Dataset::Dataset(std::shared_ptr<const Schema> schema, std::size_t n_rows, Provenance source)
    : schema_(std::move(schema)),
      n_rows_(n_rows),
      cells_(n_rows * schema_->num_vars(), kMissing),
      row_source_(n_rows, source) {}

Dataset Dataset::load_csv(std::shared_ptr<const Schema> schema,
                          const std::filesystem::path& path, Provenance source,
                          const std::string& missing_token) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("data file " + path.string() + " is empty (no header row)");
  }

  const std::size_t p = schema->num_vars();
  const auto header = split_csv_line(line);
  if (header.size() != p) {
    throw ValidationError(path.string() + ": header has " + std::to_string(header.size()) +
                          " columns, schema has " + std::to_string(p));
  }
  // Header must be the schema names, possibly permuted. col_to_var[c] maps a
  // file column to its schema index.
  std::vector<std::size_t> col_to_var(p);
  std::vector<bool> seen(p, false);
  for (std::size_t c = 0; c < p; ++c) {
    const std::string name = trim(header[c]);
    if (!schema->contains(name)) {
      throw ValidationError(path.string() + ": unknown column '" + name + "'");
    }
    const std::size_t j = schema->index_of(name);
    if (seen[j]) throw ValidationError(path.string() + ": duplicate header column '" + name + "'");
    seen[j] = true;
    col_to_var[c] = j;
  }

  std::vector<std::int32_t> cells;
  std::size_t n = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != p) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(p) + " fields, found " + std::to_string(fields.size()));
    }
    cells.resize(cells.size() + p, kMissing);
    std::int32_t* row = cells.data() + n * p;
    for (std::size_t c = 0; c < p; ++c) {
      const std::string cell = trim(fields[c]);
      const std::size_t j = col_to_var[c];
      if (cell == missing_token) {
        row[j] = kMissing;
        continue;
      }
      int value = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": non-integer cell '" + cell + "' in column '" +
                              schema->var(j).name + "'");
      }
      if (value < 1 || value > schema->var(j).num_levels) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": code out of range 1.." +
                              std::to_string(schema->var(j).num_levels) + " in column '" +
                              schema->var(j).name + "': " + std::to_string(value));
      }
      row[j] = value;
    }
    ++n;
  }

  Dataset out(std::move(schema), n, source);
  out.cells_ = std::move(cells);
  out.validate();
  return out;
}

void Dataset::save_csv(const std::filesystem::path& path,
                       const std::string& missing_token) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream outf(tmp, std::ios::binary);
    if (!outf) throw IoError("cannot write data file: " + path.string());
    const std::size_t p = n_cols();
    for (std::size_t j = 0; j < p; ++j) {
      if (j) outf << ',';
      outf << schema_->var(j).name;
    }
    outf << '\n';
    for (std::size_t i = 0; i < n_rows_; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        if (j) outf << ',';
        const std::int32_t c = code(i, j);
        if (c == kMissing) {
          outf << missing_token;
        } else {
          outf << c;
        }
      }
      outf << '\n';
    }
    if (!outf) throw IoError("write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

Dataset Dataset::concat(std::span<const Dataset> parts) {
  if (parts.empty()) throw ValidationError("concat needs at least one dataset");
  const Schema& schema = parts[0].schema();
  std::size_t total = 0;
  for (const Dataset& d : parts) {
    if (!(d.schema() == schema)) throw ValidationError("concat: schemas do not match");
    total += d.n_rows();
  }
  Dataset out(parts[0].schema_ptr(), total);
  std::size_t at = 0;
  for (const Dataset& d : parts) {
    std::copy(d.cells_.begin(), d.cells_.end(), out.cells_.begin() + at * schema.num_vars());
    std::copy(d.row_source_.begin(), d.row_source_.end(), out.row_source_.begin() + at);
    at += d.n_rows();
  }
  return out;
}

Dataset Dataset::filter_source(std::initializer_list<Provenance> keep) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (Provenance p : keep) {
      if (row_source_[i] == p) {
        rows.push_back(i);
        break;
      }
    }
  }
  Dataset out(schema_, rows.size());
  const std::size_t p = n_cols();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(cells_.begin() + rows[r] * p, cells_.begin() + (rows[r] + 1) * p,
              out.cells_.begin() + r * p);
    out.row_source_[r] = row_source_[rows[r]];
  }
  return out;
}

std::size_t Dataset::count_missing() const {
  std::size_t k = 0;
  for (std::int32_t c : cells_) k += (c == kMissing);
  return k;
}

void Dataset::validate(bool enforce_design_missingness) const {
  const std::size_t p = n_cols();
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const std::int32_t c = code(i, j);
      if (c != kMissing && (c < 1 || c > schema_->var(j).num_levels)) {
        throw ValidationError("row " + std::to_string(i + 1) + ", column '" +
                              schema_->var(j).name + "': code out of range");
      }
    }
  }
  if (!enforce_design_missingness) return;
  for (std::size_t i = 0; i < n_rows_; ++i) {
    Role masked;
    if (row_source_[i] == Provenance::kD1) {
      masked = Role::kBprime;
    } else if (row_source_[i] == Provenance::kD2) {
      masked = Role::kB;
    } else {
      continue;
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (schema_->var(j).role == masked && observed(i, j)) {
        throw ValidationError("row " + std::to_string(i + 1) + ": a " +
                              to_string(row_source_[i]) + " row must not observe '" +
                              schema_->var(j).name + "'");
      }
    }
  }
}

bool Dataset::operator==(const Dataset& other) const {
  return schema_ && other.schema_ && *schema_ == *other.schema_ && n_rows_ == other.n_rows_ &&
         cells_ == other.cells_ && row_source_ == other.row_source_;
}

}  // namespace catfuse

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

#include "catfuse/schema.hpp"

#include <fstream>

#include "catfuse/errors.hpp"
#include "catfuse/numeric.hpp"

namespace catfuse {

Role role_from_string(const std::string& s) {
  if (s == "A") return Role::kA;
  if (s == "B") return Role::kB;
  if (s == "Bprime") return Role::kBprime;
  throw ValidationError("unknown role '" + s + "' (expected A, B, or Bprime)");
}

std::string to_string(Role role) {
  switch (role) {
    case Role::kA: return "A";
    case Role::kB: return "B";
    case Role::kBprime: return "Bprime";
  }
  return "?";
}

Schema::Schema(std::vector<Variable> variables) : vars_(std::move(variables)) {
  if (vars_.empty()) throw ValidationError("schema has no variables");
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    const Variable& v = vars_[j];
    if (v.name.empty()) throw ValidationError("schema variable has an empty name");
    if (v.name.find_first_of(",\r\n\"") != std::string::npos) {
      throw ValidationError("variable name '" + v.name + "' contains CSV delimiter characters");
    }
    if (v.num_levels < 2) {
      throw ValidationError("variable '" + v.name + "' must have at least 2 levels");
    }
    if (!index_.emplace(v.name, j).second) {
      throw ValidationError("duplicate variable name '" + v.name + "'");
    }
  }
}

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("schema JSON must be an array of variables");
  std::vector<Variable> vars;
  vars.reserve(j.size());
  for (const auto& entry : j) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("levels") ||
        !entry.contains("role")) {
      throw ValidationError("schema entry must be an object with name, levels, role");
    }
    Variable v;
    v.name = entry.at("name").get<std::string>();
    if (!entry.at("levels").is_number_integer()) {
      throw ValidationError("schema levels must be an integer");
    }
    v.num_levels = entry.at("levels").get<int>();
    v.role = role_from_string(entry.at("role").get<std::string>());
    vars.push_back(std::move(v));
  }
  return Schema(std::move(vars));
}

Schema Schema::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json Schema::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const Variable& v : vars_) {
    j.push_back({{"name", v.name}, {"levels", v.num_levels}, {"role", to_string(v.role)}});
  }
  return j;
}

bool Schema::contains(const std::string& name) const { return index_.count(name) > 0; }

std::size_t Schema::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown variable '" + name + "'");
  return it->second;
}

std::vector<std::size_t> Schema::indices_of(std::span<const std::string> names) const {
  std::vector<std::size_t> out;
  out.reserve(names.size());
  for (const auto& name : names) out.push_back(index_of(name));
  return out;
}

std::vector<std::size_t> Schema::role_columns(Role role) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (vars_[j].role == role) out.push_back(j);
  }
  return out;
}

bool Schema::has_all_roles() const {
  bool a = false;
  bool b = false;
  bool bp = false;
  for (const Variable& v : vars_) {
    a |= v.role == Role::kA;
    b |= v.role == Role::kB;
    bp |= v.role == Role::kBprime;
  }
  return a && b && bp;
}

void Schema::require_all_roles() const {
  if (!has_all_roles()) {
    throw ValidationError("fusion requires at least one variable in each of roles A, B, Bprime");
  }
}

std::uint64_t Schema::total_cells() const {
  std::vector<int> levels;
  levels.reserve(vars_.size());
  for (const Variable& v : vars_) levels.push_back(v.num_levels);
  return numeric::checked_cell_product(levels);
}

}  // namespace catfuse

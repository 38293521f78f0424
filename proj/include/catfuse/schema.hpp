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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace catfuse {

// Role of a variable in the fusion layout: A is common to both surveys,
// B is unique to the first survey, Bprime is unique to the second.
enum class Role { kA, kB, kBprime };

Role role_from_string(const std::string& s);
std::string to_string(Role role);

struct Variable {
  std::string name;
  int num_levels = 0;  // categorical codes run 1..num_levels
  Role role = Role::kA;

  bool operator==(const Variable&) const = default;
};

// Ordered list of categorical variables. Immutable after construction.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Variable> variables);

  // Schema files are a JSON array of {"name", "levels", "role"} objects.
  static Schema from_json(const nlohmann::json& j);
  static Schema from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::size_t num_vars() const { return vars_.size(); }
  const Variable& var(std::size_t j) const { return vars_[j]; }
  const std::vector<Variable>& vars() const { return vars_; }

  bool contains(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // throws on unknown name
  std::vector<std::size_t> indices_of(std::span<const std::string> names) const;
  std::vector<std::size_t> role_columns(Role role) const;

  // True when every role has at least one variable; required before fusion.
  bool has_all_roles() const;
  void require_all_roles() const;

  // Cell count of the full contingency table; throws on 64-bit overflow.
  std::uint64_t total_cells() const;

  bool operator==(const Schema& other) const { return vars_ == other.vars_; }

 private:
  std::vector<Variable> vars_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace catfuse

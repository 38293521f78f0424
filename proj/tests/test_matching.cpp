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

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "catfuse/dataset.hpp"
#include "catfuse/errors.hpp"
#include "catfuse/matching.hpp"
#include "catfuse/simulate.hpp"
#include "oracles.hpp"

using catfuse::Dataset;
using catfuse::exact_match_fuse;
using catfuse::kMissing;
using catfuse::MatchOptions;
using catfuse::MatchResult;
using catfuse::Provenance;
using catfuse::Role;
using catfuse::ValidationError;
using testsupport::make_dataset;
using testsupport::schema_ptr;

namespace {

std::shared_ptr<const catfuse::Schema> match_schema() {
  return schema_ptr({{"gender", 2, Role::kA},
                     {"age", 2, Role::kA},
                     {"ebook", 2, Role::kB},
                     {"hours", 3, Role::kBprime}});
}

}  // namespace

TEST_CASE("matching rejects unusable keys and schemas") {
  const auto schema = match_schema();
  const Dataset d1 = make_dataset(schema, Provenance::kD1, {{1, 1, 1, 0}});
  const Dataset d2 = make_dataset(schema, Provenance::kD2, {{1, 1, 0, 2}});

  MatchOptions empty;
  CHECK_THROWS_AS(exact_match_fuse(d1, d2, empty, 1), ValidationError);

  MatchOptions not_shared;
  not_shared.key = {"ebook"};
  CHECK_THROWS_AS(exact_match_fuse(d1, d2, not_shared, 1), ValidationError);

  MatchOptions unknown;
  unknown.key = {"height"};
  CHECK_THROWS_AS(exact_match_fuse(d1, d2, unknown, 1), ValidationError);

  const auto other = schema_ptr({{"gender", 2, Role::kA},
                                 {"age", 2, Role::kA},
                                 {"ebook", 2, Role::kB},
                                 {"hours", 4, Role::kBprime}});
  const Dataset foreign = make_dataset(other, Provenance::kD2, {{1, 1, 0, 2}});
  MatchOptions key;
  key.key = {"gender"};
  CHECK_THROWS_AS(exact_match_fuse(d1, foreign, key, 1), ValidationError);

  const auto no_bprime = schema_ptr({{"gender", 2, Role::kA}, {"ebook", 2, Role::kB}});
  const Dataset ab1 = make_dataset(no_bprime, Provenance::kComplete, {{1, 1}});
  const Dataset ab2 = make_dataset(no_bprime, Provenance::kComplete, {{1, 2}});
  CHECK_THROWS_AS(exact_match_fuse(ab1, ab2, key, 1), ValidationError);
}

TEST_CASE("a lone donor is always the one copied") {
  const auto schema = match_schema();
  const Dataset d1 = make_dataset(schema, Provenance::kD1,
                                  {{1, 2, 1, 0}, {2, 1, 2, 0}});
  const Dataset d2 = make_dataset(schema, Provenance::kD2,
                                  {{1, 2, 0, 3}, {2, 1, 0, 1}});
  MatchOptions opt;
  opt.key = {"gender", "age"};

  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    const MatchResult res = exact_match_fuse(d1, d2, opt, seed);
    CHECK(res.n_coarsened == 0);
    CHECK(res.d1_completed.code(0, 3) == 3);
    CHECK(res.d1_completed.code(1, 3) == 1);
    CHECK(res.d2_completed.code(0, 2) == 1);
    CHECK(res.d2_completed.code(1, 2) == 2);
    // Observed cells never change.
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(res.d1_completed.code(0, j) == d1.code(0, j));
    }
    CHECK(res.d1_completed.source(0) == Provenance::kD1);
  }
}

TEST_CASE("donated blocks come from donors sharing the key") {
  const catfuse::SyntheticSpec spec = [] {
    catfuse::SyntheticSpec s = catfuse::SyntheticSpec::builtin_default();
    s.n = 300;
    return s;
  }();
  const Dataset population = catfuse::draw_population(spec, 55);
  const catfuse::SplitResult split = catfuse::split_and_mask(population, 0.5, 55);

  MatchOptions opt;
  opt.key = {"gender"};
  const MatchResult res = exact_match_fuse(split.d1, split.d2, opt, 55);
  CHECK(res.n_coarsened == 0);
  CHECK(res.d1_completed.count_missing() == 0);
  CHECK(res.d2_completed.count_missing() == 0);
  CHECK(res.d1_completed.n_rows() == split.d1.n_rows());

  const std::size_t g = population.schema().index_of("gender");
  const std::size_t b = population.schema().index_of("ebook");
  const std::size_t bp = population.schema().index_of("hours");

  // Collect the donor value sets per key level on each side.
  std::set<std::pair<std::int32_t, std::int32_t>> d2_offers;
  for (std::size_t i = 0; i < split.d2.n_rows(); ++i) {
    d2_offers.emplace(split.d2.code(i, g), split.d2.code(i, bp));
  }
  std::set<std::pair<std::int32_t, std::int32_t>> d1_offers;
  for (std::size_t i = 0; i < split.d1.n_rows(); ++i) {
    d1_offers.emplace(split.d1.code(i, g), split.d1.code(i, b));
  }
  for (std::size_t i = 0; i < res.d1_completed.n_rows(); ++i) {
    CHECK(d2_offers.count({res.d1_completed.code(i, g), res.d1_completed.code(i, bp)}) == 1);
    // The observed block is untouched.
    CHECK(res.d1_completed.code(i, b) == split.d1.code(i, b));
  }
  for (std::size_t i = 0; i < res.d2_completed.n_rows(); ++i) {
    CHECK(d1_offers.count({res.d2_completed.code(i, g), res.d2_completed.code(i, b)}) == 1);
  }

  const MatchResult rerun = exact_match_fuse(split.d1, split.d2, opt, 55);
  CHECK(res.d1_completed == rerun.d1_completed);
  CHECK(res.d2_completed == rerun.d2_completed);
}

TEST_CASE("complete recipients are left alone") {
  const auto schema = match_schema();
  const Dataset d1 = make_dataset(schema, Provenance::kComplete, {{1, 1, 1, 2}});
  const Dataset d2 = make_dataset(schema, Provenance::kD2, {{1, 1, 0, 3}});
  MatchOptions opt;
  opt.key = {"gender"};
  const MatchResult res = exact_match_fuse(d1, d2, opt, 5);
  CHECK(res.d1_completed == d1);
  CHECK(res.d2_completed.code(0, 2) == 1);
}

TEST_CASE("recipients without an exact key donor fall back to shorter prefixes") {
  const auto schema = match_schema();
  // The (gender=1, age=2) recipient has no exact donor; gender=1 does. The
  // donor rows carry their own B values so only one direction donates.
  const Dataset d1 = make_dataset(schema, Provenance::kD1, {{1, 2, 1, 0}});
  const Dataset d2 = make_dataset(schema, Provenance::kD2,
                                  {{1, 1, 2, 2}, {2, 2, 1, 3}});
  MatchOptions opt;
  opt.key = {"gender", "age"};

  const MatchResult res = exact_match_fuse(d1, d2, opt, 11);
  CHECK(res.n_coarsened == 1);
  CHECK(res.d1_completed.code(0, 3) == 2);  // the gender=1 donor

  MatchOptions strict = opt;
  strict.strict = true;
  CHECK_THROWS_AS(exact_match_fuse(d1, d2, strict, 11), ValidationError);

  // With no shared key level at all the global pool still answers.
  const Dataset far = make_dataset(schema, Provenance::kD2, {{2, 1, 1, 3}});
  const MatchResult global = exact_match_fuse(d1, far, opt, 11);
  CHECK(global.n_coarsened == 1);
  CHECK(global.d1_completed.code(0, 3) == 3);

  // A recipient with a missing key cell also matches from a shorter prefix.
  const Dataset holed = make_dataset(schema, Provenance::kD1, {{0, 0, 2, 0}});
  const MatchResult from_pool = exact_match_fuse(holed, d2, opt, 11);
  CHECK(from_pool.n_coarsened == 1);
  CHECK(from_pool.d1_completed.code(0, 3) != kMissing);

  // No donor anywhere observes the block: error regardless of strictness.
  const Dataset no_block = make_dataset(schema, Provenance::kD2, {{1, 2, 1, 0}});
  CHECK_THROWS_AS(exact_match_fuse(d1, no_block, opt, 11), ValidationError);
}

TEST_CASE("match groups cover exactly the rows with complete keys") {
  const auto schema = match_schema();
  const Dataset d1 = make_dataset(schema, Provenance::kD1,
                                  {{1, 1, 1, 0}, {1, 1, 2, 0}, {0, 1, 1, 0}, {2, 2, 1, 0}});
  const Dataset d2 = make_dataset(schema, Provenance::kD2,
                                  {{1, 1, 0, 1}, {2, 2, 0, 2}});
  const std::vector<std::string> key{"gender", "age"};
  const catfuse::MatchGroupIndex groups = catfuse::build_match_groups(d1, d2, key);

  std::size_t d1_total = 0;
  for (const auto& [code, rows] : groups.d1_rows) d1_total += rows.size();
  CHECK(d1_total == 3);  // the row with a missing key cell is excluded
  std::size_t d2_total = 0;
  for (const auto& [code, rows] : groups.d2_rows) d2_total += rows.size();
  CHECK(d2_total == 2);

  // Rows 0 and 1 of d1 share (1,1) with row 0 of d2.
  bool found_shared = false;
  for (const auto& [code, rows] : groups.d1_rows) {
    if (rows.size() == 2) {
      found_shared = true;
      const auto it = groups.d2_rows.find(code);
      REQUIRE(it != groups.d2_rows.end());
      CHECK(it->second == std::vector<std::size_t>{0});
    }
  }
  CHECK(found_shared);
}

TEST_CASE("donor draws are uniform over the matching pool") {
  const auto schema = match_schema();
  const Dataset d1 = make_dataset(schema, Provenance::kD1, {{1, 1, 1, 0}});
  // Two donors offer hours=2 and one offers hours=3 under the same key.
  const Dataset d2 = make_dataset(schema, Provenance::kD2,
                                  {{1, 1, 0, 2}, {1, 1, 0, 2}, {1, 1, 0, 3}});
  MatchOptions opt;
  opt.key = {"gender", "age"};

  int hits2 = 0;
  const int reps = 3000;
  for (int seed = 1; seed <= reps; ++seed) {
    const MatchResult res = exact_match_fuse(d1, d2, opt, static_cast<std::uint64_t>(seed));
    if (res.d1_completed.code(0, 3) == 2) ++hits2;
  }
  const double share = static_cast<double>(hits2) / reps;
  CHECK(share == doctest::Approx(2.0 / 3.0).epsilon(0.08));
}

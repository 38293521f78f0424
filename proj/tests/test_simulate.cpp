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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "catfuse/contingency.hpp"
#include "catfuse/dataset.hpp"
#include "catfuse/errors.hpp"
#include "catfuse/simulate.hpp"
#include "oracles.hpp"

using catfuse::BiasDesign;
using catfuse::Dataset;
using catfuse::draw_population;
using catfuse::Hyperparams;
using catfuse::kMissing;
using catfuse::Provenance;
using catfuse::Role;
using catfuse::SamplerConfig;
using catfuse::Schema;
using catfuse::split_and_mask;
using catfuse::SyntheticSpec;
using catfuse::ValidationError;
using testsupport::schema_ptr;

namespace {

SamplerConfig light_config() {
  SamplerConfig cfg;
  cfg.burn_in = 20;
  cfg.n_iterations = 40;
  cfg.thin = 10;
  cfg.m = 2;
  return cfg;
}

SyntheticSpec single_class_spec(std::size_t n) {
  SyntheticSpec spec;
  spec.schema = SyntheticSpec::builtin_default().schema;
  spec.n = n;
  spec.split_fraction = 0.5;
  spec.class_weight = {1.0};
  spec.class_profile = {{{0.5, 0.5},
                         {0.3, 0.2, 0.2, 0.1, 0.1, 0.1},
                         {0.6, 0.4},
                         {0.5, 0.3, 0.2}}};
  return spec;
}

}  // namespace

TEST_CASE("the builtin generator and the shipped spec file agree") {
  const SyntheticSpec builtin = SyntheticSpec::builtin_default();
  CHECK_NOTHROW(builtin.validate());
  CHECK(builtin.n == 3566);
  CHECK(builtin.split_fraction == 0.5);
  CHECK(builtin.class_weight.size() == 4);

  const Schema& schema = *builtin.schema;
  CHECK(schema.num_vars() == 4);
  CHECK(schema.var(schema.index_of("gender")).role == Role::kA);
  CHECK(schema.var(schema.index_of("age")).role == Role::kA);
  CHECK(schema.var(schema.index_of("ebook")).role == Role::kB);
  CHECK(schema.var(schema.index_of("hours")).role == Role::kBprime);

  std::ifstream in("data/default_synthetic_spec.json");
  REQUIRE_MESSAGE(in.good(), "run from the repository root");
  const nlohmann::json file = nlohmann::json::parse(in);
  const SyntheticSpec parsed = SyntheticSpec::from_json(file);
  CHECK(parsed.to_json() == builtin.to_json());
}

TEST_CASE("synthetic specs reject inconsistent shapes") {
  SyntheticSpec ok = single_class_spec(100);
  CHECK_NOTHROW(ok.validate());

  SyntheticSpec no_schema = ok;
  no_schema.schema.reset();
  CHECK_THROWS_AS(no_schema.validate(), ValidationError);

  SyntheticSpec tiny = ok;
  tiny.n = 1;
  CHECK_THROWS_AS(tiny.validate(), ValidationError);

  SyntheticSpec bad_split = ok;
  bad_split.split_fraction = 0.0;
  CHECK_THROWS_AS(bad_split.validate(), ValidationError);
  bad_split.split_fraction = 1.0;
  CHECK_THROWS_AS(bad_split.validate(), ValidationError);

  SyntheticSpec no_classes = ok;
  no_classes.class_weight.clear();
  no_classes.class_profile.clear();
  CHECK_THROWS_AS(no_classes.validate(), ValidationError);

  SyntheticSpec off_simplex = ok;
  off_simplex.class_weight = {0.7, 0.7};
  off_simplex.class_profile.push_back(off_simplex.class_profile[0]);
  CHECK_THROWS_AS(off_simplex.validate(), ValidationError);

  SyntheticSpec missing_profile = ok;
  missing_profile.class_weight = {0.5, 0.5};
  CHECK_THROWS_AS(missing_profile.validate(), ValidationError);

  SyntheticSpec short_profile = ok;
  short_profile.class_profile[0].pop_back();
  CHECK_THROWS_AS(short_profile.validate(), ValidationError);

  SyntheticSpec wrong_levels = ok;
  wrong_levels.class_profile[0][0] = {0.5, 0.25, 0.25};
  CHECK_THROWS_AS(wrong_levels.validate(), ValidationError);

  SyntheticSpec negative = ok;
  negative.class_profile[0][2] = {1.2, -0.2};
  CHECK_THROWS_AS(negative.validate(), ValidationError);

  CHECK_THROWS_AS(SyntheticSpec::from_json(nlohmann::json::array()), ValidationError);
  CHECK_THROWS_AS(SyntheticSpec::from_json(nlohmann::json{{"n", 10}}), ValidationError);
}

TEST_CASE("exact cell probabilities mix the class profiles") {
  const SyntheticSpec spec = SyntheticSpec::builtin_default();

  const std::vector<std::pair<std::string, std::int32_t>> gender1{{"gender", 1}};
  CHECK(spec.cell_probability(gender1) == doctest::Approx(0.5).epsilon(1e-12));

  const std::vector<std::pair<std::string, std::int32_t>> ebook1{{"ebook", 1}};
  // 0.26*0.90 + 0.24*0.18 + 0.22*0.82 + 0.28*0.10 by hand.
  CHECK(spec.cell_probability(ebook1) == doctest::Approx(0.4856).epsilon(1e-12));

  // Brute-force mixture sum for a two-variable cell.
  const std::vector<std::pair<std::string, std::int32_t>> cell{{"gender", 1}, {"ebook", 1}};
  double expect = 0.0;
  for (std::size_t k = 0; k < spec.class_weight.size(); ++k) {
    expect += spec.class_weight[k] * spec.class_profile[k][0][0] * spec.class_profile[k][2][0];
  }
  CHECK(spec.cell_probability(cell) == doctest::Approx(expect).epsilon(1e-12));

  const std::vector<std::pair<std::string, std::int32_t>> empty;
  CHECK(spec.cell_probability(empty) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<std::pair<std::string, std::int32_t>> out_of_range{{"ebook", 3}};
  CHECK_THROWS_AS(spec.cell_probability(out_of_range), ValidationError);
  const std::vector<std::pair<std::string, std::int32_t>> unknown{{"minutes", 1}};
  CHECK_THROWS_AS(spec.cell_probability(unknown), ValidationError);
}

TEST_CASE("joint and conditional tables are consistent with cell probabilities") {
  const SyntheticSpec spec = SyntheticSpec::builtin_default();
  const std::vector<std::string> vars{"ebook", "hours"};
  const std::vector<double> table = spec.joint_table(vars);
  REQUIRE(table.size() == 6);

  double sum = 0.0;
  for (std::int32_t b = 1; b <= 2; ++b) {
    for (std::int32_t h = 1; h <= 3; ++h) {
      const std::vector<std::pair<std::string, std::int32_t>> cell{{"ebook", b}, {"hours", h}};
      const double p = spec.cell_probability(cell);
      CHECK(table[static_cast<std::size_t>((b - 1) * 3 + (h - 1))] ==
            doctest::Approx(p).epsilon(1e-12));
      sum += p;
    }
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<std::pair<std::string, std::int32_t>> given{{"gender", 1}, {"hours", 2}};
  const std::vector<double> cond = spec.conditional_table("ebook", given);
  REQUIRE(cond.size() == 2);
  CHECK(cond[0] + cond[1] == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<std::pair<std::string, std::int32_t>> joint_cell{
      {"gender", 1}, {"hours", 2}, {"ebook", 1}};
  const double ratio = spec.cell_probability(joint_cell) / spec.cell_probability(given);
  CHECK(cond[0] == doctest::Approx(ratio).epsilon(1e-12));

  // A conditioning event with zero generator mass cannot be normalized.
  SyntheticSpec degenerate = single_class_spec(100);
  degenerate.class_profile[0][2] = {1.0, 0.0};
  const std::vector<std::pair<std::string, std::int32_t>> impossible{{"ebook", 2}};
  CHECK_THROWS_AS(degenerate.conditional_table("hours", impossible), ValidationError);
}

TEST_CASE("drawn populations follow the generator") {
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = 20000;

  const Dataset pop = draw_population(spec, 7);
  REQUIRE(pop.n_rows() == 20000);
  CHECK(pop.count_missing() == 0);
  for (std::size_t i = 0; i < pop.n_rows(); i += 997) {
    CHECK(pop.source(i) == Provenance::kComplete);
  }
  CHECK_NOTHROW(pop.validate());

  const Dataset again = draw_population(spec, 7);
  CHECK(pop == again);
  const Dataset other = draw_population(spec, 8);
  CHECK_FALSE(pop == other);

  // Single-variable marginals against the analytic mixture.
  for (const std::string& name : {std::string("gender"), std::string("ebook")}) {
    const std::size_t col = spec.schema->index_of(name);
    const int levels = spec.schema->var(col).num_levels;
    for (std::int32_t y = 1; y <= levels; ++y) {
      double share = 0.0;
      for (std::size_t i = 0; i < pop.n_rows(); ++i) {
        if (pop.code(i, col) == y) share += 1.0;
      }
      share /= static_cast<double>(pop.n_rows());
      const std::vector<std::pair<std::string, std::int32_t>> cell{{name, y}};
      CHECK(share == doctest::Approx(spec.cell_probability(cell)).epsilon(0.05));
      CHECK(std::abs(share - spec.cell_probability(cell)) < 0.02);
    }
  }

  // Joint table of the two unseen blocks against the analytic mixture.
  const std::vector<std::string> vars{"ebook", "hours"};
  const catfuse::ContingencyTable table = catfuse::tabulate(pop, vars);
  const std::vector<double> observed = table.proportions();
  const std::vector<double> expected = spec.joint_table(vars);
  REQUIRE(observed.size() == expected.size());
  for (std::size_t c = 0; c < observed.size(); ++c) {
    CHECK(std::abs(observed[c] - expected[c]) < 0.02);
  }
}

TEST_CASE("splitting masks one block per survey and loses nothing else") {
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = 200;
  const Dataset pop = draw_population(spec, 3);

  const catfuse::SplitResult split = split_and_mask(pop, 0.5, 3);
  CHECK(split.d1.n_rows() == 100);
  CHECK(split.d2.n_rows() == 100);
  CHECK_NOTHROW(split.d1.validate());
  CHECK_NOTHROW(split.d2.validate());

  const Schema& schema = pop.schema();
  const std::size_t b = schema.index_of("ebook");
  const std::size_t bp = schema.index_of("hours");

  std::set<std::size_t> seen;
  for (std::size_t r = 0; r < split.d1.n_rows(); ++r) {
    const std::size_t src = split.d1_index[r];
    seen.insert(src);
    CHECK(split.d1.source(r) == Provenance::kD1);
    CHECK(split.d1.code(r, bp) == kMissing);
    for (std::size_t j = 0; j < schema.num_vars(); ++j) {
      if (j == bp) continue;
      CHECK(split.d1.code(r, j) == pop.code(src, j));
    }
  }
  for (std::size_t r = 0; r < split.d2.n_rows(); ++r) {
    const std::size_t src = split.d2_index[r];
    seen.insert(src);
    CHECK(split.d2.source(r) == Provenance::kD2);
    CHECK(split.d2.code(r, b) == kMissing);
    for (std::size_t j = 0; j < schema.num_vars(); ++j) {
      if (j == b) continue;
      CHECK(split.d2.code(r, j) == pop.code(src, j));
    }
  }
  CHECK(seen.size() == 200);  // a disjoint cover of the population

  const catfuse::SplitResult again = split_and_mask(pop, 0.5, 3);
  CHECK(split.d1 == again.d1);
  CHECK(split.d2 == again.d2);

  const catfuse::SplitResult lopsided = split_and_mask(pop, 0.9, 3);
  CHECK(lopsided.d1.n_rows() == 180);
  CHECK(lopsided.d2.n_rows() == 20);

  CHECK_THROWS_AS(split_and_mask(pop, 0.0, 3), ValidationError);
  CHECK_THROWS_AS(split_and_mask(pop, 1.0, 3), ValidationError);
}

TEST_CASE("biased glue oversamples, redraws, and respects the conditional") {
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = 40000;
  const Dataset pop = draw_population(spec, 13);
  const BiasDesign design = BiasDesign::builtin_default();
  const Dataset glue = catfuse::make_biased_glue(pop, spec, design, 13);

  const Schema& schema = pop.schema();
  const std::size_t g = schema.index_of("gender");
  const std::size_t a = schema.index_of("age");
  const std::size_t b = schema.index_of("ebook");
  const std::size_t h = schema.index_of("hours");

  CHECK(glue.count_missing() == 0);
  for (std::size_t i = 0; i < glue.n_rows(); i += 617) {
    CHECK(glue.source(i) == Provenance::kGlue);
  }

  // Selection: rows hit by an oversample rule always enter, others at 1/2.
  std::size_t certain = 0;
  std::size_t certain_g2 = 0;
  std::size_t g2 = 0;
  for (std::size_t i = 0; i < pop.n_rows(); ++i) {
    const bool hit = pop.code(i, g) >= 2 || pop.code(i, a) >= 5;
    if (hit) ++certain;
    if (pop.code(i, g) == 2) {
      ++g2;
      if (hit) ++certain_g2;
    }
  }
  const double expected_rows =
      static_cast<double>(certain) + 0.5 * static_cast<double>(pop.n_rows() - certain);
  CHECK(std::abs(static_cast<double>(glue.n_rows()) - expected_rows) < 400.0);

  double glue_g2 = 0.0;
  for (std::size_t i = 0; i < glue.n_rows(); ++i) {
    if (glue.code(i, g) == 2) glue_g2 += 1.0;
  }
  // Every gender=2 row is a certain inclusion, so its expected share is
  // g2 / expected_rows.
  CHECK(glue_g2 / static_cast<double>(glue.n_rows()) ==
        doctest::Approx(static_cast<double>(g2) / expected_rows).epsilon(0.05));
  CHECK(certain_g2 == g2);

  // The listed Bprime variable is redrawn from the fixed marginal, breaking
  // its link to the population's distribution.
  std::vector<double> hours_share(3, 0.0);
  for (std::size_t i = 0; i < glue.n_rows(); ++i) {
    hours_share[static_cast<std::size_t>(glue.code(i, h) - 1)] += 1.0;
  }
  for (double& s : hours_share) s /= static_cast<double>(glue.n_rows());
  CHECK(std::abs(hours_share[0] - 0.70) < 0.03);
  CHECK(std::abs(hours_share[1] - 0.15) < 0.03);
  CHECK(std::abs(hours_share[2] - 0.15) < 0.03);

  // The B variable follows the population's empirical conditional given the
  // shared variables and the redrawn Bprime value.
  std::map<std::vector<std::int32_t>, std::pair<double, double>> pop_cond;
  for (std::size_t i = 0; i < pop.n_rows(); ++i) {
    const std::vector<std::int32_t> key{pop.code(i, g), pop.code(i, a), pop.code(i, h)};
    auto& [ones, total] = pop_cond[key];
    if (pop.code(i, b) == 1) ones += 1.0;
    total += 1.0;
  }
  std::map<std::vector<std::int32_t>, std::pair<double, double>> glue_cond;
  for (std::size_t i = 0; i < glue.n_rows(); ++i) {
    const std::vector<std::int32_t> key{glue.code(i, g), glue.code(i, a), glue.code(i, h)};
    auto& [ones, total] = glue_cond[key];
    if (glue.code(i, b) == 1) ones += 1.0;
    total += 1.0;
  }
  std::size_t checked = 0;
  for (const auto& [key, stat] : glue_cond) {
    const auto it = pop_cond.find(key);
    if (it == pop_cond.end()) continue;
    if (stat.second < 300.0 || it->second.second < 300.0) continue;
    const double glue_rate = stat.first / stat.second;
    const double pop_rate = it->second.first / it->second.second;
    CHECK(std::abs(glue_rate - pop_rate) < 0.1);
    ++checked;
  }
  CHECK(checked >= 6);

  const Dataset same = catfuse::make_biased_glue(pop, spec, design, 13);
  CHECK(glue == same);

  BiasDesign bad = design;
  bad.bprime_marginal = {0.5, 0.5};
  CHECK_THROWS_AS(catfuse::make_biased_glue(pop, spec, bad, 13), ValidationError);
  BiasDesign zero_rate = design;
  zero_rate.base_rate = 0.0;
  CHECK_THROWS_AS(catfuse::make_biased_glue(pop, spec, zero_rate, 13), ValidationError);
  BiasDesign swapped = design;
  swapped.b_var = "hours";
  swapped.bprime_var = "ebook";
  CHECK_THROWS_AS(catfuse::make_biased_glue(pop, spec, swapped, 13), ValidationError);
}

TEST_CASE("the richness study walks the glue ladder in a fixed order") {
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = 240;
  const std::vector<std::uint64_t> seeds{1};
  Hyperparams hp;
  hp.num_classes = 8;

  const catfuse::RichnessStudy study =
      catfuse::run_richness_study(spec, seeds, hp, light_config());

  const std::vector<std::string> expected_labels{
      "no glue",
      "glue {ebook,hours}",
      "glue {ebook,hours,gender}",
      "glue {ebook,hours,age}",
      "glue {ebook,hours,gender,age}",
      "exact matching"};
  REQUIRE(study.rungs.size() == expected_labels.size());
  for (std::size_t r = 0; r < study.rungs.size(); ++r) {
    CHECK(study.rungs[r].label == expected_labels[r]);
    REQUIRE(study.rungs[r].per_seed_hellinger.size() == 1);
    REQUIRE(study.rungs[r].per_seed_misclassified.size() == 1);
    CHECK(study.rungs[r].mean_hellinger == study.rungs[r].per_seed_hellinger[0]);
    CHECK(study.rungs[r].mean_hellinger >= 0.0);
    CHECK(study.rungs[r].mean_hellinger <= 1.0);
    CHECK(study.rungs[r].mean_misclassified >= 0.0);
  }
  CHECK(study.rung("no glue").label == "no glue");
  CHECK_THROWS_AS(study.rung("nope"), ValidationError);

  const nlohmann::json j = study.to_json();
  CHECK(j.at("rungs").size() == 6);
  CHECK(j.at("seeds") == nlohmann::json(seeds));
  CHECK(study.to_text().find("exact matching") != std::string::npos);

  const std::vector<std::uint64_t> none;
  CHECK_THROWS_AS(catfuse::run_richness_study(spec, none, hp, light_config()), ValidationError);
}

TEST_CASE("an independent generator needs no glue") {
  // One latent class makes the unseen blocks independent, so the no-glue fit
  // and the fully glued fit land on the same joint table.
  const SyntheticSpec spec = single_class_spec(400);
  const std::vector<std::uint64_t> seeds{2};
  Hyperparams hp;
  hp.num_classes = 6;
  SamplerConfig cfg;
  cfg.burn_in = 100;
  cfg.n_iterations = 200;
  cfg.thin = 20;
  cfg.m = 5;

  const catfuse::RichnessStudy study = catfuse::run_richness_study(spec, seeds, hp, cfg);
  const double no_glue = study.rung("no glue").mean_hellinger;
  const double full = study.rung("glue {ebook,hours,gender,age}").mean_hellinger;
  CHECK(no_glue < 0.25);
  CHECK(std::abs(no_glue - full) < 0.08);
}

TEST_CASE("the size study records per seed truth, widths, and coverage") {
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = 400;
  const std::vector<std::uint64_t> seeds{5};
  const std::vector<std::size_t> ladder{0, 200};
  Hyperparams hp;
  hp.num_classes = 8;
  SamplerConfig cfg;
  cfg.burn_in = 50;
  cfg.n_iterations = 100;
  cfg.thin = 10;
  cfg.m = 5;

  const catfuse::SizeStudy study = catfuse::run_size_study(spec, ladder, seeds, hp, cfg);
  CHECK(study.b_var == "ebook");
  CHECK(study.bprime_var == "hours");
  REQUIRE(study.rungs.size() == 2);
  CHECK(study.rungs[0].n_s == 0);
  CHECK(study.rungs[1].n_s == 200);

  // Truth is the drawn population's empirical cell share, identical across
  // rungs for a given seed.
  const Dataset pop = draw_population(spec, 5);
  const std::vector<std::string> vars{"ebook", "hours"};
  const catfuse::ContingencyTable pop_table = catfuse::tabulate(pop, vars);
  const std::vector<double> pop_probs = pop_table.proportions();

  for (const catfuse::SizeRung& rung : study.rungs) {
    REQUIRE(rung.cells.size() == 6);
    double truth_sum = 0.0;
    for (const catfuse::SizeCell& cell : rung.cells) {
      REQUIRE(cell.per_seed_truth.size() == 1);
      REQUIRE(cell.per_seed_mean.size() == 1);
      REQUIRE(cell.per_seed_width.size() == 1);
      REQUIRE(cell.per_seed_covered.size() == 1);
      CHECK(cell.truth == cell.per_seed_truth[0]);
      const std::vector<std::int32_t> codes{cell.b_level, cell.bprime_level};
      CHECK(cell.truth ==
            doctest::Approx(pop_probs[pop_table.flat_index(codes)]).epsilon(1e-12));
      CHECK(cell.per_seed_width[0] >= 0.0);
      CHECK(cell.per_seed_mean[0] >= 0.0);
      CHECK(cell.per_seed_mean[0] <= 1.0);
      truth_sum += cell.truth;
    }
    CHECK(truth_sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  const nlohmann::json j = study.to_json();
  CHECK(j.at("rungs")[0].at("cells")[0].contains("per_seed_truth"));
  CHECK(study.to_text().find("glue size 200") != std::string::npos);

  const std::vector<std::size_t> empty_ladder;
  CHECK_THROWS_AS(catfuse::run_size_study(spec, empty_ladder, seeds, hp, cfg), ValidationError);
  const std::vector<std::uint64_t> no_seeds;
  CHECK_THROWS_AS(catfuse::run_size_study(spec, ladder, no_seeds, hp, cfg), ValidationError);
}

TEST_CASE("the bias study reports both completion directions") {
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = 600;
  Hyperparams hp;
  hp.num_classes = 8;
  SamplerConfig cfg;
  cfg.burn_in = 40;
  cfg.n_iterations = 80;
  cfg.thin = 10;
  cfg.m = 2;

  const catfuse::BiasStudy study =
      catfuse::run_bias_study(spec, BiasDesign::builtin_default(), 9, hp, cfg);

  REQUIRE(study.b_direction.variables.size() == 1);
  CHECK(study.b_direction.variables[0].name == "ebook");
  REQUIRE(study.bprime_direction.variables.size() == 1);
  CHECK(study.bprime_direction.variables[0].name == "hours");
  CHECK(study.b_direction.max_abs_diff >= 0.0);
  CHECK(study.bprime_direction.max_abs_diff >= 0.0);

  const nlohmann::json j = study.to_json();
  CHECK(j.contains("b_direction"));
  CHECK(j.contains("bprime_direction"));
  const std::string verdict = j.at("b_direction").at("verdict").get<std::string>();
  CHECK((verdict == "PASS" || verdict == "FAIL"));
  CHECK(study.to_text().find("direction: impute B") != std::string::npos);
}

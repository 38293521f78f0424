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

// Acceptance gate. Each criterion prints one PASS or FAIL line; the process
// exits 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "catfuse/contingency.hpp"
#include "catfuse/dataset.hpp"
#include "catfuse/harness.hpp"
#include "catfuse/metrics.hpp"
#include "catfuse/model.hpp"
#include "catfuse/rng.hpp"
#include "catfuse/sampler.hpp"
#include "catfuse/schema.hpp"
#include "catfuse/simulate.hpp"

#include "../oracles.hpp"

namespace {

namespace fs = std::filesystem;
using catfuse::ContingencyTable;
using catfuse::Dataset;
using catfuse::Hyperparams;
using catfuse::Provenance;
using catfuse::Role;
using catfuse::RunConfig;
using catfuse::SamplerConfig;
using catfuse::Schema;
using catfuse::SyntheticSpec;
using catfuse::Variable;
using catfuse::rng::derive_stream;
using catfuse::rng::StreamPurpose;
using catfuse::rng::Xoshiro256;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double vec_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double vec_sd(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Swallows report text that commands print while a criterion runs.
struct CoutSilencer {
  std::ostringstream sink;
  std::streambuf* saved;
  CoutSilencer() : saved(std::cout.rdbuf(sink.rdbuf())) {}
  ~CoutSilencer() { std::cout.rdbuf(saved); }
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << x;
  return out.str();
}

// Criterion 1: with one latent class and complete data the class profiles
// have a closed-form Dirichlet posterior; the sampler's draws must agree.
Outcome criterion_conjugate() {
  const auto schema = testsupport::schema_ptr(
      {{"x", 2, Role::kA}, {"y", 2, Role::kA}});
  Xoshiro256 g(derive_stream(9001, StreamPurpose::kHarness, 1));
  const std::size_t n = 200;
  std::vector<std::vector<std::int32_t>> rows(n, std::vector<std::int32_t>(2));
  for (auto& r : rows) {
    r[0] = g.u01() < 0.65 ? 1 : 2;
    r[1] = g.u01() < 0.40 ? 1 : 2;
  }
  const Dataset data = testsupport::make_dataset(schema, Provenance::kComplete, rows);

  Hyperparams hp;
  hp.num_classes = 1;
  SamplerConfig cfg;
  cfg.burn_in = 200;
  cfg.n_iterations = 2200;
  cfg.thin = 1;
  cfg.m = 2000;
  cfg.seed = 7;
  cfg.keep_param_draws = true;
  const catfuse::ChainResult result = catfuse::run_chain(data, hp, cfg);
  const std::size_t draws = result.summary.profile_draws.size();
  if (draws != 2000) {
    return {false, "expected 2000 retained draws, got " + std::to_string(draws)};
  }

  double worst = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    std::array<std::int64_t, 2> count{0, 0};
    for (const auto& r : rows) count[static_cast<std::size_t>(r[j] - 1)]++;
    for (std::size_t y = 0; y < 2; ++y) {
      const double closed =
          (1.0 + static_cast<double>(count[y])) / (2.0 + static_cast<double>(n));
      std::vector<double> sample;
      sample.reserve(draws);
      for (const auto& draw : result.summary.profile_draws) {
        sample.push_back(draw[2 * j + y]);
      }
      const double mean = vec_mean(sample);
      const double se = vec_sd(sample, mean) / std::sqrt(static_cast<double>(draws));
      worst = std::max(worst, std::abs(mean - closed) / se);
    }
  }
  return {worst <= 3.0, "worst deviation " + fmt(worst, 2) + " MC SE over 2000 draws"};
}

// Criterion 2: 20,000 auxiliary rows observing only one balanced binary
// variable pull its posterior marginal to 0.5 despite a skewed 500-row
// survey.
Outcome criterion_pinning() {
  const auto schema = testsupport::schema_ptr(
      {{"x", 2, Role::kA}, {"y", 2, Role::kA}});
  std::vector<std::vector<std::int32_t>> survey_rows;
  survey_rows.reserve(500);
  for (std::size_t i = 0; i < 500; ++i) {
    survey_rows.push_back({i < 350 ? 1 : 2, i % 2 == 0 ? 1 : 2});
  }
  std::vector<std::vector<std::int32_t>> glue_rows;
  glue_rows.reserve(20000);
  for (std::size_t i = 0; i < 20000; ++i) {
    glue_rows.push_back({i < 10000 ? 1 : 2, catfuse::kMissing});
  }
  const Dataset survey = testsupport::make_dataset(schema, Provenance::kComplete, survey_rows);
  const Dataset glue = testsupport::make_dataset(schema, Provenance::kGlue, glue_rows);
  const std::vector<Dataset> parts{survey, glue};
  const Dataset stacked = Dataset::concat(parts);

  Hyperparams hp;
  hp.num_classes = 15;
  SamplerConfig cfg;
  cfg.burn_in = 200;
  cfg.n_iterations = 500;
  cfg.thin = 10;
  cfg.m = 30;
  cfg.seed = 2;
  cfg.keep_param_draws = true;
  const catfuse::ChainResult result = catfuse::run_chain(stacked, hp, cfg);
  const std::vector<std::pair<std::string, std::int32_t>> cell{{"x", 1}};
  const double marginal =
      catfuse::joint_probability(result.summary, *schema, cell).mean;
  return {marginal >= 0.48 && marginal <= 0.52,
          "posterior marginal " + fmt(marginal) + " target [0.48, 0.52]"};
}

// Criterion 3: richer auxiliary data yields a strictly better fused joint
// table, and matching is no better than fusing with no auxiliary data.
Outcome criterion_richness() {
  const SyntheticSpec spec = SyntheticSpec::builtin_default();
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  Hyperparams hp;
  SamplerConfig cfg;
  cfg.burn_in = 400;
  cfg.n_iterations = 800;
  cfg.thin = 40;
  cfg.m = 10;
  cfg.seed = 0;
  const catfuse::RichnessStudy study = catfuse::run_richness_study(spec, seeds, hp, cfg);

  const double none = study.rung("no glue").mean_hellinger;
  const double bb = study.rung("glue {ebook,hours}").mean_hellinger;
  const double bba = study.rung("glue {ebook,hours,age}").mean_hellinger;
  const double full = study.rung("glue {ebook,hours,gender,age}").mean_hellinger;
  const double matching = study.rung("exact matching").mean_hellinger;
  const double rel = std::abs(matching - none) / none;

  const bool ordered = none > bb && bb > bba && bba >= full;
  return {ordered && rel <= 0.15,
          fmt(none) + " > " + fmt(bb) + " > " + fmt(bba) + " >= " + fmt(full) +
              "; matching " + fmt(matching) + " within " + fmt(100.0 * rel, 1) +
              "% of no glue"};
}

// Criterion 4: growing the auxiliary sample tightens every joint-cell
// interval and the largest sample still covers the drawn populations' cells.
Outcome criterion_size() {
  const SyntheticSpec spec = SyntheticSpec::builtin_default();
  const std::vector<std::size_t> ladder{0, spec.n / 2, 2 * spec.n};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  Hyperparams hp;
  SamplerConfig cfg;
  cfg.burn_in = 500;
  cfg.n_iterations = 1100;
  cfg.thin = 20;
  cfg.m = 30;
  cfg.seed = 0;
  const catfuse::SizeStudy study = catfuse::run_size_study(spec, ladder, seeds, hp, cfg);

  const std::size_t n_cells = study.rungs.front().cells.size();
  const std::size_t n_seeds = seeds.size();
  std::size_t monotone_cells = 0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::size_t chains = 0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const double w0 = study.rungs[0].cells[c].per_seed_width[s];
      const double w1 = study.rungs[1].cells[c].per_seed_width[s];
      const double w2 = study.rungs[2].cells[c].per_seed_width[s];
      if (w0 >= w1 && w1 >= w2) ++chains;
    }
    if (2 * chains > n_seeds) ++monotone_cells;
  }

  std::string coverage_note;
  bool covered = true;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    std::size_t hits = 0;
    for (const catfuse::SizeCell& cell : study.rungs[2].cells) {
      if (cell.per_seed_covered[s]) ++hits;
    }
    if (hits + 1 < n_cells) covered = false;
    coverage_note += (s ? "," : "") + std::to_string(hits);
  }

  return {monotone_cells == n_cells && covered,
          "width majority non-increasing in " + std::to_string(monotone_cells) + "/" +
              std::to_string(n_cells) + " cells; coverage per seed at 2n: " +
              coverage_note + " of " + std::to_string(n_cells)};
}

// Criterion 5: the representativeness diagnostic accepts the direction the
// biased auxiliary data can support and rejects the direction it cannot.
Outcome criterion_bias() {
  const SyntheticSpec spec = SyntheticSpec::builtin_default();
  const catfuse::BiasDesign design = catfuse::BiasDesign::builtin_default();
  Hyperparams hp;
  SamplerConfig cfg;
  cfg.burn_in = 400;
  cfg.n_iterations = 800;
  cfg.thin = 40;
  cfg.m = 10;
  cfg.seed = 0;
  const catfuse::BiasStudy study = catfuse::run_bias_study(spec, design, 1, hp, cfg);

  const bool b_ok = study.b_direction.pass && study.b_direction.max_abs_diff <= 0.05;
  const bool bprime_ok =
      !study.bprime_direction.pass && study.bprime_direction.max_abs_diff >= 0.10;
  return {b_ok && bprime_ok,
          "B direction max diff " + fmt(study.b_direction.max_abs_diff) +
              " (PASS wanted); B' direction max diff " +
              fmt(study.bprime_direction.max_abs_diff) + " (FAIL wanted)"};
}

// Criterion 6: every released metric matches an independently coded
// brute-force reference on random inputs.
Outcome criterion_metric_oracles() {
  Xoshiro256 g(derive_stream(31337, StreamPurpose::kHarness, 6));
  double worst_h = 0.0;
  double worst_mc = 0.0;
  double worst_fb = 0.0;
  double worst_mi_exact = 0.0;
  double worst_mi_quantile = 0.0;

  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 2 + static_cast<std::size_t>(g.next() % 6);
    const std::vector<double> p = testsupport::random_simplex(g, k);
    const std::vector<double> q = testsupport::random_simplex(g, k);
    worst_h = std::max(worst_h,
                       std::abs(catfuse::hellinger(p, q) - testsupport::oracle_hellinger(p, q)));
  }

  const auto mc_schema = testsupport::schema_ptr(
      {{"u", 3, Role::kA}, {"v", 2, Role::kA}});
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 10 + static_cast<std::size_t>(g.next() % 30);
    const auto random_table = [&] {
      std::vector<std::vector<std::int32_t>> rows(n, std::vector<std::int32_t>(2));
      for (auto& r : rows) {
        r[0] = 1 + static_cast<std::int32_t>(g.next() % 3);
        r[1] = 1 + static_cast<std::int32_t>(g.next() % 2);
      }
      const Dataset d = testsupport::make_dataset(mc_schema, Provenance::kComplete, rows);
      return catfuse::tabulate(d, std::vector<std::string>{"u", "v"});
    };
    const ContingencyTable truth = random_table();
    const std::vector<ContingencyTable> imputations{random_table(), random_table(),
                                                    random_table()};
    worst_mc = std::max(worst_mc,
                        std::abs(catfuse::misclassified_count(truth, imputations) -
                                 testsupport::oracle_misclassified(truth, imputations)));
  }

  for (int rep = 0; rep < 100; ++rep) {
    const int la = 2 + static_cast<int>(g.next() % 2);
    const int lb = 2 + static_cast<int>(g.next() % 2);
    const int lk = 2 + static_cast<int>(g.next() % 2);
    const auto schema = testsupport::schema_ptr(
        {{"a", la, Role::kA}, {"b", lb, Role::kB}, {"c", lk, Role::kBprime}});
    const auto random_side = [&](bool first) {
      const std::size_t n = 20 + static_cast<std::size_t>(g.next() % 40);
      std::vector<std::vector<std::int32_t>> rows(n, std::vector<std::int32_t>(3));
      for (auto& r : rows) {
        r[0] = 1 + static_cast<std::int32_t>(g.next() % static_cast<std::uint64_t>(la));
        r[1] = first ? 1 + static_cast<std::int32_t>(g.next() % static_cast<std::uint64_t>(lb))
                     : catfuse::kMissing;
        r[2] = first ? catfuse::kMissing
                     : 1 + static_cast<std::int32_t>(g.next() % static_cast<std::uint64_t>(lk));
      }
      return testsupport::make_dataset(schema, first ? Provenance::kD1 : Provenance::kD2, rows);
    };
    const Dataset d1 = random_side(true);
    const Dataset d2 = random_side(false);
    for (const bool conditional : {false, true}) {
      const catfuse::FrechetBoundsResult res =
          catfuse::frechet_bounds(d1, d2, "b", "c", conditional);
      const auto oracle = testsupport::oracle_frechet(d1, d2, "b", "c", conditional);
      for (std::size_t i = 0; i < res.intervals.size(); ++i) {
        worst_fb = std::max(worst_fb, std::abs(res.intervals[i].lower - oracle[i].lower));
        worst_fb = std::max(worst_fb, std::abs(res.intervals[i].upper - oracle[i].upper));
      }
    }
  }

  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = 2 + static_cast<std::size_t>(g.next() % 8);
    std::vector<std::pair<double, double>> estimates(m);
    for (auto& [qv, uv] : estimates) {
      qv = g.u01();
      uv = 0.0001 + 0.01 * g.u01();
    }
    const catfuse::MIEstimate lib = catfuse::mi_combine(estimates);
    const testsupport::OracleMI ora = testsupport::oracle_mi(estimates);
    worst_mi_exact = std::max({worst_mi_exact, std::abs(lib.q_bar - ora.q_bar),
                               std::abs(lib.within - ora.within),
                               std::abs(lib.between - ora.between),
                               std::abs(lib.total - ora.total)});
    worst_mi_quantile = std::max({worst_mi_quantile, std::abs(lib.lower - ora.lower),
                                  std::abs(lib.upper - ora.upper)});
    if (std::isfinite(lib.df) || std::isfinite(ora.df)) {
      worst_mi_quantile = std::max(worst_mi_quantile, std::abs(lib.df - ora.df));
    }
  }

  const bool pass = worst_h <= 1e-9 && worst_mc <= 1e-9 && worst_fb <= 1e-9 &&
                    worst_mi_exact <= 1e-9 && worst_mi_quantile <= 1e-6;
  std::ostringstream detail;
  detail << std::scientific << std::setprecision(1) << "max deviations: hellinger " << worst_h
         << ", misclassified " << worst_mc << ", bounds " << worst_fb << ", combine "
         << worst_mi_exact << ", combine intervals " << worst_mi_quantile;
  return {pass, detail.str()};
}

// Criterion 7: conditional interval bounds always contain the generating
// population's joint cells and never exceed the unconditional widths.
Outcome criterion_envelope() {
  Xoshiro256 g(derive_stream(777, StreamPurpose::kHarness, 7));
  const SyntheticSpec base = SyntheticSpec::builtin_default();
  const Schema& schema = *base.schema;
  std::size_t cells_checked = 0;

  for (int rep = 0; rep < 20; ++rep) {
    SyntheticSpec spec;
    spec.schema = base.schema;
    spec.n = 500 + static_cast<std::size_t>(g.next() % 1500);
    const std::size_t classes = 2 + static_cast<std::size_t>(g.next() % 4);
    spec.class_weight = testsupport::random_simplex(g, classes);
    spec.class_profile.resize(classes);
    for (auto& profile : spec.class_profile) {
      profile.clear();
      for (const Variable& v : schema.vars()) {
        profile.push_back(
            testsupport::random_simplex(g, static_cast<std::size_t>(v.num_levels)));
      }
    }
    spec.validate();

    const Dataset population = catfuse::draw_population(spec, g.next());
    const std::size_t jb = schema.index_of("ebook");
    const std::size_t jk = schema.index_of("hours");
    const auto masked = [&](bool first) {
      std::vector<std::vector<std::int32_t>> rows(population.n_rows(),
                                                  std::vector<std::int32_t>(schema.num_vars()));
      for (std::size_t i = 0; i < population.n_rows(); ++i) {
        for (std::size_t j = 0; j < schema.num_vars(); ++j) {
          rows[i][j] = population.code(i, j);
        }
        rows[i][first ? jk : jb] = catfuse::kMissing;
      }
      return testsupport::make_dataset(base.schema, first ? Provenance::kD1 : Provenance::kD2,
                                       rows);
    };
    const Dataset d1 = masked(true);
    const Dataset d2 = masked(false);

    const ContingencyTable truth_table =
        catfuse::tabulate(population, std::vector<std::string>{"ebook", "hours"});
    const std::vector<double> truth = truth_table.proportions();
    const catfuse::FrechetBoundsResult cond = catfuse::frechet_bounds(d1, d2, "ebook", "hours", true);
    const catfuse::FrechetBoundsResult uncond =
        catfuse::frechet_bounds(d1, d2, "ebook", "hours", false);

    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] < cond.intervals[i].lower - 1e-9 ||
          truth[i] > cond.intervals[i].upper + 1e-9) {
        return {false, "population " + std::to_string(rep) + " cell " + std::to_string(i) +
                           " outside its conditional interval"};
      }
      if (cond.intervals[i].width() > uncond.intervals[i].width() + 1e-9) {
        return {false, "population " + std::to_string(rep) + " cell " + std::to_string(i) +
                           " conditional interval wider than unconditional"};
      }
      ++cells_checked;
    }
  }
  return {true, std::to_string(cells_checked) +
                    " cells contained with conditional widths never wider"};
}

// Criterion 8: one run configuration reproduces every output file exactly.
Outcome criterion_determinism() {
  testsupport::TempDir dir("catfuse-accept");
  SyntheticSpec spec = SyntheticSpec::builtin_default();
  spec.n = 600;
  const Dataset population = catfuse::draw_population(spec, 99);
  const catfuse::SplitResult split = catfuse::split_and_mask(population, 0.5, 99);

  RunConfig config;
  config.schema_path = dir.path() / "schema.json";
  config.d1_path = dir.path() / "d1.csv";
  config.d2_path = dir.path() / "d2.csv";
  config.glue_path = dir.path() / "glue.csv";
  config.output_dir = dir.path() / "out";
  catfuse::write_text_atomic(config.schema_path, spec.schema->to_json().dump(2) + "\n");
  split.d1.save_csv(config.d1_path);
  split.d2.save_csv(config.d2_path);
  population.save_csv(config.glue_path);
  config.glue.mode = catfuse::GlueMode::kDuplicate;
  config.glue.variables_kept = {"ebook", "hours"};
  config.glue.n_s = 200;
  config.hyper.num_classes = 8;
  config.sampler.burn_in = 40;
  config.sampler.n_iterations = 80;
  config.sampler.thin = 8;
  config.sampler.m = 3;
  config.sampler.seed = 17;

  const auto snapshot = [&] {
    std::map<std::string, std::string> bytes;
    for (const auto& entry : fs::directory_iterator(config.output_dir)) {
      std::ifstream in(entry.path(), std::ios::binary);
      bytes[entry.path().filename().string()] =
          std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    return bytes;
  };

  {
    CoutSilencer quiet;
    if (catfuse::cmd_fuse(config) != 0) return {false, "first run returned nonzero"};
  }
  const std::map<std::string, std::string> first = snapshot();
  {
    CoutSilencer quiet;
    if (catfuse::cmd_fuse(config) != 0) return {false, "second run returned nonzero"};
  }
  const std::map<std::string, std::string> second = snapshot();

  if (first.size() != second.size() || first.empty()) {
    return {false, "output file sets differ between runs"};
  }
  for (const auto& [name, content] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != content) {
      return {false, name + " differs between runs"};
    }
  }
  return {true, std::to_string(first.size()) + " output files byte-identical across reruns"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double time_limit_s;  // 0 means unbounded
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria{
      {1, "conjugate posterior", 10.0, criterion_conjugate},
      {2, "marginal pinning", 60.0, criterion_pinning},
      {3, "glue richness ladder", 900.0, criterion_richness},
      {4, "glue size ladder", 900.0, criterion_size},
      {5, "nonrepresentative glue diagnostic", 600.0, criterion_bias},
      {6, "metric oracles", 0.0, criterion_metric_oracles},
      {7, "interval bound envelope", 0.0, criterion_envelope},
      {8, "byte determinism", 0.0, criterion_determinism},
  };

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && elapsed > c.time_limit_s) {
      outcome.pass = false;
      outcome.detail += "; exceeded " + fmt(c.time_limit_s, 0) + "s budget";
    }
    all_pass = all_pass && outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << outcome.detail << " [" << fmt(elapsed, 1) << "s]" << std::endl;
  }
  return all_pass ? 0 : 1;
}

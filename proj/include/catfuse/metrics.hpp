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
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "catfuse/contingency.hpp"
#include "catfuse/dataset.hpp"

namespace catfuse {

// 0.975 quantile of the standard normal, used when between-variance is zero.
inline constexpr double kZ975 = 1.9599639845400545;

// Hellinger distance 2^{-1/2} * sqrt(sum (sqrt(p_i) - sqrt(q_i))^2).
// Both inputs must be probability vectors of equal length.
double hellinger(std::span<const double> p, std::span<const double> q);

// Average over imputed tables of half the L1 distance to the reference
// counts: (1/m) * sum_m 0.5 * sum_j |n_j - nhat_j^(m)|.
double misclassified_count(const ContingencyTable& truth,
                           std::span<const ContingencyTable> imputations);

struct FrechetInterval {
  std::int32_t b_level = 0;       // 1-based level of the first variable
  std::int32_t bprime_level = 0;  // 1-based level of the second variable
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
};

struct FrechetBoundsResult {
  std::string b_var;
  std::string bprime_var;
  bool conditional = false;
  // Row-major over (b_level, bprime_level).
  std::vector<FrechetInterval> intervals;
  // Conditioning cells that carried mass, and how many of them were observed
  // in only one of the two datasets (those fall back to the vacuous bound).
  std::size_t n_condition_cells = 0;
  std::size_t n_one_sided_cells = 0;

  const FrechetInterval& at(std::int32_t b_level, std::int32_t bprime_level) const;
};

// Bounds on P(b_var = j, bprime_var = k) from two datasets that never observe
// the pair jointly. Unconditional mode uses the two marginals. Conditional
// mode computes the bound within every cell of the cross-classification of
// the shared variables, then aggregates with pooled cell masses.
FrechetBoundsResult frechet_bounds(const Dataset& d1, const Dataset& d2,
                                   const std::string& b_var, const std::string& bprime_var,
                                   bool condition_on_A);

struct MIEstimate {
  std::size_t m = 0;
  double q_bar = 0.0;
  double within = 0.0;
  double between = 0.0;
  double total = 0.0;
  // +infinity when between-variance is zero (normal quantile is used then).
  double df = std::numeric_limits<double>::infinity();
  double lower = 0.0;
  double upper = 0.0;
};

// Combines per-imputation (estimate, variance) pairs: q_bar is the mean
// estimate, within the mean variance, between the sample variance of the
// estimates, total = within + (1+1/m)*between, and the 95% interval uses the
// t quantile with df = (m-1)*(1 + within/((1+1/m)*between))^2.
MIEstimate mi_combine(std::span<const std::pair<double, double>> estimates);

// Quantile of the Student t distribution with nu > 0 degrees of freedom,
// computed by inverting the regularized incomplete beta function.
double student_t_quantile(double p, double nu);

// Regularized incomplete beta function I_x(a, b), exposed for testing.
double reg_incomplete_beta(double a, double b, double x);

}  // namespace catfuse

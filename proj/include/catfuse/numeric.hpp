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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "catfuse/errors.hpp"

namespace catfuse::numeric {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(args[i])) with max subtraction. Returns -inf on all -inf.
inline double log_sum_exp(std::span<const double> args) {
  double max_arg = kNegInf;
  for (double a : args) max_arg = std::max(max_arg, a);
  if (max_arg == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double a : args) sum += std::exp(a - max_arg);
  return max_arg + std::log(sum);
}

// Exponentiates log weights into a normalized probability vector in place.
// Throws NumericalError when every weight is -inf.
inline void log_weights_to_probs(std::span<double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (lse == kNegInf) {
    throw NumericalError("all categorical weights underflowed to zero");
  }
  for (auto& w : log_weights) w = std::exp(w - lse);
}

// Clamps entries in (-1e-12, 0) to zero, validates the simplex within `tol`,
// then renormalizes exactly. Throws ValidationError on negative entries or a
// sum too far from one.
inline void sanitize_probability_vector(std::span<double> p, double tol = 1e-9) {
  double sum = 0.0;
  for (auto& v : p) {
    if (v < 0.0) {
      if (v > -1e-12) {
        v = 0.0;
      } else {
        throw ValidationError("probability vector has a negative entry");
      }
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw ValidationError("probability vector does not sum to one");
  }
  for (auto& v : p) v /= sum;
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("mean of an empty sequence");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ValidationError("sample variance needs at least two values");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

// Linear-interpolation quantile over a copy of the data (R type 7).
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ValidationError("quantile of an empty sequence");
  std::sort(xs.begin(), xs.end());
  if (p <= 0.0) return xs.front();
  if (p >= 1.0) return xs.back();
  const double h = p * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

// Overflow-checked product of level counts.
inline std::uint64_t checked_cell_product(std::span<const int> levels) {
  std::uint64_t total = 1;
  for (int d : levels) {
    if (d <= 0) throw ValidationError("level count must be positive");
    const std::uint64_t next = total * static_cast<std::uint64_t>(d);
    if (next / static_cast<std::uint64_t>(d) != total) {
      throw ValidationError("contingency table cell count overflows 64 bits");
    }
    total = next;
  }
  return total;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace catfuse::numeric

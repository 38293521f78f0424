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

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>

#include "catfuse/errors.hpp"

// Seeding contract
// ----------------
// Every random stream in the project is addressed by the root seed plus a
// path of words: (purpose tag, major index, minor index). Two streams with
// different paths are independent for all practical purposes, so loops over
// rows can be partitioned across threads in any order without changing a
// single draw. Distribution samplers are hand-rolled on top of xoshiro256**
// so that results are reproducible bit-for-bit for a given root seed.

namespace catfuse::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output scrambler (Steele, Lea & Flood).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}
  constexpr std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

enum class StreamPurpose : std::uint64_t {
  kInitAlloc = 1,
  kInitProfile,
  kInitStick,
  kAllocSweep,
  kProfileSweep,
  kStickSweep,
  kConcentrationSweep,
  kImputeSweep,
  kGlueSample,
  kGlueFit,
  kGlueComplete,
  kMatch,
  kPopulation,
  kSplit,
  kBias,
  kHarness,
};

inline std::uint64_t derive_stream(std::uint64_t root,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root + kGolden);
  for (std::uint64_t w : path) {
    s = mix64(s ^ (w + kGolden + (s << 6) + (s >> 2)));
  }
  return s;
}

inline std::uint64_t derive_stream(std::uint64_t root, StreamPurpose purpose,
                                   std::uint64_t major = 0, std::uint64_t minor = 0) {
  return derive_stream(root, {static_cast<std::uint64_t>(purpose), major, minor});
}

// xoshiro256** (Blackman & Vigna), state filled from SplitMix64.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& word : state_) word = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1); safe to pass through log().
  double u01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  // Unbiased-enough integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double normal() {
    const double u1 = u01();
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
  }

  // Marsaglia-Tsang; shape < 1 handled through the shape+1 boost.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
      throw NumericalError("gamma draw requires positive shape and rate");
    }
    if (shape < 1.0) {
      const double u = u01();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v / rate;
      }
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    const double s = x + y;
    if (!(s > 0.0)) return a / (a + b);
    return x / s;
  }

  void dirichlet(std::span<const double> concentration, std::span<double> out) {
    double total = 0.0;
    for (std::size_t i = 0; i < concentration.size(); ++i) {
      out[i] = gamma(concentration[i], 1.0);
      total += out[i];
    }
    if (!(total > 0.0)) {
      const double uniform = 1.0 / static_cast<double>(out.size());
      for (auto& v : out) v = uniform;
      return;
    }
    for (std::size_t i = 0; i < concentration.size(); ++i) out[i] /= total;
  }

  // Inverse-CDF walk over a normalized probability vector; returns 0-based index.
  int categorical(std::span<const double> probs) {
    const double u = u01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_;
};

}  // namespace catfuse::rng

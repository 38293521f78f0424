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

#include "catfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "catfuse/errors.hpp"
#include "catfuse/numeric.hpp"

namespace catfuse {

double hellinger(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ValidationError("hellinger: vectors have different lengths (" +
                          std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
  }
  std::vector<double> ps(p.begin(), p.end());
  std::vector<double> qs(q.begin(), q.end());
  numeric::sanitize_probability_vector(ps);
  numeric::sanitize_probability_vector(qs);
  double ss = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double d = std::sqrt(ps[i]) - std::sqrt(qs[i]);
    ss += d * d;
  }
  return std::min(1.0, std::sqrt(ss) / std::sqrt(2.0));
}

double misclassified_count(const ContingencyTable& truth,
                           std::span<const ContingencyTable> imputations) {
  if (imputations.empty()) throw ValidationError("misclassified_count: no imputed tables");
  const std::int64_t n = truth.total();
  double acc = 0.0;
  for (const ContingencyTable& t : imputations) {
    if (t.names() != truth.names() || t.levels() != truth.levels()) {
      throw ValidationError("misclassified_count: table shape mismatch");
    }
    if (t.total() != n) {
      throw ValidationError("misclassified_count: table totals differ (" + std::to_string(n) +
                            " vs " + std::to_string(t.total()) + ")");
    }
    std::int64_t l1 = 0;
    for (std::size_t j = 0; j < truth.num_cells(); ++j) {
      l1 += std::llabs(truth.count(j) - t.count(j));
    }
    acc += 0.5 * static_cast<double>(l1);
  }
  return acc / static_cast<double>(imputations.size());
}

const FrechetInterval& FrechetBoundsResult::at(std::int32_t b_level,
                                               std::int32_t bprime_level) const {
  for (const FrechetInterval& iv : intervals) {
    if (iv.b_level == b_level && iv.bprime_level == bprime_level) return iv;
  }
  throw ValidationError("no interval for cell (" + std::to_string(b_level) + "," +
                        std::to_string(bprime_level) + ")");
}

namespace {

// Per conditioning cell: total observed rows and per-level counts of one
// target column, for rows fully observed on the conditioning columns.
struct CellMargins {
  std::vector<double> level_count;  // a_flat * n_levels + (code-1)
  std::vector<double> cell_total;   // a_flat
};

CellMargins conditional_margins(const Dataset& d, const ContingencyTable& a_layout,
                                std::span<const std::size_t> a_cols, std::size_t target_col,
                                int target_levels) {
  CellMargins m;
  m.level_count.assign(a_layout.num_cells() * static_cast<std::size_t>(target_levels), 0.0);
  m.cell_total.assign(a_layout.num_cells(), 0.0);
  std::vector<std::int32_t> codes(a_cols.size());
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    const std::int32_t y = d.code(i, target_col);
    if (y == kMissing) continue;
    bool complete = true;
    for (std::size_t v = 0; v < a_cols.size(); ++v) {
      codes[v] = d.code(i, a_cols[v]);
      if (codes[v] == kMissing) {
        complete = false;
        break;
      }
    }
    if (!complete) continue;
    const std::size_t a = a_layout.flat_index(codes);
    m.level_count[a * static_cast<std::size_t>(target_levels) + static_cast<std::size_t>(y - 1)] +=
        1.0;
    m.cell_total[a] += 1.0;
  }
  return m;
}

std::vector<double> observed_margin(const Dataset& d, const std::string& var) {
  const std::size_t j = d.schema().index_of(var);
  const int levels = d.schema().var(j).num_levels;
  std::vector<double> count(static_cast<std::size_t>(levels), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    const std::int32_t c = d.code(i, j);
    if (c == kMissing) continue;
    count[static_cast<std::size_t>(c - 1)] += 1.0;
    total += 1.0;
  }
  if (total <= 0.0) {
    throw ValidationError("frechet_bounds: variable '" + var + "' has no observed values");
  }
  for (double& c : count) c /= total;
  return count;
}

}  // namespace

FrechetBoundsResult frechet_bounds(const Dataset& d1, const Dataset& d2,
                                   const std::string& b_var, const std::string& bprime_var,
                                   bool condition_on_A) {
  if (!(d1.schema() == d2.schema())) {
    throw ValidationError("frechet_bounds: datasets use different schemas");
  }
  const Schema& schema = d1.schema();
  const std::size_t jb = schema.index_of(b_var);
  const std::size_t jbp = schema.index_of(bprime_var);
  if (jb == jbp) throw ValidationError("frechet_bounds: the two variables must differ");
  const int Lb = schema.var(jb).num_levels;
  const int Lbp = schema.var(jbp).num_levels;

  FrechetBoundsResult out;
  out.b_var = b_var;
  out.bprime_var = bprime_var;
  out.conditional = condition_on_A;
  out.intervals.reserve(static_cast<std::size_t>(Lb) * static_cast<std::size_t>(Lbp));

  if (!condition_on_A) {
    const std::vector<double> p = observed_margin(d1, b_var);
    const std::vector<double> q = observed_margin(d2, bprime_var);
    for (std::int32_t j = 1; j <= Lb; ++j) {
      for (std::int32_t k = 1; k <= Lbp; ++k) {
        FrechetInterval iv;
        iv.b_level = j;
        iv.bprime_level = k;
        const double pj = p[static_cast<std::size_t>(j - 1)];
        const double qk = q[static_cast<std::size_t>(k - 1)];
        iv.lower = std::max(0.0, pj + qk - 1.0);
        iv.upper = std::min(pj, qk);
        out.intervals.push_back(iv);
      }
    }
    return out;
  }

  const std::vector<std::size_t> a_cols = schema.role_columns(Role::kA);
  if (a_cols.empty()) {
    throw ValidationError("frechet_bounds: conditional mode needs shared variables");
  }
  std::vector<std::string> a_names;
  std::vector<int> a_levels;
  for (std::size_t c : a_cols) {
    a_names.push_back(schema.var(c).name);
    a_levels.push_back(schema.var(c).num_levels);
  }
  ContingencyTable a_layout(a_names, a_levels);

  // Pooled conditioning-cell masses over both datasets.
  const ContingencyTable a1 = tabulate(d1, std::span<const std::string>(a_names));
  const ContingencyTable a2 = tabulate(d2, std::span<const std::string>(a_names));
  std::vector<double> mass(a_layout.num_cells(), 0.0);
  double pooled = 0.0;
  for (std::size_t a = 0; a < mass.size(); ++a) {
    mass[a] = static_cast<double>(a1.count(a) + a2.count(a));
    pooled += mass[a];
  }
  if (pooled <= 0.0) {
    throw ValidationError("frechet_bounds: no rows observe the conditioning variables");
  }
  for (double& w : mass) w /= pooled;

  const CellMargins m1 = conditional_margins(d1, a_layout, a_cols, jb, Lb);
  const CellMargins m2 = conditional_margins(d2, a_layout, a_cols, jbp, Lbp);

  std::vector<double> lo(static_cast<std::size_t>(Lb) * static_cast<std::size_t>(Lbp), 0.0);
  std::vector<double> hi(lo.size(), 0.0);
  for (std::size_t a = 0; a < mass.size(); ++a) {
    if (mass[a] <= 0.0) continue;
    ++out.n_condition_cells;
    const bool have1 = m1.cell_total[a] > 0.0;
    const bool have2 = m2.cell_total[a] > 0.0;
    if (!have1 || !have2) ++out.n_one_sided_cells;
    for (std::int32_t j = 1; j <= Lb; ++j) {
      const double pj = have1 ? m1.level_count[a * static_cast<std::size_t>(Lb) +
                                               static_cast<std::size_t>(j - 1)] /
                                    m1.cell_total[a]
                              : 1.0;
      for (std::int32_t k = 1; k <= Lbp; ++k) {
        const double qk = have2 ? m2.level_count[a * static_cast<std::size_t>(Lbp) +
                                                 static_cast<std::size_t>(k - 1)] /
                                      m2.cell_total[a]
                                : 1.0;
        const std::size_t cell = static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(Lbp) +
                                 static_cast<std::size_t>(k - 1);
        // A margin missing on one side contributes the vacuous bound
        // [0, min(known margin, 1)].
        const double lb = (have1 && have2) ? std::max(0.0, pj + qk - 1.0) : 0.0;
        const double ub = std::min(pj, qk);
        lo[cell] += mass[a] * lb;
        hi[cell] += mass[a] * ub;
      }
    }
  }
  for (std::int32_t j = 1; j <= Lb; ++j) {
    for (std::int32_t k = 1; k <= Lbp; ++k) {
      FrechetInterval iv;
      iv.b_level = j;
      iv.bprime_level = k;
      const std::size_t cell = static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(Lbp) +
                               static_cast<std::size_t>(k - 1);
      iv.lower = lo[cell];
      iv.upper = hi[cell];
      out.intervals.push_back(iv);
    }
  }
  return out;
}

MIEstimate mi_combine(std::span<const std::pair<double, double>> estimates) {
  const std::size_t m = estimates.size();
  if (m < 2) {
    throw ValidationError("mi_combine needs at least 2 imputations, got " + std::to_string(m));
  }
  std::vector<double> q(m), u(m);
  for (std::size_t k = 0; k < m; ++k) {
    q[k] = estimates[k].first;
    u[k] = estimates[k].second;
    if (!(u[k] >= 0.0)) {
      throw ValidationError("mi_combine: negative within-imputation variance");
    }
  }
  MIEstimate e;
  e.m = m;
  e.q_bar = numeric::mean(q);
  e.within = numeric::mean(u);
  e.between = numeric::sample_variance(q);
  const double md = static_cast<double>(m);
  e.total = e.within + (1.0 + 1.0 / md) * e.between;

  double crit;
  if (e.between <= 0.0) {
    e.between = 0.0;
    e.total = e.within;
    e.df = std::numeric_limits<double>::infinity();
    crit = kZ975;
  } else {
    const double r = e.within / ((1.0 + 1.0 / md) * e.between);
    e.df = (md - 1.0) * (1.0 + r) * (1.0 + r);
    crit = student_t_quantile(0.975, e.df);
  }
  const double half = crit * std::sqrt(e.total);
  e.lower = e.q_bar - half;
  e.upper = e.q_bar + half;
  return e;
}

namespace {

// Continued-fraction kernel for the regularized incomplete beta function
// (modified Lentz iteration).
double beta_cf(double a, double b, double x) {
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int mi = 1; mi <= 400; ++mi) {
    const double m = static_cast<double>(mi);
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

double student_t_cdf(double t, double nu) {
  if (!std::isfinite(nu)) {
    return 0.5 * (1.0 + std::erf(t / std::sqrt(2.0)));
  }
  if (t == 0.0) return 0.5;
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * reg_incomplete_beta(0.5 * nu, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

}  // namespace

double reg_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ValidationError("reg_incomplete_beta requires positive shape parameters");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_cf(a, b, x) / a;
  }
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_quantile(double p, double nu) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw ValidationError("student_t_quantile: p must lie strictly inside (0,1)");
  }
  if (std::isfinite(nu) && !(nu > 0.0)) {
    throw ValidationError("student_t_quantile: degrees of freedom must be positive");
  }
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, nu);

  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, nu) < p) {
    hi *= 2.0;
    if (hi > 1e154) throw NumericalError("student_t_quantile: bracket expansion failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, nu) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-13 * std::max(1.0, lo)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace catfuse

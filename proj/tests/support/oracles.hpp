/*
 * Copyright 2026 The durel-kit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Reference computations for tests. Nothing here calls into the library's
// statistics code.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace durel::testing {

/// Average ranks by counting: rank = #smaller + (#equal + 1) / 2.
inline std::vector<double> oracle_average_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

/// Raw-sum Pearson formula.
inline double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

inline double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return oracle_pearson(oracle_average_ranks(x), oracle_average_ranks(y));
}

/// 1 - 6 sum d^2 / (n (n^2 - 1)); valid only without ties.
inline double classical_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = oracle_average_ranks(x);
  const auto ry = oracle_average_ranks(y);
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

/// Two-sided Student-t tail P(|T| >= t) with `df` degrees of freedom by
/// composite Simpson integration of the density over [0, |t|].
inline double quadrature_t_two_sided(double t, double df, int intervals = 200000) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto f = [&](double u) { return c * std::pow(1.0 + u * u / df, -(df + 1) / 2); };
  const double a = 0, b = std::abs(t);
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return 1.0 - 2.0 * (s * h / 3.0);
}

}  // namespace durel::testing

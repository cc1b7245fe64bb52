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

// Inter-annotator agreement: pairwise Spearman correlations, each annotator
// against the mean of the others, and the average pairwise correlation.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "durel/error.hpp"
#include "durel/judgments.hpp"
#include "durel/ranks.hpp"

namespace durel {

/// One correlation cell. `rho` and `p` are empty when undefined; `reason`
/// then says why.
struct Correlation {
  std::optional<double> rho;
  std::size_t n = 0;
  std::optional<double> p;
  SignificanceMethod method = SignificanceMethod::kTDistribution;
  std::string reason;

  bool defined() const noexcept { return rho.has_value(); }
};

struct PairwiseCell {
  std::size_t a = 0;  // annotator index, a < b
  std::size_t b = 0;
  Correlation corr;
};

struct AgreementReport {
  std::vector<std::string> annotators;
  std::vector<PairwiseCell> pairwise;  // (0,1), (0,2), ..., (1,2), ...
  std::vector<Correlation> avg_vs_rest;  // per annotator; empty below 3 annotators

  /// Symmetric lookup.
  const Correlation& cell(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    for (const auto& c : pairwise)
      if (c.a == a && c.b == b) return c.corr;
    throw NotFoundError("no agreement cell for annotators " + std::to_string(a) + "," + std::to_string(b));
  }
};

namespace detail {

inline Correlation correlate(std::span<const double> x, std::span<const double> y,
                             const SignificanceOptions& sig) {
  Correlation c;
  c.n = x.size();
  try {
    const auto r = spearman_values(x, y);
    const auto s = significance(x, y, r.rho, sig);
    c.rho = r.rho;
    c.p = s.p;
    c.method = s.method;
  } catch (const UndefinedCorrelationError& e) {
    c.reason = e.what();
  }
  return c;
}

}  // namespace detail

/// Correlation of two matrix columns over pairs both annotators rated 1..4.
inline Correlation pairwise_agreement(const JudgmentMatrix& m, std::size_t a, std::size_t b,
                                      const SignificanceOptions& sig = {}) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < m.pair_count(); ++i) {
    const auto& u = m.at(i, a);
    const auto& v = m.at(i, b);
    if (u && v && u->is_rating() && v->is_rating()) {
      x.push_back(u->value());
      y.push_back(v->value());
    }
  }
  return detail::correlate(x, y, sig);
}

inline AgreementReport pairwise_matrix(const JudgmentMatrix& m, const SignificanceOptions& sig = {}) {
  if (m.annotator_count() < 2) throw ValidationError("agreement needs at least 2 annotators");
  AgreementReport r;
  r.annotators.assign(m.annotators().begin(), m.annotators().end());
  for (std::size_t a = 0; a < m.annotator_count(); ++a)
    for (std::size_t b = a + 1; b < m.annotator_count(); ++b) r.pairwise.push_back({a, b, pairwise_agreement(m, a, b, sig)});
  return r;
}

/// Correlates one annotator's ratings with, per pair, the mean of the other
/// annotators' non-zero ratings. Pairs the rest left unrated are skipped.
/// Undefined results are returned with a reason rather than thrown.
inline Correlation avg_vs_rest_cell(const JudgmentMatrix& m, std::size_t annotator,
                                    const SignificanceOptions& sig = {}) {
  if (m.annotator_count() < 3) throw ValidationError("annotator-vs-rest agreement needs at least 3 annotators");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < m.pair_count(); ++i) {
    const auto& own = m.at(i, annotator);
    if (!own || !own->is_rating()) continue;
    int sum = 0, n = 0;
    for (std::size_t j = 0; j < m.annotator_count(); ++j) {
      if (j == annotator) continue;
      if (const auto& v = m.at(i, j); v && v->is_rating()) {
        sum += v->value();
        ++n;
      }
    }
    if (n == 0) continue;
    x.push_back(own->value());
    y.push_back(static_cast<double>(sum) / n);
  }
  return detail::correlate(x, y, sig);
}

/// As avg_vs_rest_cell, but throws when the correlation is undefined.
inline Correlation avg_vs_rest(const JudgmentMatrix& m, std::string_view annotator,
                               const SignificanceOptions& sig = {}) {
  const auto idx = m.annotator_index(annotator);
  if (!idx) throw NotFoundError("unknown annotator '" + std::string(annotator) + "'");
  Correlation c = avg_vs_rest_cell(m, *idx, sig);
  if (!c.defined()) {
    if (c.n < kMinOverlap) throw InsufficientOverlapError(c.reason);
    throw ZeroVarianceError(c.reason);
  }
  return c;
}

/// Unweighted mean over the defined pairwise cells.
inline double mean_pairwise(const AgreementReport& r) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : r.pairwise) {
    if (c.corr.rho) {
      sum += *c.corr.rho;
      ++n;
    }
  }
  if (n == 0) throw UndefinedCorrelationError("no defined pairwise correlation");
  return sum / static_cast<double>(n);
}

/// Pairwise cells plus annotator-vs-rest when there are at least 3 annotators.
inline AgreementReport agreement_report(const JudgmentMatrix& m, const SignificanceOptions& sig = {}) {
  AgreementReport r = pairwise_matrix(m, sig);
  if (m.annotator_count() >= 3)
    for (std::size_t a = 0; a < m.annotator_count(); ++a) r.avg_vs_rest.push_back(avg_vs_rest_cell(m, a, sig));
  return r;
}

}  // namespace durel

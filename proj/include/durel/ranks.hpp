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

// Tie-aware Spearman correlation and its significance.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "durel/error.hpp"
#include "durel/judgments.hpp"
#include "durel/rng.hpp"

namespace durel {

/// Ranks starting at 1; tied values share the mean of the positions they span.
template <typename T>
std::vector<double> fractional_ranks(std::span<const T> values) {
  if (values.empty()) throw ValidationError("cannot rank an empty list");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && !(values[order[i]] < values[order[j]])) ++j;
    // positions i+1 .. j share their mean
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

template <typename T>
std::vector<double> fractional_ranks(const std::vector<T>& values) {
  return fractional_ranks(std::span<const T>(values));
}

/// Pearson product-moment correlation. Throws ZeroVarianceError when either
/// side is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVarianceError("correlation undefined: a vector has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct SpearmanResult {
  double rho = 0.0;
  std::size_t n = 0;
};

inline constexpr std::size_t kMinOverlap = 3;

/// Spearman's rho of two already-filtered samples.
inline SpearmanResult spearman_values(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  if (x.size() < kMinOverlap)
    throw InsufficientOverlapError("correlation needs at least 3 shared judgments, found " +
                                   std::to_string(x.size()));
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return {pearson(rx, ry), x.size()};
}

/// Spearman's rho of two annotators' judgments. Positions where either side is
/// missing or 0 are dropped first.
inline SpearmanResult spearman(std::span<const std::optional<JudgmentValue>> x,
                               std::span<const std::optional<JudgmentValue>> y) {
  if (x.size() != y.size()) throw ValidationError("judgment vectors differ in length");
  std::vector<double> kx, ky;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i] || !y[i] || !x[i]->is_rating() || !y[i]->is_rating()) continue;
    kx.push_back(x[i]->value());
    ky.push_back(y[i]->value());
  }
  return spearman_values(kx, ky);
}

inline SpearmanResult spearman(std::span<const JudgmentValue> x, std::span<const JudgmentValue> y) {
  std::vector<std::optional<JudgmentValue>> ox(x.begin(), x.end()), oy(y.begin(), y.end());
  return spearman(std::span<const std::optional<JudgmentValue>>(ox),
                  std::span<const std::optional<JudgmentValue>>(oy));
}

/// Two-sided p for H0: rho = 0, from Student's t with n - 2 degrees of
/// freedom, t = rho * sqrt((n - 2) / (1 - rho^2)). Evaluated as the
/// regularized incomplete beta I_{1-rho^2}((n-2)/2, 1/2), which equals the
/// two-sided tail and stays accurate for very small p.
inline double p_value(double rho, std::size_t n) {
  if (n < kMinOverlap) throw ValidationError("p-value needs n >= 3");
  const double r = std::clamp(rho, -1.0, 1.0);
  const double q = 1.0 - r * r;
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  const double df = static_cast<double>(n - 2);
  return boost::math::ibeta(df / 2.0, 0.5, q);
}

/// Permutation test on rank vectors: the share of reorderings of `ry` whose
/// |rho| reaches the observed one. All n! orders are enumerated when n <=
/// exact_up_to; otherwise `shuffles` random orders are drawn and the estimate
/// (hits + 1) / (shuffles + 1) is returned.
inline double permutation_p_value(std::span<const double> rx, std::span<const double> ry, Rng& rng,
                                  std::size_t shuffles = 20000, std::size_t exact_up_to = 8) {
  const double observed = std::abs(pearson(rx, ry));
  const double tol = 1e-12;
  std::vector<double> perm(ry.begin(), ry.end());
  if (perm.size() <= exact_up_to) {
    std::vector<std::size_t> idx(perm.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::size_t hits = 0, total = 0;
    do {
      for (std::size_t i = 0; i < idx.size(); ++i) perm[i] = ry[idx[i]];
      ++total;
      hits += std::abs(pearson(rx, perm)) >= observed - tol;
    } while (std::next_permutation(idx.begin(), idx.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
  }
  std::size_t hits = 0;
  for (std::size_t s = 0; s < shuffles; ++s) {
    rng.shuffle(std::span(perm));
    hits += std::abs(pearson(rx, perm)) >= observed - tol;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(shuffles + 1);
}

enum class SignificanceMethod { kTDistribution, kPermutationExact, kPermutationMonteCarlo };

inline std::string_view to_string(SignificanceMethod m) {
  switch (m) {
    case SignificanceMethod::kTDistribution: return "t";
    case SignificanceMethod::kPermutationExact: return "permutation-exact";
    case SignificanceMethod::kPermutationMonteCarlo: return "permutation-mc";
  }
  return "?";
}

struct SignificanceOptions {
  /// Samples smaller than this use a permutation test instead of the t approximation.
  std::size_t permutation_below = 30;
  std::size_t exact_up_to = 8;
  std::size_t shuffles = 20000;
  std::uint64_t seed = 20170601;
};

struct Significance {
  double p = 1.0;
  SignificanceMethod method = SignificanceMethod::kTDistribution;
};

/// p for the Spearman correlation of filtered samples x, y.
inline Significance significance(std::span<const double> x, std::span<const double> y, double rho,
                                 const SignificanceOptions& opt = {}) {
  const std::size_t n = x.size();
  if (n >= opt.permutation_below) return {p_value(rho, n), SignificanceMethod::kTDistribution};
  Rng rng(opt.seed);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  const double p = permutation_p_value(rx, ry, rng, opt.shuffles, opt.exact_up_to);
  return {p, n <= opt.exact_up_to ? SignificanceMethod::kPermutationExact
                                  : SignificanceMethod::kPermutationMonteCarlo};
}

}  // namespace durel

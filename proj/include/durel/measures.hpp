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

// Group means and change measures per target word. All statistics skip
// 0 ("cannot decide") judgments: first a mean per pair over its non-zero
// judgments, then a mean over the pairs whose mean is defined.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "durel/error.hpp"
#include "durel/judgments.hpp"
#include "durel/task.hpp"

namespace durel {

inline std::optional<double> pair_mean(std::span<const std::optional<JudgmentValue>> values) {
  int sum = 0;
  int n = 0;
  for (const auto& v : values) {
    if (v && v->is_rating()) {
      sum += v->value();
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(sum) / n;
}

inline std::optional<double> pair_mean(std::span<const JudgmentValue> values) {
  std::vector<std::optional<JudgmentValue>> wrapped(values.begin(), values.end());
  return pair_mean(std::span<const std::optional<JudgmentValue>>(wrapped));
}

struct GroupMean {
  std::optional<double> mean;
  std::size_t n_pairs_used = 0;  // pairs with a defined pair mean
  std::size_t n_pairs = 0;       // pairs of the target in the group
};

inline GroupMean group_mean(const JudgmentMatrix& matrix, const TaskKey& key, const TargetSpec& target,
                            GroupId group) {
  GroupMean out;
  double sum = 0.0;
  for (const auto& e : key.entries()) {
    if (e.target != target || e.group != group) continue;
    ++out.n_pairs;
    const auto row = matrix.pair_index(e.pair_id);
    if (!row) continue;
    if (const auto m = pair_mean(matrix.row(*row))) {
      sum += *m;
      ++out.n_pairs_used;
    }
  }
  if (out.n_pairs == 0)
    throw NotFoundError("no " + std::string(to_string(group)) + " pairs for target '" + target.display() +
                        "' in key");
  if (out.n_pairs_used > 0) out.mean = sum / static_cast<double>(out.n_pairs_used);
  return out;
}

struct GroupMeans {
  TargetSpec target;
  std::optional<double> mean_e;
  std::optional<double> mean_l;
  std::optional<double> mean_c;
  std::size_t n_pairs_e = 0;
  std::size_t n_pairs_l = 0;
  std::size_t n_pairs_c = 0;
};

inline GroupMeans group_means(const JudgmentMatrix& matrix, const TaskKey& key, const TargetSpec& target) {
  const auto e = group_mean(matrix, key, target, GroupId::kEarlier);
  const auto l = group_mean(matrix, key, target, GroupId::kLater);
  const auto c = group_mean(matrix, key, target, GroupId::kCompare);
  return {target, e.mean, l.mean, c.mean, e.n_pairs_used, l.n_pairs_used, c.n_pairs_used};
}

namespace detail {
inline double require(const std::optional<double>& v, const TargetSpec& t, std::string_view what) {
  if (!v) throw UndefinedMeasureError(std::string(what) + " mean of '" + t.display() + "' is undefined");
  return *v;
}
}  // namespace detail

/// Later minus earlier mean. Negative signals innovative change, positive reductive.
inline double delta_later(const GroupMeans& m) {
  return detail::require(m.mean_l, m.target, "LATER") - detail::require(m.mean_e, m.target, "EARLIER");
}

/// Mean relatedness across periods; low values mean strong change.
inline double compare_measure(const GroupMeans& m) { return detail::require(m.mean_c, m.target, "COMPARE"); }

/// COMPARE corrected for polysemy already present in the earlier period.
inline double delta_compare(const GroupMeans& m) {
  return detail::require(m.mean_c, m.target, "COMPARE") - detail::require(m.mean_e, m.target, "EARLIER");
}

enum class Measure { kDeltaLater, kCompare, kDeltaCompare };

inline std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::kDeltaLater: return "delta_later";
    case Measure::kCompare: return "compare";
    case Measure::kDeltaCompare: return "delta_compare";
  }
  return "?";
}

inline std::optional<Measure> parse_measure(std::string_view s) {
  for (Measure m : {Measure::kDeltaLater, Measure::kCompare, Measure::kDeltaCompare})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

/// The three measures, each empty when an input mean is undefined.
struct ChangeMeasures {
  TargetSpec target;
  std::optional<double> delta_later;
  std::optional<double> compare;
  std::optional<double> delta_compare;

  std::optional<double> get(Measure m) const {
    switch (m) {
      case Measure::kDeltaLater: return delta_later;
      case Measure::kCompare: return compare;
      case Measure::kDeltaCompare: return delta_compare;
    }
    return std::nullopt;
  }
};

inline ChangeMeasures change_measures(const GroupMeans& m) {
  ChangeMeasures out{m.target, std::nullopt, std::nullopt, std::nullopt};
  if (m.mean_e && m.mean_l) out.delta_later = delta_later(m);
  if (m.mean_c) out.compare = compare_measure(m);
  if (m.mean_c && m.mean_e) out.delta_compare = delta_compare(m);
  return out;
}

enum class ChangeClass { kInnovative, kReductive, kStable };

inline std::string_view to_string(ChangeClass c) {
  switch (c) {
    case ChangeClass::kInnovative: return "INNOVATIVE";
    case ChangeClass::kReductive: return "REDUCTIVE";
    case ChangeClass::kStable: return "STABLE";
  }
  return "?";
}

inline std::optional<ChangeClass> parse_change_class(std::string_view s) {
  for (ChangeClass c : {ChangeClass::kInnovative, ChangeClass::kReductive, ChangeClass::kStable})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline constexpr double kDefaultThreshold = 0.1;

inline ChangeClass classify(double delta, double threshold = kDefaultThreshold) {
  if (!(threshold >= 0.0)) throw ValidationError("classification threshold must be non-negative");
  if (delta < -threshold) return ChangeClass::kInnovative;
  if (delta > threshold) return ChangeClass::kReductive;
  return ChangeClass::kStable;
}

/// Descending by `by`, ties broken by lemma then POS. Entries lacking the
/// measure go last, in lemma order.
inline std::vector<ChangeMeasures> rank_targets(std::span<const ChangeMeasures> measures, Measure by) {
  std::vector<ChangeMeasures> out(measures.begin(), measures.end());
  std::stable_sort(out.begin(), out.end(), [by](const ChangeMeasures& a, const ChangeMeasures& b) {
    const auto va = a.get(by);
    const auto vb = b.get(by);
    if (va.has_value() != vb.has_value()) return va.has_value();
    if (va && *va != *vb) return *va > *vb;
    return a.target < b.target;
  });
  return out;
}

/// Counts of judgment values 0..4.
using Histogram = std::array<std::size_t, 5>;

inline Histogram histogram(const JudgmentMatrix& matrix, const TaskKey& key, const TargetSpec& target,
                           GroupId group) {
  Histogram h{};
  for (const auto& e : key.entries()) {
    if (e.target != target || e.group != group) continue;
    const auto row = matrix.pair_index(e.pair_id);
    if (!row) continue;
    for (const auto& c : matrix.row(*row))
      if (c) ++h[static_cast<std::size_t>(c->value())];
  }
  return h;
}

}  // namespace durel

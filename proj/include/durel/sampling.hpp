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

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "durel/corpus.hpp"
#include "durel/error.hpp"
#include "durel/rng.hpp"

namespace durel {

enum class GroupId { kEarlier, kLater, kCompare };

inline constexpr GroupId kAllGroups[] = {GroupId::kEarlier, GroupId::kLater, GroupId::kCompare};

inline std::string_view to_string(GroupId g) {
  switch (g) {
    case GroupId::kEarlier: return "EARLIER";
    case GroupId::kLater: return "LATER";
    case GroupId::kCompare: return "COMPARE";
  }
  return "?";
}

inline std::optional<GroupId> parse_group(std::string_view s) {
  for (GroupId g : kAllGroups)
    if (to_string(g) == s) return g;
  return std::nullopt;
}

struct UsePair {
  std::string pair_id;
  TargetSpec target;
  GroupId group = GroupId::kEarlier;
  Use first;
  Use second;
};

struct SamplingConfig {
  std::size_t pairs_per_group = 20;
  std::uint64_t seed = 0;
  /// Lets a use fill two pair slots when the pool is too small for unique draws.
  bool allow_reuse_twice = true;

  void validate() const {
    if (pairs_per_group < 1) throw ValidationError("pairs_per_group must be at least 1");
  }
};

namespace detail {

using Slot = std::size_t;

inline std::vector<Slot> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<Slot> idx(n);
  std::iota(idx.begin(), idx.end(), Slot{0});
  rng.shuffle(std::span(idx));
  return idx;
}

inline bool has_repeated_pair(std::span<const std::pair<Slot, Slot>> pairs) {
  std::set<std::pair<Slot, Slot>> seen;
  for (auto [a, b] : pairs)
    if (!seen.insert(std::minmax(a, b)).second) return true;
  return false;
}

// Bounded retries for avoiding a repeated unordered pair in the reuse regime;
// when they run out the last draw is kept.
inline constexpr int kRedrawAttempts = 64;

// Slot sequence of length 2k over a pool of n >= k uses: every use once, then
// a reshuffled prefix for second uses. Consecutive slots form pairs.
inline std::vector<std::pair<Slot, Slot>> within_with_reuse(std::size_t n, std::size_t k, Rng& rng) {
  const std::vector<Slot> first_pass = shuffled_indices(n, rng);
  const std::size_t extra = 2 * k - n;
  std::vector<std::pair<Slot, Slot>> pairs;
  for (int attempt = 0; attempt < kRedrawAttempts; ++attempt) {
    std::vector<Slot> second_pass = shuffled_indices(n, rng);
    // With odd n the last first-pass use is paired with the first second-pass use.
    if (n % 2 == 1 && second_pass[0] == first_pass.back()) std::swap(second_pass[0], second_pass[1]);
    std::vector<Slot> slots = first_pass;
    slots.insert(slots.end(), second_pass.begin(), second_pass.begin() + static_cast<std::ptrdiff_t>(extra));
    pairs.clear();
    for (std::size_t i = 0; i < k; ++i) pairs.emplace_back(slots[2 * i], slots[2 * i + 1]);
    if (!has_repeated_pair(pairs)) break;
  }
  return pairs;
}

// k draws from a pool of n: distinct when n >= k, otherwise all n plus a
// reshuffled prefix of k - n.
inline std::vector<Slot> draw_side(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<Slot> out = shuffled_indices(n, rng);
  if (n >= k) {
    out.resize(k);
    return out;
  }
  std::vector<Slot> again = shuffled_indices(n, rng);
  out.insert(out.end(), again.begin(), again.begin() + static_cast<std::ptrdiff_t>(k - n));
  return out;
}

}  // namespace detail

/// Samples k pairs for EARLIER or LATER from a single-period pool. Each use
/// fills at most one slot when the pool holds at least 2k uses; otherwise (and
/// only if reuse is allowed) every use fills one or two slots. A pair never
/// holds the same use twice.
inline std::vector<UsePair> sample_group(const TargetSpec& target, GroupId group,
                                         std::span<const Use> pool, std::size_t k, Rng& rng,
                                         bool allow_reuse_twice = true) {
  if (group == GroupId::kCompare)
    throw ValidationError("COMPARE pairs need two pools, one per period");
  if (k < 1) throw ValidationError("pairs per group must be at least 1");
  const std::size_t n = pool.size();
  const std::string name(to_string(group));
  if (n < 2)
    throw InsufficientUsesError(target.display(), name,
                                std::to_string(n) + " use(s) cannot form a pair of distinct uses");

  std::vector<std::pair<detail::Slot, detail::Slot>> slots;
  if (n >= 2 * k) {
    const auto order = detail::shuffled_indices(n, rng);
    for (std::size_t i = 0; i < k; ++i) slots.emplace_back(order[2 * i], order[2 * i + 1]);
  } else if (!allow_reuse_twice) {
    throw InsufficientUsesError(target.display(), name,
                                std::to_string(n) + " uses, " + std::to_string(2 * k) +
                                    " needed without reuse");
  } else if (n < k) {
    throw InsufficientUsesError(target.display(), name,
                                std::to_string(n) + " uses, at least " + std::to_string(k) +
                                    " needed with each use allowed twice");
  } else {
    slots = detail::within_with_reuse(n, k, rng);
  }

  std::vector<UsePair> out;
  out.reserve(k);
  for (auto [a, b] : slots) out.push_back({{}, target, group, pool[a], pool[b]});
  return out;
}

/// Samples k COMPARE pairs, each joining one use from `earlier` (first slot)
/// with one from `later` (second slot).
inline std::vector<UsePair> sample_group(const TargetSpec& target, GroupId group,
                                         std::span<const Use> earlier, std::span<const Use> later,
                                         std::size_t k, Rng& rng, bool allow_reuse_twice = true) {
  if (group != GroupId::kCompare)
    throw ValidationError(std::string(to_string(group)) + " pairs are drawn from a single pool");
  if (k < 1) throw ValidationError("pairs per group must be at least 1");
  const std::size_t limit = allow_reuse_twice ? 2 : 1;
  for (auto [label, size] : {std::pair{"earlier", earlier.size()}, std::pair{"later", later.size()}}) {
    if (size * limit < k)
      throw InsufficientUsesError(target.display(), "COMPARE",
                                  std::string(label) + " pool has " + std::to_string(size) +
                                      " uses, " + std::to_string(k) + " pairs need at least " +
                                      std::to_string((k + limit - 1) / limit));
  }

  std::vector<std::pair<detail::Slot, detail::Slot>> slots;
  const bool reuse = earlier.size() < k || later.size() < k;
  for (int attempt = 0; attempt < detail::kRedrawAttempts; ++attempt) {
    const auto a = detail::draw_side(earlier.size(), k, rng);
    const auto b = detail::draw_side(later.size(), k, rng);
    slots.clear();
    for (std::size_t i = 0; i < k; ++i) slots.emplace_back(a[i], b[i]);
    if (!reuse || !detail::has_repeated_pair(slots)) break;
  }

  std::vector<UsePair> out;
  out.reserve(k);
  for (auto [a, b] : slots) out.push_back({{}, target, group, earlier[a], later[b]});
  return out;
}

/// EARLIER, LATER and COMPARE pairs for one target, in that order. Pair ids
/// `<lemma>-<n>` take n from first_index upward in a shuffled order, so an id
/// says nothing about its group.
inline std::vector<UsePair> build_study_pairs(const TargetSpec& target, std::span<const Use> uses_t1,
                                              std::span<const Use> uses_t2,
                                              const SamplingConfig& config, Rng& rng,
                                              std::size_t first_index = 1) {
  config.validate();
  const std::size_t k = config.pairs_per_group;
  const bool reuse = config.allow_reuse_twice;
  std::vector<UsePair> pairs = sample_group(target, GroupId::kEarlier, uses_t1, k, rng, reuse);
  auto later = sample_group(target, GroupId::kLater, uses_t2, k, rng, reuse);
  auto compare = sample_group(target, GroupId::kCompare, uses_t1, uses_t2, k, rng, reuse);
  pairs.insert(pairs.end(), std::make_move_iterator(later.begin()), std::make_move_iterator(later.end()));
  pairs.insert(pairs.end(), std::make_move_iterator(compare.begin()),
               std::make_move_iterator(compare.end()));

  const auto ids = detail::shuffled_indices(pairs.size(), rng);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    pairs[i].pair_id = target.lemma + "-" + std::to_string(first_index + ids[i]);
  return pairs;
}

inline std::vector<UsePair> build_study_pairs(const TargetSpec& target, std::span<const Use> uses_t1,
                                              std::span<const Use> uses_t2,
                                              const SamplingConfig& config) {
  Rng rng(config.seed);
  return build_study_pairs(target, uses_t1, uses_t2, config, rng);
}

}  // namespace durel

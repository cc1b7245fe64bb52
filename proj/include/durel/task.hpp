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

// Blinded annotation tasks and the keys that hold back their metadata.
//
// Task file:  # seed=<n> rng=<algorithm>
//             pair_id,prev1,sent1,next1,prev2,sent2,next2,judgment
// Key file:   pair_id,lemma,pos,group,use1_id,use2_id,year1,year2

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <numeric>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "durel/csv.hpp"
#include "durel/error.hpp"
#include "durel/rng.hpp"
#include "durel/sampling.hpp"

namespace durel {

struct UseText {
  std::string prev;
  std::string sent;
  std::string next;

  friend bool operator==(const UseText&, const UseText&) = default;
};

/// What an annotator sees: texts only, no dates, periods or groups.
struct TaskRow {
  std::string pair_id;
  UseText first;
  UseText second;

  friend bool operator==(const TaskRow&, const TaskRow&) = default;
};

struct AnnotationTask {
  std::string task_id;
  std::uint64_t seed = 0;
  std::vector<TaskRow> rows;

  friend bool operator==(const AnnotationTask&, const AnnotationTask&) = default;
};

struct KeyEntry {
  std::string pair_id;
  TargetSpec target;
  GroupId group = GroupId::kEarlier;
  std::string use1_id;
  std::string use2_id;
  int year1 = 0;
  int year2 = 0;

  friend bool operator==(const KeyEntry&, const KeyEntry&) = default;
};

/// pair_id -> withheld metadata, in task row order.
class TaskKey {
 public:
  void add(KeyEntry e) {
    if (index_.contains(e.pair_id)) throw ValidationError("duplicate pair_id '" + e.pair_id + "' in key");
    index_.emplace(e.pair_id, entries_.size());
    entries_.push_back(std::move(e));
  }

  const KeyEntry* find(std::string_view pair_id) const {
    auto it = index_.find(std::string(pair_id));
    return it == index_.end() ? nullptr : &entries_[it->second];
  }
  const KeyEntry& at(std::string_view pair_id) const {
    if (auto* e = find(pair_id)) return *e;
    throw NotFoundError("unknown pair_id '" + std::string(pair_id) + "'");
  }
  bool contains(std::string_view pair_id) const { return find(pair_id) != nullptr; }
  std::optional<std::size_t> position(std::string_view pair_id) const {
    auto it = index_.find(std::string(pair_id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::span<const KeyEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Distinct targets in order of first appearance.
  std::vector<TargetSpec> targets() const {
    std::vector<TargetSpec> out;
    for (const auto& e : entries_)
      if (std::find(out.begin(), out.end(), e.target) == out.end()) out.push_back(e.target);
    return out;
  }

  friend bool operator==(const TaskKey& a, const TaskKey& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<KeyEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Swaps each pair's uses on a coin flip, then shuffles all rows together.
inline std::pair<AnnotationTask, TaskKey> build_task(std::span<const UsePair> pairs, Rng& rng) {
  std::unordered_set<std::string> ids;
  for (const auto& p : pairs)
    if (!ids.insert(p.pair_id).second) throw ValidationError("duplicate pair_id '" + p.pair_id + "'");

  std::vector<const Use*> firsts, seconds;
  for (const auto& p : pairs) {
    const bool swap = rng.coin();
    firsts.push_back(swap ? &p.second : &p.first);
    seconds.push_back(swap ? &p.first : &p.second);
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));

  AnnotationTask task;
  task.seed = rng.seed();
  TaskKey key;
  for (std::size_t i : order) {
    const auto& p = pairs[i];
    const Use& a = *firsts[i];
    const Use& b = *seconds[i];
    task.rows.push_back({p.pair_id, {a.prev_text, a.sent_text, a.next_text}, {b.prev_text, b.sent_text, b.next_text}});
    key.add({p.pair_id, p.target, p.group, a.use_id, b.use_id, a.year, b.year});
  }
  return {std::move(task), std::move(key)};
}

inline std::pair<AnnotationTask, TaskKey> build_task(std::span<const UsePair> pairs, std::uint64_t seed) {
  Rng rng(seed);
  return build_task(pairs, rng);
}

// ---------------------------------------------------------------------------
// Files

inline constexpr std::array<std::string_view, 8> kTaskColumns = {
    "pair_id", "prev1", "sent1", "next1", "prev2", "sent2", "next2", "judgment"};
inline constexpr std::array<std::string_view, 8> kKeyColumns = {
    "pair_id", "lemma", "pos", "group", "use1_id", "use2_id", "year1", "year2"};

inline std::string task_header_comment(std::uint64_t seed) {
  return "# seed=" + std::to_string(seed) + " rng=" + std::string(Rng::kAlgorithm);
}

/// Writes the task with an empty judgment column, or with `judgments[i]` in
/// row i when given.
inline void write_task(std::ostream& out, const AnnotationTask& task,
                       std::span<const std::string> judgments = {}) {
  out << task_header_comment(task.seed) << '\n';
  out << "pair_id,prev1,sent1,next1,prev2,sent2,next2,judgment\n";
  for (std::size_t i = 0; i < task.rows.size(); ++i) {
    const auto& r = task.rows[i];
    csv::write_row(out, {r.pair_id, r.first.prev, r.first.sent, r.first.next, r.second.prev,
                         r.second.sent, r.second.next, i < judgments.size() ? judgments[i] : std::string{}});
  }
}

/// A task file as read back, possibly with judgments filled in.
struct TaskFile {
  AnnotationTask task;
  std::vector<std::string> judgment_cells;  // raw cell text per row
  std::vector<std::size_t> lines;           // source line per row
};

inline TaskFile read_task(std::istream& in) {
  const csv::Document doc = csv::parse(in);
  TaskFile out;
  for (const auto& c : doc.comments) {
    const auto at = c.find("seed=");
    if (at == std::string::npos) continue;
    const char* b = c.data() + at + 5;
    std::from_chars(b, c.data() + c.size(), out.task.seed);
  }
  if (doc.records.empty()) throw ParseError("task file has no header", 1);
  csv::expect_header(doc.records.front(), kTaskColumns, "task file");
  for (std::size_t i = 1; i < doc.records.size(); ++i) {
    const auto& rec = doc.records[i];
    csv::expect_width(rec, 8, "task row");
    const auto& f = rec.fields;
    if (f[0].empty()) throw ParseError("task row without pair_id", rec.line);
    out.task.rows.push_back({f[0], {f[1], f[2], f[3]}, {f[4], f[5], f[6]}});
    out.judgment_cells.push_back(f[7]);
    out.lines.push_back(rec.line);
  }
  return out;
}

inline void write_key(std::ostream& out, const TaskKey& key) {
  out << "pair_id,lemma,pos,group,use1_id,use2_id,year1,year2\n";
  for (const auto& e : key.entries())
    csv::write_row(out, {e.pair_id, e.target.lemma, e.target.pos_or_empty(), std::string(to_string(e.group)),
                         e.use1_id, e.use2_id, std::to_string(e.year1), std::to_string(e.year2)});
}

inline TaskKey read_key(std::istream& in) {
  const csv::Document doc = csv::parse(in);
  if (doc.records.empty()) throw ParseError("key file has no header", 1);
  csv::expect_header(doc.records.front(), kKeyColumns, "key file");
  TaskKey key;
  auto year = [](const csv::Record& rec, const std::string& s) {
    int y = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), y);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
      throw ParseError("year is not an integer: '" + s + "'", rec.line);
    return y;
  };
  for (std::size_t i = 1; i < doc.records.size(); ++i) {
    const auto& rec = doc.records[i];
    csv::expect_width(rec, 8, "key row");
    const auto& f = rec.fields;
    const auto group = parse_group(f[3]);
    if (!group) throw ParseError("unknown group '" + f[3] + "'", rec.line);
    if (f[0].empty() || f[1].empty()) throw ParseError("key row without pair_id or lemma", rec.line);
    KeyEntry e{f[0], {f[1], f[2].empty() ? std::nullopt : std::optional<std::string>(f[2])}, *group,
               f[4], f[5], year(rec, f[6]), year(rec, f[7])};
    try {
      key.add(std::move(e));
    } catch (const ValidationError& err) {
      throw ParseError(err.what(), rec.line);
    }
  }
  return key;
}

}  // namespace durel

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

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "durel/csv.hpp"
#include "durel/error.hpp"
#include "durel/task.hpp"
#include "durel/timestamp.hpp"

namespace durel {

/// A rating on the relatedness scale: 4 identical, 3 closely related,
/// 2 distantly related, 1 unrelated, 0 cannot decide. Zero is never a magnitude.
class JudgmentValue {
 public:
  static constexpr int kCannotDecide = 0;
  static constexpr int kMax = 4;

  constexpr JudgmentValue() = default;

  static JudgmentValue of(int v) {
    if (v < 0 || v > kMax)
      throw ValidationError("judgment " + std::to_string(v) + " outside 0..4");
    return JudgmentValue(static_cast<std::uint8_t>(v));
  }

  /// Accepts exactly one digit 0-4, surrounding blanks ignored.
  static std::optional<JudgmentValue> parse(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s.size() != 1 || s[0] < '0' || s[0] > '4') return std::nullopt;
    return JudgmentValue(static_cast<std::uint8_t>(s[0] - '0'));
  }

  constexpr int value() const noexcept { return v_; }
  /// True for 1..4, the values statistics may use.
  constexpr bool is_rating() const noexcept { return v_ != kCannotDecide; }

  friend constexpr bool operator==(JudgmentValue, JudgmentValue) = default;

 private:
  constexpr explicit JudgmentValue(std::uint8_t v) : v_(v) {}
  std::uint8_t v_ = 0;
};

struct Judgment {
  std::string annotator;
  std::string pair_id;
  JudgmentValue value;
  std::optional<Timestamp> timestamp;

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

enum class DuplicatePolicy { kReject, kLatestWins };

inline std::string_view to_string(DuplicatePolicy p) {
  return p == DuplicatePolicy::kReject ? "reject" : "latest-wins";
}

inline std::optional<DuplicatePolicy> parse_policy(std::string_view s) {
  if (s == "reject") return DuplicatePolicy::kReject;
  if (s == "latest-wins") return DuplicatePolicy::kLatestWins;
  return std::nullopt;
}

struct IngestResult {
  std::vector<Judgment> judgments;
  std::vector<std::string> missing;  // pair_ids whose judgment cell was empty
};

/// Reads one annotator's filled task file.
inline IngestResult ingest_filled_task(std::istream& in, const std::string& annotator, const TaskKey& key) {
  if (annotator.empty()) throw ValidationError("annotator id must not be empty");
  const TaskFile file = read_task(in);
  IngestResult out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < file.task.rows.size(); ++i) {
    const std::string& id = file.task.rows[i].pair_id;
    const std::string where = "row at line " + std::to_string(file.lines[i]) + ", pair_id '" + id + "'";
    if (!key.contains(id)) throw ValidationError(where + ": pair_id not in key");
    if (!seen.insert(id).second) throw ValidationError(where + ": duplicate pair_id");
    const std::string& cell = file.judgment_cells[i];
    if (cell.find_first_not_of(" \t") == std::string::npos) {
      out.missing.push_back(id);
      continue;
    }
    const auto v = JudgmentValue::parse(cell);
    if (!v) throw ValidationError(where + ": judgment '" + cell + "' is not an integer in 0..4");
    out.judgments.push_back({annotator, id, *v, std::nullopt});
  }
  return out;
}

/// Pairs x annotators. Rows follow key order, columns first appearance.
class JudgmentMatrix {
 public:
  JudgmentMatrix() = default;
  JudgmentMatrix(std::vector<std::string> pairs, std::vector<std::string> annotators)
      : pairs_(std::move(pairs)), annotators_(std::move(annotators)),
        cells_(pairs_.size() * annotators_.size()) {
    for (std::size_t i = 0; i < pairs_.size(); ++i) pair_index_.emplace(pairs_[i], i);
    for (std::size_t j = 0; j < annotators_.size(); ++j) annotator_index_.emplace(annotators_[j], j);
  }

  std::span<const std::string> pairs() const noexcept { return pairs_; }
  std::span<const std::string> annotators() const noexcept { return annotators_; }
  std::size_t pair_count() const noexcept { return pairs_.size(); }
  std::size_t annotator_count() const noexcept { return annotators_.size(); }

  std::optional<std::size_t> pair_index(std::string_view id) const {
    auto it = pair_index_.find(std::string(id));
    if (it == pair_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> annotator_index(std::string_view id) const {
    auto it = annotator_index_.find(std::string(id));
    if (it == annotator_index_.end()) return std::nullopt;
    return it->second;
  }

  const std::optional<JudgmentValue>& at(std::size_t pair, std::size_t annotator) const {
    return cells_[pair * annotators_.size() + annotator];
  }
  std::optional<JudgmentValue>& at(std::size_t pair, std::size_t annotator) {
    return cells_[pair * annotators_.size() + annotator];
  }

  std::vector<std::optional<JudgmentValue>> column(std::size_t annotator) const {
    std::vector<std::optional<JudgmentValue>> out(pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) out[i] = at(i, annotator);
    return out;
  }

  std::span<const std::optional<JudgmentValue>> row(std::size_t pair) const {
    return std::span(cells_).subspan(pair * annotators_.size(), annotators_.size());
  }

  std::size_t filled_count() const {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c.has_value();
    return n;
  }

  /// Filled cells as judgments, annotator-major so that reassembly keeps
  /// the column order. No timestamps.
  std::vector<Judgment> to_judgments() const {
    std::vector<Judgment> out;
    for (std::size_t j = 0; j < annotators_.size(); ++j)
      for (std::size_t i = 0; i < pairs_.size(); ++i)
        if (const auto& c = at(i, j)) out.push_back({annotators_[j], pairs_[i], *c, std::nullopt});
    return out;
  }

  friend bool operator==(const JudgmentMatrix& a, const JudgmentMatrix& b) {
    return a.pairs_ == b.pairs_ && a.annotators_ == b.annotators_ && a.cells_ == b.cells_;
  }

 private:
  std::vector<std::string> pairs_;
  std::vector<std::string> annotators_;
  std::vector<std::optional<JudgmentValue>> cells_;
  std::unordered_map<std::string, std::size_t> pair_index_;
  std::unordered_map<std::string, std::size_t> annotator_index_;
};

/// Builds the matrix over all pairs of `key`. Repeated identical judgments
/// collapse; differing ones are an error under kReject, and under
/// kLatestWins the newest timestamp wins (later in the list on ties or when
/// timestamps are absent).
inline JudgmentMatrix assemble_matrix(std::span<const Judgment> judgments, const TaskKey& key,
                                      DuplicatePolicy policy = DuplicatePolicy::kReject) {
  std::vector<std::string> pairs;
  pairs.reserve(key.size());
  for (const auto& e : key.entries()) pairs.push_back(e.pair_id);
  std::vector<std::string> annotators;
  std::unordered_set<std::string> known;
  for (const auto& j : judgments) {
    if (j.annotator.empty()) throw ValidationError("judgment without annotator for pair '" + j.pair_id + "'");
    if (!key.contains(j.pair_id)) throw ValidationError("judgment for unknown pair_id '" + j.pair_id + "'");
    if (known.insert(j.annotator).second) annotators.push_back(j.annotator);
  }

  JudgmentMatrix m(std::move(pairs), std::move(annotators));
  std::vector<std::optional<Timestamp>> stamps(m.pair_count() * m.annotator_count());
  for (const auto& j : judgments) {
    const std::size_t p = *m.pair_index(j.pair_id);
    const std::size_t a = *m.annotator_index(j.annotator);
    auto& cell = m.at(p, a);
    auto& stamp = stamps[p * m.annotator_count() + a];
    if (!cell) {
      cell = j.value;
      stamp = j.timestamp;
      continue;
    }
    if (*cell == j.value) {
      if (j.timestamp && (!stamp || *j.timestamp > *stamp)) stamp = j.timestamp;
      continue;
    }
    if (policy == DuplicatePolicy::kReject)
      throw ConflictError("annotator '" + j.annotator + "' judged pair '" + j.pair_id + "' as both " +
                              std::to_string(cell->value()) + " and " + std::to_string(j.value.value()),
                          cell->value());
    const bool older = j.timestamp && stamp && *j.timestamp < *stamp;
    if (!older) {
      cell = j.value;
      stamp = j.timestamp;
    }
  }
  return m;
}

inline constexpr std::array<std::string_view, 4> kJudgmentColumns = {"pair_id", "annotator", "value",
                                                                             "timestamp"};

inline void write_judgments(std::ostream& out, std::span<const Judgment> judgments) {
  out << "pair_id,annotator,value,timestamp\n";
  for (const auto& j : judgments)
    csv::write_row(out, {j.pair_id, j.annotator, std::to_string(j.value.value()),
                         j.timestamp ? format_timestamp(*j.timestamp) : std::string{}});
}

inline std::vector<Judgment> read_judgments(std::istream& in) {
  const csv::Document doc = csv::parse(in);
  if (doc.records.empty()) throw ParseError("judgment file has no header", 1);
  csv::expect_header(doc.records.front(), kJudgmentColumns, "judgment file");
  std::vector<Judgment> out;
  for (std::size_t i = 1; i < doc.records.size(); ++i) {
    const auto& rec = doc.records[i];
    csv::expect_width(rec, 4, "judgment row");
    const auto& f = rec.fields;
    if (f[0].empty() || f[1].empty()) throw ParseError("judgment row without pair_id or annotator", rec.line);
    const auto v = JudgmentValue::parse(f[2]);
    if (!v) throw ParseError("judgment '" + f[2] + "' is not an integer in 0..4", rec.line);
    std::optional<Timestamp> ts;
    if (!f[3].empty()) {
      ts = parse_timestamp(f[3]);
      if (!ts) throw ParseError("malformed timestamp '" + f[3] + "'", rec.line);
    }
    out.push_back({f[1], f[0], *v, ts});
  }
  return out;
}

}  // namespace durel

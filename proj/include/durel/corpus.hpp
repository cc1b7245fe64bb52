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

// Diachronic corpus in a normalized vertical format, and extraction of target
// word uses with their neighbouring sentences.
//
// Format (UTF-8):
//
//   #doc id=<doc_id> year=<YYYY>
//   surface<TAB>lemma<TAB>pos
//   ...
//   <blank line ends a sentence>
//
// A header line ends the previous document.

#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "durel/error.hpp"
#include "durel/orthography.hpp"

namespace durel {

struct Token {
  std::string surface;
  std::string lemma;
  std::string pos;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::size_t index = 0;
  std::vector<Token> tokens;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
  std::string doc_id;
  int year = 0;
  std::vector<Sentence> sentences;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> documents;

  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.sentences.size();
    return n;
  }
  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& d : documents)
      for (const auto& s : d.sentences) n += s.tokens.size();
    return n;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Inclusive range of document years.
struct PeriodSpec {
  std::string label;
  int start_year = 0;
  int end_year = 0;

  bool contains(int year) const noexcept { return start_year <= year && year <= end_year; }
  bool overlaps(const PeriodSpec& o) const noexcept {
    return start_year <= o.end_year && o.start_year <= end_year;
  }
  void validate() const {
    if (start_year > end_year)
      throw ValidationError("period '" + label + "' starts after it ends");
  }

  friend bool operator==(const PeriodSpec&, const PeriodSpec&) = default;
};

/// A target word: a lemma, optionally restricted to one part of speech.
struct TargetSpec {
  std::string lemma;
  std::optional<std::string> pos;

  std::string pos_or_empty() const { return pos.value_or(std::string{}); }

  /// `lemma` or `lemma/pos`, for messages.
  std::string display() const { return pos ? lemma + "/" + *pos : lemma; }

  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
  friend auto operator<=>(const TargetSpec& a, const TargetSpec& b) {
    if (auto c = a.lemma <=> b.lemma; c != 0) return c;
    return a.pos_or_empty() <=> b.pos_or_empty();
  }
};

/// One occurrence of a target word together with its context.
struct Use {
  std::string use_id;  // <doc_id>:<sentence index>:<token index>
  TargetSpec target;
  std::string doc_id;
  int year = 0;
  std::size_t sentence_index = 0;
  std::size_t token_index = 0;
  std::string prev_text;  // empty at document start
  std::string sent_text;  // target wrapped in << >>
  std::string next_text;  // empty at document end

  friend bool operator==(const Use&, const Use&) = default;
};

inline constexpr std::string_view kTargetOpen = "<<";
inline constexpr std::string_view kTargetClose = ">>";

struct ImportOptions {
  int min_year = 1400;
  int max_year = 2100;
  /// When false, token lines may carry an empty POS field.
  bool require_pos = true;
  /// Applied to surface and lemma of every token.
  OrthographyMap normalization{};
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto at = s.find(sep, start);
    out.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

inline Document parse_doc_header(std::string_view line, std::size_t lineno, const ImportOptions& opt) {
  std::optional<std::string> id;
  std::optional<int> year;
  std::size_t pos = 4;  // past "#doc"
  if (!line.starts_with("#doc") || (line.size() > 4 && line[4] != ' ' && line[4] != '\t'))
    throw ParseError("malformed metadata line, expected '#doc id=<id> year=<YYYY>'", lineno, 1);
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    const std::string_view attr = line.substr(pos, end - pos);
    const auto eq = attr.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ParseError("malformed metadata attribute '" + std::string(attr) + "'", lineno, pos + 1);
    const auto key = attr.substr(0, eq);
    const auto value = attr.substr(eq + 1);
    if (key == "id") {
      if (value.empty()) throw ParseError("empty document id", lineno, pos + 1);
      if (id) throw ParseError("duplicate id attribute", lineno, pos + 1);
      id = std::string(value);
    } else if (key == "year") {
      int y = 0;
      auto r = std::from_chars(value.data(), value.data() + value.size(), y);
      if (r.ec != std::errc{} || r.ptr != value.data() + value.size() || value.empty())
        throw ParseError("year is not an integer: '" + std::string(value) + "'", lineno, pos + 1);
      if (y < opt.min_year || y > opt.max_year)
        throw ParseError("year " + std::to_string(y) + " outside " + std::to_string(opt.min_year) +
                             "-" + std::to_string(opt.max_year),
                         lineno, pos + 1);
      if (year) throw ParseError("duplicate year attribute", lineno, pos + 1);
      year = y;
    } else {
      throw ParseError("unknown metadata attribute '" + std::string(key) + "'", lineno, pos + 1);
    }
    pos = end;
  }
  if (!id) throw ParseError("document header without id", lineno, 1);
  if (!year) throw ParseError("document '" + *id + "' has no year", lineno, 1);
  Document d;
  d.doc_id = std::move(*id);
  d.year = *year;
  return d;
}

}  // namespace detail

/// Reads a corpus in the vertical format. Errors carry the 1-based line (and
/// column, where meaningful) of the first offending line.
inline Corpus import_vertical(std::istream& in, const ImportOptions& opt = {}) {
  Corpus corpus;
  std::unordered_set<std::string> seen_ids;
  Document* doc = nullptr;
  Sentence sentence;

  auto close_sentence = [&] {
    if (doc && !sentence.tokens.empty()) {
      sentence.index = doc->sentences.size();
      doc->sentences.push_back(std::move(sentence));
    }
    sentence = {};
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);

    if (line.starts_with('#')) {
      close_sentence();
      Document d = detail::parse_doc_header(line, lineno, opt);
      if (!seen_ids.insert(d.doc_id).second)
        throw ParseError("duplicate document id '" + d.doc_id + "'", lineno, 1);
      corpus.documents.push_back(std::move(d));
      doc = &corpus.documents.back();
      continue;
    }
    if (line.empty()) {
      close_sentence();
      continue;
    }
    if (!doc) throw ParseError("token line before the first #doc header", lineno, 1);

    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3)
      throw ParseError("token line needs 3 tab-separated fields (surface, lemma, pos), found " +
                           std::to_string(fields.size()),
                       lineno, 1);
    const std::size_t lemma_col = fields[0].size() + 2;
    const std::size_t pos_col = lemma_col + fields[1].size() + 1;
    if (fields[0].empty()) throw ParseError("empty surface form", lineno, 1);
    if (fields[1].empty()) throw ParseError("empty lemma", lineno, lemma_col);
    if (fields[2].empty() && opt.require_pos) throw ParseError("empty POS tag", lineno, pos_col);
    sentence.tokens.push_back({opt.normalization.apply(fields[0]), opt.normalization.apply(fields[1]),
                               std::string(fields[2])});
  }
  close_sentence();
  return corpus;
}

/// Writes `corpus` so that import_vertical reproduces it exactly.
inline void export_vertical(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.documents) {
    out << "#doc id=" << d.doc_id << " year=" << d.year << '\n';
    for (const auto& s : d.sentences) {
      for (const auto& t : s.tokens) out << t.surface << '\t' << t.lemma << '\t' << t.pos << '\n';
      out << '\n';
    }
  }
}

/// Lowercases ASCII and the Latin-1 capitals (U+00C0-U+00DE) of UTF-8 text.
inline std::string fold_case(std::string_view s) {
  std::string out(s);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto c = static_cast<unsigned char>(out[i]);
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c + 32);
    } else if (c == 0xC3 && i + 1 < out.size()) {
      auto n = static_cast<unsigned char>(out[i + 1]);
      if (n >= 0x80 && n <= 0x9E && n != 0x97) out[i + 1] = static_cast<char>(n + 0x20);
      ++i;
    }
  }
  return out;
}

struct ExtractOptions {
  /// Lemma comparison is exact unless set.
  bool fold_lemma_case = false;
};

/// Space-joined surface forms; the token at `marked` is wrapped in << >>.
inline std::string render_sentence(const Sentence& s, std::optional<std::size_t> marked = std::nullopt) {
  std::string out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i) out.push_back(' ');
    if (marked && *marked == i) {
      out += kTargetOpen;
      out += s.tokens[i].surface;
      out += kTargetClose;
    } else {
      out += s.tokens[i].surface;
    }
  }
  return out;
}

namespace detail {

template <typename Visit>
void for_each_match(const Corpus& corpus, const TargetSpec& target, const PeriodSpec& period,
                    const ExtractOptions& opt, Visit&& visit) {
  std::vector<const Document*> docs;
  for (const auto& d : corpus.documents)
    if (period.contains(d.year)) docs.push_back(&d);
  std::sort(docs.begin(), docs.end(),
            [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });

  const std::string wanted = opt.fold_lemma_case ? fold_case(target.lemma) : target.lemma;
  for (const Document* d : docs) {
    for (std::size_t si = 0; si < d->sentences.size(); ++si) {
      const auto& toks = d->sentences[si].tokens;
      for (std::size_t ti = 0; ti < toks.size(); ++ti) {
        const auto& t = toks[ti];
        if (target.pos && t.pos != *target.pos) continue;
        if (opt.fold_lemma_case ? fold_case(t.lemma) != wanted : t.lemma != wanted) continue;
        visit(*d, si, ti);
      }
    }
  }
}

}  // namespace detail

/// All uses of `target` in documents dated within `period`, ordered by
/// (doc_id, sentence, token).
inline std::vector<Use> extract_uses(const Corpus& corpus, const TargetSpec& target,
                                     const PeriodSpec& period, const ExtractOptions& opt = {}) {
  std::vector<Use> uses;
  detail::for_each_match(corpus, target, period, opt, [&](const Document& d, std::size_t si, std::size_t ti) {
    Use u;
    u.use_id = d.doc_id + ":" + std::to_string(si) + ":" + std::to_string(ti);
    u.target = target;
    u.doc_id = d.doc_id;
    u.year = d.year;
    u.sentence_index = si;
    u.token_index = ti;
    if (si > 0) u.prev_text = render_sentence(d.sentences[si - 1]);
    u.sent_text = render_sentence(d.sentences[si], ti);
    if (si + 1 < d.sentences.size()) u.next_text = render_sentence(d.sentences[si + 1]);
    uses.push_back(std::move(u));
  });
  return uses;
}

/// Number of uses extract_uses would return.
inline std::size_t usage_frequency(const Corpus& corpus, const TargetSpec& target,
                                   const PeriodSpec& period, const ExtractOptions& opt = {}) {
  std::size_t n = 0;
  detail::for_each_match(corpus, target, period, opt, [&](const Document&, std::size_t, std::size_t) { ++n; });
  return n;
}

}  // namespace durel

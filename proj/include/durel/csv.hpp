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

// Minimal RFC 4180 reading and writing. Fields containing a comma, a double
// quote or a line break are quoted on output; quoted fields may span lines on
// input. Completely empty lines between records are ignored.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "durel/error.hpp"

namespace durel::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // line on which the record starts (1-based)
};

struct Document {
  std::vector<std::string> comments;  // leading '#' lines, prefix stripped
  std::vector<Record> records;
};

/// Parses CSV text. Lines starting with '#' before the first record are
/// collected as comments.
inline Document parse(std::string_view text) {
  Document doc;
  std::size_t pos = 0;
  std::size_t line = 1;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;

  while (pos < text.size() && doc.records.empty() && text[pos] == '#') {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view c = text.substr(pos + 1, end - pos - 1);
    if (!c.empty() && c.back() == '\r') c.remove_suffix(1);
    doc.comments.emplace_back(c);
    pos = end + 1;
    ++line;
  }

  while (pos < text.size()) {
    if (text[pos] == '\n') {
      ++pos;
      ++line;
      continue;
    }
    if (text[pos] == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') {
      pos += 2;
      ++line;
      continue;
    }
    Record rec;
    rec.line = line;
    std::string field;
    bool done = false;
    while (!done) {
      if (pos < text.size() && text[pos] == '"') {
        const std::size_t open_line = line;
        ++pos;
        for (;;) {
          if (pos >= text.size()) throw ParseError("unterminated quoted field", open_line);
          char ch = text[pos++];
          if (ch == '"') {
            if (pos < text.size() && text[pos] == '"') {
              field.push_back('"');
              ++pos;
            } else {
              break;
            }
          } else {
            if (ch == '\n') ++line;
            field.push_back(ch);
          }
        }
        if (pos < text.size() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r')
          throw ParseError("unexpected character after closing quote", line);
      } else {
        while (pos < text.size() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
          if (text[pos] == '"') throw ParseError("stray quote in unquoted field", line);
          field.push_back(text[pos++]);
        }
      }
      rec.fields.push_back(std::move(field));
      field.clear();
      if (pos >= text.size()) {
        done = true;
      } else if (text[pos] == ',') {
        ++pos;
      } else {
        if (text[pos] == '\r') ++pos;
        if (pos < text.size() && text[pos] == '\n') ++pos;
        ++line;
        done = true;
      }
    }
    doc.records.push_back(std::move(rec));
  }
  return doc;
}

inline Document parse(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse(text);
}

/// Throws unless `rec` holds exactly the expected column names.
inline void expect_header(const Record& rec, std::span<const std::string_view> names,
                          std::string_view what) {
  bool ok = rec.fields.size() == names.size();
  std::size_t i = 0;
  for (auto n : names) {
    if (!ok) break;
    ok = rec.fields[i++] == n;
  }
  if (!ok) {
    std::string expected;
    for (auto n : names) {
      if (!expected.empty()) expected += ',';
      expected += n;
    }
    throw ParseError(std::string(what) + ": expected header '" + expected + "'", rec.line);
  }
}

inline void expect_header(const Record& rec, std::initializer_list<std::string_view> names,
                          std::string_view what) {
  expect_header(rec, std::span<const std::string_view>(names.begin(), names.size()), what);
}

inline void expect_width(const Record& rec, std::size_t width, std::string_view what) {
  if (rec.fields.size() != width)
    throw ParseError(std::string(what) + ": expected " + std::to_string(width) +
                         " fields, found " + std::to_string(rec.fields.size()),
                     rec.line);
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

inline void write_row(std::ostream& out, std::initializer_list<std::string> fields) {
  write_row(out, std::span<const std::string>(fields.begin(), fields.size()));
}

}  // namespace durel::csv

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
#include <array>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "durel/error.hpp"

namespace durel {

struct RewriteRule {
  std::string from;
  std::string to;

  friend bool operator==(const RewriteRule&, const RewriteRule&) = default;
};

/// Rewrites historical spellings. At every position the longest matching
/// `from` sequence wins; the scan then resumes after the match, so replaced
/// text is never rescanned.
class OrthographyMap {
 public:
  OrthographyMap() = default;

  explicit OrthographyMap(std::vector<RewriteRule> rules) : rules_(std::move(rules)) {
    for (const auto& r : rules_)
      if (r.from.empty()) throw ValidationError("orthography rule with empty source sequence");
    // Stable so that, for duplicate sources, the first rule listed wins.
    std::stable_sort(rules_.begin(), rules_.end(), [](const RewriteRule& a, const RewriteRule& b) {
      return a.from.size() > b.from.size();
    });
    for (std::size_t i = 0; i < rules_.size(); ++i)
      by_lead_[static_cast<unsigned char>(rules_[i].from.front())].push_back(i);
  }

  /// Long s and the superscript-e umlaut spellings.
  static OrthographyMap historical_german() {
    return OrthographyMap({
        {"\xC5\xBF", "s"},             // long s
        {"a\xCD\xA4", "\xC3\xA4"},  // a + combining small e
        {"o\xCD\xA4", "\xC3\xB6"},
        {"u\xCD\xA4", "\xC3\xBC"},
        {"A\xCD\xA4", "\xC3\x84"},
        {"O\xCD\xA4", "\xC3\x96"},
        {"U\xCD\xA4", "\xC3\x9C"},
    });
  }

  /// One rule per line, `from<TAB>to`. Blank lines are skipped.
  static OrthographyMap parse(std::istream& in) {
    std::vector<RewriteRule> rules;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError("mapping rule needs from<TAB>to", lineno);
      if (line.find('\t', tab + 1) != std::string::npos)
        throw ParseError("mapping rule has more than two fields", lineno);
      if (tab == 0) throw ParseError("mapping rule with empty source sequence", lineno, 1);
      rules.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return OrthographyMap(std::move(rules));
  }

  std::span<const RewriteRule> rules() const noexcept { return rules_; }
  bool empty() const noexcept { return rules_.empty(); }

  std::string apply(std::string_view text) const {
    if (rules_.empty()) return std::string(text);
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
      const RewriteRule* hit = nullptr;
      for (std::size_t idx : by_lead_[static_cast<unsigned char>(text[pos])]) {
        const auto& r = rules_[idx];
        if (text.compare(pos, r.from.size(), r.from) == 0) {
          hit = &r;
          break;
        }
      }
      if (hit) {
        out += hit->to;
        pos += hit->from.size();
      } else {
        out.push_back(text[pos++]);
      }
    }
    return out;
  }

 private:
  std::vector<RewriteRule> rules_;
  std::array<std::vector<std::size_t>, 256> by_lead_{};
};

inline std::string normalize_orthography(std::string_view text, std::span<const RewriteRule> mapping) {
  return OrthographyMap({mapping.begin(), mapping.end()}).apply(text);
}

}  // namespace durel

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

// Study configuration: a flat `key = value` text file. '#' starts a comment
// line. `target` may repeat. Relative paths are resolved against the
// directory of the config file.
//
//   corpus            = corpus.vrt
//   normalization     = default          # or none, or a mapping file
//   period1           = earlier 1750 1800
//   period2           = later 1850 1900
//   target            = Presse NN        # lemma [pos]
//   pairs_per_group   = 20
//   seed              = 42
//   allow_reuse_twice = true
//   threshold         = 0.1
//   policy            = reject           # or latest-wins
//   lemma_case_insensitive = false
//   require_pos       = true
//   min_year          = 1400
//   max_year          = 2100

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "durel/corpus.hpp"
#include "durel/error.hpp"
#include "durel/judgments.hpp"
#include "durel/measures.hpp"
#include "durel/sampling.hpp"

namespace durel {

struct StudyConfig {
  std::filesystem::path corpus;
  /// "default", "none" or a path to a mapping file.
  std::string normalization = "default";
  PeriodSpec period1{"earlier", 1750, 1800};
  PeriodSpec period2{"later", 1850, 1900};
  std::vector<TargetSpec> targets;
  SamplingConfig sampling{};
  double threshold = kDefaultThreshold;
  DuplicatePolicy policy = DuplicatePolicy::kReject;
  bool lemma_case_insensitive = false;
  bool require_pos = true;
  int min_year = 1400;
  int max_year = 2100;

  void validate() const {
    period1.validate();
    period2.validate();
    if (period1.overlaps(period2)) throw ValidationError("periods must be disjoint");
    if (targets.empty()) throw ValidationError("config lists no target");
    sampling.validate();
    if (!(threshold >= 0.0)) throw ValidationError("threshold must be non-negative");
  }

  OrthographyMap orthography() const {
    if (normalization == "default") return OrthographyMap::historical_german();
    if (normalization == "none" || normalization.empty()) return {};
    std::ifstream in(normalization);
    if (!in) throw IoError("cannot read normalization mapping " + normalization);
    return OrthographyMap::parse(in);
  }

  ImportOptions import_options() const {
    ImportOptions o;
    o.min_year = min_year;
    o.max_year = max_year;
    o.require_pos = require_pos;
    o.normalization = orthography();
    return o;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, std::string_view key) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ParseError(std::string(key) + ": not a number: '" + std::string(s) + "'", line);
  return v;
}

inline bool parse_bool(std::string_view s, std::size_t line, std::string_view key) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ParseError(std::string(key) + ": expected true or false", line);
}

}  // namespace detail

inline StudyConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  StudyConfig c;
  std::string raw;
  std::size_t line = 0;
  auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  auto period = [&](std::string_view v, std::string_view key) {
    const auto w = detail::words(v);
    if (w.size() != 3) throw ParseError(std::string(key) + ": expected '<label> <start> <end>'", line);
    PeriodSpec p{w[0], detail::parse_number<int>(w[1], line, key), detail::parse_number<int>(w[2], line, key)};
    if (p.start_year > p.end_year) throw ParseError(std::string(key) + ": start after end", line);
    return p;
  };
  while (std::getline(in, raw)) {
    ++line;
    const auto text = detail::trim(raw);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line);
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    if (key == "corpus") {
      c.corpus = resolve(value);
    } else if (key == "normalization") {
      c.normalization = (value == "default" || value == "none") ? std::string(value) : resolve(value).string();
    } else if (key == "period1") {
      c.period1 = period(value, key);
    } else if (key == "period2") {
      c.period2 = period(value, key);
    } else if (key == "target") {
      const auto w = detail::words(value);
      if (w.empty() || w.size() > 2) throw ParseError("target: expected '<lemma> [pos]'", line);
      c.targets.push_back({w[0], w.size() == 2 ? std::optional<std::string>(w[1]) : std::nullopt});
    } else if (key == "pairs_per_group") {
      c.sampling.pairs_per_group = detail::parse_number<std::size_t>(value, line, key);
    } else if (key == "seed") {
      c.sampling.seed = detail::parse_number<std::uint64_t>(value, line, key);
    } else if (key == "allow_reuse_twice") {
      c.sampling.allow_reuse_twice = detail::parse_bool(value, line, key);
    } else if (key == "threshold") {
      c.threshold = detail::parse_number<double>(value, line, key);
    } else if (key == "policy") {
      const auto p = parse_policy(value);
      if (!p) throw ParseError("policy: expected reject or latest-wins", line);
      c.policy = *p;
    } else if (key == "lemma_case_insensitive") {
      c.lemma_case_insensitive = detail::parse_bool(value, line, key);
    } else if (key == "require_pos") {
      c.require_pos = detail::parse_bool(value, line, key);
    } else if (key == "min_year") {
      c.min_year = detail::parse_number<int>(value, line, key);
    } else if (key == "max_year") {
      c.max_year = detail::parse_number<int>(value, line, key);
    } else {
      throw ParseError("unknown config key '" + std::string(key) + "'", line);
    }
  }
  return c;
}

inline StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  return parse_config(in, path.parent_path());
}

}  // namespace durel

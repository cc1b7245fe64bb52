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

// Analysis results and their CSV reports.
//
// measures:    lemma,pos,mean_earlier,mean_later,mean_compare,delta_later,
//              compare,delta_compare,class,n_pairs_e,n_pairs_l,n_pairs_c
// agreement:   annotator_a,annotator_b,rho,n,p  (annotator_b = REST for
//              annotator-vs-rest rows, final MEAN_PAIRWISE row)
// histograms:  lemma,pos,group,n0,n1,n2,n3,n4
//
// Undefined values are written as empty cells.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "durel/agreement.hpp"
#include "durel/csv.hpp"
#include "durel/measures.hpp"

namespace durel {

/// Fixed-point with `digits` decimals; never prints a negative zero.
inline std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string format_optional(const std::optional<double>& v, int digits = 6) {
  return v ? format_fixed(*v, digits) : std::string{};
}

/// p-values span many orders of magnitude, so they use significant digits.
inline std::string format_p(const std::optional<double>& p) {
  if (!p) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", *p);
  return buf;
}

inline std::optional<double> parse_optional_real(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ParseError("not a number: '" + s + "'", line);
  return v;
}

struct TargetAnalysis {
  GroupMeans means;
  ChangeMeasures measures;
  std::optional<ChangeClass> change_class;  // from delta_later
};

/// Per-target means, measures and class, ranked by delta_later.
inline std::vector<TargetAnalysis> analyze_targets(const JudgmentMatrix& m, const TaskKey& key,
                                                   double threshold = kDefaultThreshold) {
  std::vector<ChangeMeasures> measures;
  std::vector<GroupMeans> means;
  for (const auto& t : key.targets()) {
    means.push_back(group_means(m, key, t));
    measures.push_back(change_measures(means.back()));
  }
  std::vector<TargetAnalysis> out;
  for (const auto& cm : rank_targets(measures, Measure::kDeltaLater)) {
    const auto it = std::find_if(means.begin(), means.end(), [&](const GroupMeans& g) { return g.target == cm.target; });
    TargetAnalysis a{*it, cm, std::nullopt};
    if (cm.delta_later) a.change_class = classify(*cm.delta_later, threshold);
    out.push_back(std::move(a));
  }
  return out;
}

inline constexpr std::array<std::string_view, 12> kMeasuresColumns = {
    "lemma", "pos", "mean_earlier", "mean_later", "mean_compare", "delta_later", "compare",
    "delta_compare", "class", "n_pairs_e", "n_pairs_l", "n_pairs_c"};

inline void write_measures(std::ostream& out, std::span<const TargetAnalysis> rows) {
  out << "lemma,pos,mean_earlier,mean_later,mean_compare,delta_later,compare,delta_compare,class,"
         "n_pairs_e,n_pairs_l,n_pairs_c\n";
  for (const auto& r : rows) {
    const auto& g = r.means;
    const auto& m = r.measures;
    csv::write_row(out, {g.target.lemma, g.target.pos_or_empty(), format_optional(g.mean_e),
                         format_optional(g.mean_l), format_optional(g.mean_c), format_optional(m.delta_later),
                         format_optional(m.compare), format_optional(m.delta_compare),
                         r.change_class ? std::string(to_string(*r.change_class)) : std::string{},
                         std::to_string(g.n_pairs_e), std::to_string(g.n_pairs_l), std::to_string(g.n_pairs_c)});
  }
}

/// The subset of a measures report needed for plotting.
struct MeasuresRow {
  TargetSpec target;
  std::optional<double> delta_later;
  std::string change_class;
};

inline std::vector<MeasuresRow> read_measures(std::istream& in) {
  const auto doc = csv::parse(in);
  if (doc.records.empty()) throw ParseError("measures file has no header", 1);
  csv::expect_header(doc.records.front(), kMeasuresColumns, "measures file");
  std::vector<MeasuresRow> out;
  for (std::size_t i = 1; i < doc.records.size(); ++i) {
    const auto& rec = doc.records[i];
    csv::expect_width(rec, 12, "measures row");
    const auto& f = rec.fields;
    out.push_back({{f[0], f[1].empty() ? std::nullopt : std::optional<std::string>(f[1])},
                   parse_optional_real(f[5], rec.line), f[8]});
  }
  return out;
}

inline void write_agreement(std::ostream& out, const AgreementReport& r) {
  out << "annotator_a,annotator_b,rho,n,p\n";
  for (const auto& c : r.pairwise)
    csv::write_row(out, {r.annotators[c.a], r.annotators[c.b], format_optional(c.corr.rho), std::to_string(c.corr.n),
                         format_p(c.corr.p)});
  for (std::size_t a = 0; a < r.avg_vs_rest.size(); ++a) {
    const auto& c = r.avg_vs_rest[a];
    csv::write_row(out, {r.annotators[a], "REST", format_optional(c.rho), std::to_string(c.n), format_p(c.p)});
  }
  std::size_t defined = 0;
  for (const auto& c : r.pairwise) defined += c.corr.defined();
  std::optional<double> mean;
  if (defined > 0) mean = mean_pairwise(r);
  csv::write_row(out, {"MEAN_PAIRWISE", "", format_optional(mean), std::to_string(defined), ""});
}

struct HistogramRow {
  TargetSpec target;
  GroupId group = GroupId::kEarlier;
  Histogram counts{};
};

inline std::vector<HistogramRow> histograms(const JudgmentMatrix& m, const TaskKey& key) {
  std::vector<HistogramRow> out;
  for (const auto& t : key.targets())
    for (GroupId g : kAllGroups) out.push_back({t, g, histogram(m, key, t, g)});
  return out;
}

inline void write_histograms(std::ostream& out, std::span<const HistogramRow> rows) {
  out << "lemma,pos,group,n0,n1,n2,n3,n4\n";
  for (const auto& r : rows) {
    std::vector<std::string> f{r.target.lemma, r.target.pos_or_empty(), std::string(to_string(r.group))};
    for (auto c : r.counts) f.push_back(std::to_string(c));
    csv::write_row(out, f);
  }
}

inline std::vector<HistogramRow> read_histograms(std::istream& in) {
  const auto doc = csv::parse(in);
  if (doc.records.empty()) throw ParseError("histogram file has no header", 1);
  csv::expect_header(doc.records.front(), {"lemma", "pos", "group", "n0", "n1", "n2", "n3", "n4"}, "histogram file");
  std::vector<HistogramRow> out;
  for (std::size_t i = 1; i < doc.records.size(); ++i) {
    const auto& rec = doc.records[i];
    csv::expect_width(rec, 8, "histogram row");
    const auto& f = rec.fields;
    const auto g = parse_group(f[2]);
    if (!g) throw ParseError("unknown group '" + f[2] + "'", rec.line);
    HistogramRow row{{f[0], f[1].empty() ? std::nullopt : std::optional<std::string>(f[1])}, *g, {}};
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& s = f[3 + k];
      auto r = std::from_chars(s.data(), s.data() + s.size(), row.counts[k]);
      if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ParseError("count is not a non-negative integer: '" + s + "'", rec.line);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace durel

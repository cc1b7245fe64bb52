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

// Self-contained SVG figures. Each figure is first written as a CSV of the
// plotted numbers; the SVG renderers only take that CSV as input, so the two
// can never disagree.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "durel/csv.hpp"
#include "durel/report.hpp"

namespace durel::plot {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string px(double v) { return format_fixed(v, 2); }

// ---------------------------------------------------------------------------
// Ranked delta_later bar chart

/// Figure data `rank,lemma,pos,delta_later,class`, descending by
/// delta_later. Targets without a delta_later are left out.
inline std::string ranked_delta_later_csv(std::vector<MeasuresRow> rows) {
  std::erase_if(rows, [](const MeasuresRow& r) { return !r.delta_later; });
  std::stable_sort(rows.begin(), rows.end(), [](const MeasuresRow& a, const MeasuresRow& b) {
    if (*a.delta_later != *b.delta_later) return *a.delta_later > *b.delta_later;
    return a.target < b.target;
  });
  std::ostringstream out;
  out << "rank,lemma,pos,delta_later,class\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    csv::write_row(out, {std::to_string(i + 1), rows[i].target.lemma, rows[i].target.pos_or_empty(),
                         format_fixed(*rows[i].delta_later), rows[i].change_class});
  return out.str();
}

inline std::string ranked_delta_later_svg(std::string_view figure_csv) {
  const auto doc = csv::parse(figure_csv);
  if (doc.records.empty()) throw ParseError("figure data has no header", 1);
  csv::expect_header(doc.records.front(), {"rank", "lemma", "pos", "delta_later", "class"}, "ranked figure data");
  struct Bar {
    std::string label;
    double value;
  };
  std::vector<Bar> bars;
  for (std::size_t i = 1; i < doc.records.size(); ++i) {
    const auto& f = doc.records[i].fields;
    csv::expect_width(doc.records[i], 5, "ranked figure row");
    bars.push_back({f[1], *parse_optional_real(f[3], doc.records[i].line)});
  }

  double extent = 0.5;
  for (const auto& b : bars) extent = std::max(extent, std::abs(b.value));
  extent = std::ceil(extent * 4.0) / 4.0;

  const double left = 60, top = 40, plot_h = 300, bar_w = 24, gap = 8;
  const double plot_w = std::max(1.0, static_cast<double>(bars.size())) * (bar_w + gap) + gap;
  const double width = left + plot_w + 20, height = top + plot_h + 110;
  const double zero_y = top + plot_h / 2;
  const double scale = (plot_h / 2) / extent;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << px(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << "Targets ranked by delta_later</text>\n";
  for (double tick = -extent; tick <= extent + 1e-9; tick += 0.25) {
    const double y = zero_y - tick * scale;
    svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(y) << "\" x2=\"" << px(left + plot_w) << "\" y2=\""
        << px(y) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << px(left - 6) << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">"
        << format_fixed(tick, 2) << "</text>\n";
  }
  svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(zero_y) << "\" x2=\"" << px(left + plot_w) << "\" y2=\""
      << px(zero_y) << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x = left + gap + static_cast<double>(i) * (bar_w + gap);
    const double h = std::abs(bars[i].value) * scale;
    const double y = bars[i].value >= 0 ? zero_y - h : zero_y;
    const char* fill = bars[i].value >= 0 ? "#4c72b0" : "#dd8452";
    svg << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(bar_w) << "\" height=\"" << px(h)
        << "\" fill=\"" << fill << "\"><title>" << xml_escape(bars[i].label) << ": "
        << format_fixed(bars[i].value) << "</title></rect>\n";
    const double lx = x + bar_w / 2, ly = top + plot_h + 10;
    svg << "<text x=\"" << px(lx) << "\" y=\"" << px(ly) << "\" transform=\"rotate(60 " << px(lx) << ' ' << px(ly)
        << ")\">" << xml_escape(bars[i].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// ---------------------------------------------------------------------------
// Judgment frequencies per group for one target

/// Figure data `group,value,count`: 15 rows, groups in EARLIER, LATER,
/// COMPARE order.
inline std::string histogram_csv(std::span<const HistogramRow> rows_for_target) {
  std::ostringstream out;
  out << "group,value,count\n";
  for (GroupId g : kAllGroups) {
    Histogram h{};
    for (const auto& r : rows_for_target)
      if (r.group == g) h = r.counts;
    for (std::size_t v = 0; v < h.size(); ++v)
      csv::write_row(out, {std::string(to_string(g)), std::to_string(v), std::to_string(h[v])});
  }
  return out.str();
}

inline std::string histogram_svg(std::string_view title, std::string_view figure_csv) {
  const auto doc = csv::parse(figure_csv);
  if (doc.records.empty()) throw ParseError("figure data has no header", 1);
  csv::expect_header(doc.records.front(), {"group", "value", "count"}, "histogram figure data");
  struct Cell {
    std::string group;
    std::string value;
    double count;
  };
  std::vector<Cell> cells;
  std::vector<std::string> groups;
  for (std::size_t i = 1; i < doc.records.size(); ++i) {
    const auto& rec = doc.records[i];
    csv::expect_width(rec, 3, "histogram figure row");
    cells.push_back({rec.fields[0], rec.fields[1], *parse_optional_real(rec.fields[2], rec.line)});
    if (std::find(groups.begin(), groups.end(), rec.fields[0]) == groups.end()) groups.push_back(rec.fields[0]);
  }

  double max_count = 1;
  for (const auto& c : cells) max_count = std::max(max_count, c.count);
  const double panel_w = 170, panel_gap = 20, left = 40, top = 40, plot_h = 200, bar_w = 24, gap = 6;
  const double width = left + static_cast<double>(groups.size()) * (panel_w + panel_gap) + 10;
  const double height = top + plot_h + 60;
  const double scale = plot_h / max_count;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << px(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(title) << ": judgment frequencies</text>\n";
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double x0 = left + static_cast<double>(gi) * (panel_w + panel_gap);
    const double base = top + plot_h;
    svg << "<line x1=\"" << px(x0) << "\" y1=\"" << px(base) << "\" x2=\"" << px(x0 + panel_w) << "\" y2=\""
        << px(base) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px(x0 + panel_w / 2) << "\" y=\"" << px(base + 36)
        << "\" text-anchor=\"middle\">" << xml_escape(groups[gi]) << "</text>\n";
    std::size_t slot = 0;
    for (const auto& c : cells) {
      if (c.group != groups[gi]) continue;
      const double x = x0 + gap + static_cast<double>(slot++) * (bar_w + gap);
      const double h = c.count * scale;
      svg << "<rect x=\"" << px(x) << "\" y=\"" << px(base - h) << "\" width=\"" << px(bar_w) << "\" height=\""
          << px(h) << "\" fill=\"#55a868\"><title>" << xml_escape(c.value) << ": " << format_fixed(c.count, 0)
          << "</title></rect>\n";
      svg << "<text x=\"" << px(x + bar_w / 2) << "\" y=\"" << px(base + 14) << "\" text-anchor=\"middle\">"
          << xml_escape(c.value) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace durel::plot

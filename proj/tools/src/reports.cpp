// Copyright 2026 The branchgrid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "branchgrid/cli/reports.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"

namespace branchgrid::cli {
namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

template <class T>
T number(const std::string& cell, std::size_t line, const char* column) {
  T v{};
  const auto* end = cell.data() + cell.size();
  const auto r = std::from_chars(cell.data(), end, v);
  if (cell.empty() || r.ec != std::errc() || r.ptr != end) {
    throw ParseError(fmt::format("line {}: bad {} value '{}'", line, column, cell));
  }
  return v;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.day, r.policy, r.cost_usd, r.return_usd,
                       r.improvement_pct);
  }
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kMetricsHeader) {
    throw ParseError(fmt::format("line 1: expected header '{}'", kMetricsHeader));
  }
  std::vector<MetricsRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    if (cells.size() != 5) throw ParseError(fmt::format("line {}: expected 5 columns", i + 1));
    MetricsRow r;
    r.day = number<int>(cells[0], i + 1, "day");
    r.policy = cells[1];
    if (r.policy.empty()) throw ParseError(fmt::format("line {}: empty policy", i + 1));
    r.cost_usd = number<double>(cells[2], i + 1, "cost_usd");
    r.return_usd = number<double>(cells[3], i + 1, "return_usd");
    r.improvement_pct = number<double>(cells[4], i + 1, "improvement_pct");
    rows.push_back(r);
  }
  return rows;
}

std::vector<PolicySummary> summarize(const std::vector<MetricsRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> by_policy;
  for (const auto& r : rows) {
    auto& v = by_policy[r.policy];
    if (v.empty()) order.push_back(r.policy);
    v.push_back(r.improvement_pct);
  }
  std::vector<PolicySummary> out;
  for (const auto& name : order) {
    const auto& v = by_policy[name];
    PolicySummary s;
    s.policy = name;
    s.days = v.size();
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.max = *std::max_element(v.begin(), v.end());
    s.min = *std::min_element(v.begin(), v.end());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.push_back(s);
  }
  return out;
}

std::string summary_to_csv(const std::vector<PolicySummary>& table) {
  std::string out = "policy,days,mean_pct,max_pct,min_pct,stddev_pct\n";
  for (const auto& s : table) {
    out += fmt::format("{},{},{:.4f},{:.4f},{:.4f},{:.4f}\n", s.policy, s.days, s.mean, s.max,
                       s.min, s.stddev);
  }
  return out;
}

EvalTrace parse_eval_trace(const std::string& text, const std::string& label) {
  static const std::string kHeader = "episode,step,epsilon,loss,episode_return,eval_return";
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kHeader) {
    throw ParseError(fmt::format("{}: line 1: expected header '{}'", label, kHeader));
  }
  EvalTrace t;
  t.label = label;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    if (cells.size() != 6) {
      throw ParseError(fmt::format("{}: line {}: expected 6 columns", label, i + 1));
    }
    if (cells[5].empty()) continue;
    t.points.push_back({number<std::int64_t>(cells[0], i + 1, "episode"),
                        number<double>(cells[5], i + 1, "eval_return")});
  }
  if (t.points.empty()) throw ValidationError(label + ": log has no evaluation returns");
  return t;
}

std::vector<EvalPoint> median_trace(const std::vector<EvalTrace>& traces) {
  if (traces.empty()) return {};
  std::map<std::int64_t, std::vector<double>> at;
  for (const auto& t : traces) {
    for (const auto& p : t.points) at[p.episode].push_back(p.value);
  }
  std::vector<EvalPoint> out;
  for (auto& [ep, v] : at) {
    if (v.size() != traces.size()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double med = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    out.push_back({ep, med});
  }
  return out;
}

std::string render_svg(const std::vector<EvalTrace>& traces) {
  if (traces.empty()) throw ValidationError("plot needs at least one training log");
  constexpr double kW = 720, kH = 420, kLeft = 80, kRight = 20, kTop = 30, kBottom = 50;
  static const char* kPalette[] = {"#9aa5b1", "#c7a27c", "#95b89a", "#b59ac7", "#c79a9a",
                                   "#8fb8c4", "#c4bb8f", "#a3a3a3"};

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& t : traces) {
    if (t.points.empty()) throw ValidationError(t.label + ": trace is empty");
    for (const auto& p : t.points) {
      x0 = std::min(x0, static_cast<double>(p.episode));
      x1 = std::max(x1, static_cast<double>(p.episode));
      y0 = std::min(y0, p.value);
      y1 = std::max(y1, p.value);
    }
  }
  if (x1 <= x0) { x0 -= 1; x1 += 1; }
  if (y1 <= y0) { y0 -= 1; y1 += 1; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  auto sy = [&](double y) { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); };
  auto polyline = [&](const std::vector<EvalPoint>& pts) {
    std::string s;
    for (const auto& p : pts) {
      if (!s.empty()) s += ' ';
      s += fmt::format("{:.2f},{:.2f}", sx(static_cast<double>(p.episode)), sy(p.value));
    }
    return s;
  };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      kW, kH);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kW, kH);
  out += fmt::format(
      "<g stroke=\"black\" stroke-width=\"1\"><line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\"/>"
      "<line x1=\"{0}\" y1=\"{3}\" x2=\"{0}\" y2=\"{2}\"/></g>\n",
      kLeft, kW - kRight, kH - kBottom, kTop);
  out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:g}</text>\n",
                       sx(xv), kH - kBottom + 16, xv);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.1f}</text>\n",
                       kLeft - 6, sy(yv) + 4, yv);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">episode</text>\n",
                     (kLeft + kW - kRight) / 2, kH - 12);
  out += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">"
      "evaluation return (USD)</text>\n",
      (kTop + kH - kBottom) / 2, (kTop + kH - kBottom) / 2);
  out += "</g>\n";

  for (std::size_t i = 0; i < traces.size(); ++i) {
    out += fmt::format(
        "<polyline class=\"trace\" data-label=\"{}\" fill=\"none\" stroke=\"{}\" "
        "stroke-width=\"1.2\" points=\"{}\"/>\n",
        xml_escape(traces[i].label), kPalette[i % std::size(kPalette)],
        polyline(traces[i].points));
  }
  if (traces.size() > 1) {
    const auto med = median_trace(traces);
    if (!med.empty()) {
      out += fmt::format(
          "<polyline class=\"median\" fill=\"none\" stroke=\"#1f4fd6\" stroke-width=\"2.5\" "
          "points=\"{}\"/>\n",
          polyline(med));
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace branchgrid::cli

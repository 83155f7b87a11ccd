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


// Tabular artifacts: per-day metrics, comparison tables and the
// training-curve SVG.

#ifndef BRANCHGRID_CLI_REPORTS_HPP_
#define BRANCHGRID_CLI_REPORTS_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace branchgrid::cli {

inline constexpr const char* kMetricsHeader = "day,policy,cost_usd,return_usd,improvement_pct";

struct MetricsRow {
  int day = 0;
  std::string policy;
  double cost_usd = 0.0;
  double return_usd = 0.0;
  double improvement_pct = 0.0;
};

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
// Throws ParseError with the offending line number.
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

struct PolicySummary {
  std::string policy;
  std::size_t days = 0;
  double mean = 0.0, max = 0.0, min = 0.0, stddev = 0.0;  // improvement_pct
};

// One summary per policy, in first-appearance order. stddev uses n - 1 and
// is 0 for a single day.
std::vector<PolicySummary> summarize(const std::vector<MetricsRow>& rows);
std::string summary_to_csv(const std::vector<PolicySummary>& table);

struct EvalPoint {
  std::int64_t episode = 0;
  double value = 0.0;
};

struct EvalTrace {
  std::string label;
  std::vector<EvalPoint> points;
};

// Reads the eval_return column of a TrainLog CSV. Throws ParseError on a
// malformed file and ValidationError when no row carries an eval return.
EvalTrace parse_eval_trace(const std::string& text, const std::string& label);

// Median across traces at every episode present in all of them.
std::vector<EvalPoint> median_trace(const std::vector<EvalTrace>& traces);

// Deterministic SVG: one polyline per trace, plus a median polyline when
// there is more than one trace. Throws ValidationError on an empty set.
std::string render_svg(const std::vector<EvalTrace>& traces);

}  // namespace branchgrid::cli

#endif  // BRANCHGRID_CLI_REPORTS_HPP_

// Copyright 2026 The qcvrp Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcvrp/env/cvrp.hpp"

namespace qcvrp::harness {

// Sum of Euclidean lengths between consecutive logged positions.
double total_distance(const env::RouteLog& routes);

// 100 * sum over vehicles that served at least one client of the mean
// distance from each served client to that vehicle's served-client centroid.
// Throws ContractError when no client was served at all.
double compactness(const env::RouteLog& routes);

// Unordered pairs of properly intersecting route segments, skipping pairs of
// consecutive segments of the same vehicle.
std::size_t crossings_count(const env::RouteLog& routes);

struct MetricsRecord {
  std::string variant;
  std::uint64_t seed = 0;
  double reward = 0.0;
  double distance = 0.0;
  std::optional<double> compactness;  // unset when nothing was served
  std::size_t crossings = 0;
  std::size_t served = 0;
};

MetricsRecord measure(const env::EnvState& final_state);

void to_json(nlohmann::json& j, const MetricsRecord& r);
void from_json(const nlohmann::json& j, MetricsRecord& r);

struct Stat {
  double avg = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  bool operator==(const Stat&) const = default;
};

// variant -> metric ("distance", "compactness", "crossings") -> statistics.
using Aggregate = std::map<std::string, std::map<std::string, Stat>>;

// Records without a compactness value are left out of that metric only.
Aggregate aggregate_runs(const std::vector<MetricsRecord>& records);

struct BoxplotSummary {
  double min = 0.0;  // lower whisker end
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;  // upper whisker end
  std::vector<double> outliers;
  bool operator==(const BoxplotSummary&) const = default;
};

// Linear-interpolation quartiles; whiskers at the most extreme points within
// 1.5 IQR of the box, everything beyond is an outlier.
BoxplotSummary boxplot_summary(std::vector<double> values);

// Quantile q in [0, 1] of sorted values, interpolating between order stats.
double quantile_sorted(const std::vector<double>& sorted, double q);

void to_json(nlohmann::json& j, const Stat& s);
void from_json(const nlohmann::json& j, Stat& s);
void to_json(nlohmann::json& j, const BoxplotSummary& b);
void from_json(const nlohmann::json& j, BoxplotSummary& b);

// Plain-text table: one row per metric and statistic, one column per variant.
std::string format_table(const Aggregate& agg);

}  // namespace qcvrp::harness

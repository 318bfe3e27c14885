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

#include "qcvrp/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qcvrp/common/error.hpp"
#include "qcvrp/env/geometry.hpp"

namespace qcvrp::harness {

using nlohmann::json;

double total_distance(const env::RouteLog& routes) {
  double d = 0.0;
  for (const auto& path : routes.positions) {
    for (std::size_t i = 1; i < path.size(); ++i) {
      d += env::distance(path[i - 1], path[i]);
    }
  }
  return d;
}

double compactness(const env::RouteLog& routes) {
  double total = 0.0;
  std::size_t served = 0;
  for (const auto& stops : routes.stops) {
    std::vector<env::Point> pts;
    for (const auto& s : stops) {
      if (s.client >= 0) pts.push_back(s.position);
    }
    if (pts.empty()) continue;
    served += pts.size();
    env::Point c;
    for (const auto& p : pts) {
      c.x += p.x;
      c.y += p.y;
    }
    c.x /= static_cast<double>(pts.size());
    c.y /= static_cast<double>(pts.size());
    double sum = 0.0;
    for (const auto& p : pts) sum += env::distance(p, c);
    total += sum / static_cast<double>(pts.size());
  }
  if (served == 0) throw ContractError("compactness undefined: no client served");
  return 100.0 * total;
}

std::size_t crossings_count(const env::RouteLog& routes) {
  struct Seg {
    env::Point a, b;
    std::size_t vehicle, index;
  };
  std::vector<Seg> segs;
  for (std::size_t v = 0; v < routes.positions.size(); ++v) {
    const auto& path = routes.positions[v];
    for (std::size_t i = 1; i < path.size(); ++i) {
      segs.push_back(Seg{path[i - 1], path[i], v, i - 1});
    }
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t j = i + 1; j < segs.size(); ++j) {
      const auto& s = segs[i];
      const auto& t = segs[j];
      if (s.vehicle == t.vehicle &&
          (s.index + 1 == t.index || t.index + 1 == s.index)) {
        continue;
      }
      if (env::segments_properly_intersect(s.a, s.b, t.a, t.b)) ++n;
    }
  }
  return n;
}

MetricsRecord measure(const env::EnvState& s) {
  MetricsRecord r;
  r.distance = total_distance(s.routes);
  r.crossings = crossings_count(s.routes);
  r.served = env::served_count(s);
  if (r.served > 0) r.compactness = compactness(s.routes);
  return r;
}

void to_json(json& j, const MetricsRecord& r) {
  j = json{{"variant", r.variant},
           {"seed", r.seed},
           {"reward", r.reward},
           {"distance", r.distance},
           {"compactness", r.compactness ? json(*r.compactness) : json(nullptr)},
           {"crossings", r.crossings},
           {"served", r.served}};
}

void from_json(const json& j, MetricsRecord& r) {
  r.variant = j.at("variant").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.reward = j.at("reward").get<double>();
  r.distance = j.at("distance").get<double>();
  const auto& c = j.at("compactness");
  r.compactness = c.is_null() ? std::nullopt : std::optional<double>(c.get<double>());
  r.crossings = j.at("crossings").get<std::size_t>();
  r.served = j.at("served").get<std::size_t>();
}

namespace {

void accumulate(Stat& s, double x) {
  if (s.count == 0) {
    s.min = s.max = x;
  } else {
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.avg += x;
  ++s.count;
}

}  // namespace

Aggregate aggregate_runs(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw ContractError("no records to aggregate");
  // Sort per variant so the floating-point sums do not depend on input order.
  std::map<std::string, std::vector<MetricsRecord>> by_variant;
  for (const auto& r : records) by_variant[r.variant].push_back(r);
  Aggregate out;
  for (auto& [variant, rs] : by_variant) {
    std::vector<double> dist, comp, cross;
    for (const auto& r : rs) {
      dist.push_back(r.distance);
      if (r.compactness) comp.push_back(*r.compactness);
      cross.push_back(static_cast<double>(r.crossings));
    }
    auto fill = [&](const char* name, std::vector<double> xs) {
      if (xs.empty()) return;
      std::sort(xs.begin(), xs.end());
      Stat s;
      for (double x : xs) accumulate(s, x);
      s.avg /= static_cast<double>(s.count);
      out[variant][name] = s;
    };
    fill("distance", dist);
    fill("compactness", comp);
    fill("crossings", cross);
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ContractError("quantile of an empty list");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxplotSummary boxplot_summary(std::vector<double> values) {
  if (values.empty()) throw ContractError("boxplot of an empty list");
  std::sort(values.begin(), values.end());
  BoxplotSummary b;
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.min = std::numeric_limits<double>::infinity();
  b.max = -std::numeric_limits<double>::infinity();
  for (double x : values) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
    } else {
      b.min = std::min(b.min, x);
      b.max = std::max(b.max, x);
    }
  }
  return b;
}

void to_json(json& j, const Stat& s) {
  j = json{{"avg", s.avg}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

void from_json(const json& j, Stat& s) {
  s.avg = j.at("avg").get<double>();
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  s.count = j.at("count").get<std::size_t>();
}

void to_json(json& j, const BoxplotSummary& b) {
  j = json{{"min", b.min}, {"q1", b.q1}, {"median", b.median},
           {"q3", b.q3}, {"max", b.max}, {"outliers", b.outliers}};
}

void from_json(const json& j, BoxplotSummary& b) {
  b.min = j.at("min").get<double>();
  b.q1 = j.at("q1").get<double>();
  b.median = j.at("median").get<double>();
  b.q3 = j.at("q3").get<double>();
  b.max = j.at("max").get<double>();
  b.outliers = j.at("outliers").get<std::vector<double>>();
}

std::string format_table(const Aggregate& agg) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s %-4s", "metric", "stat");
  out += buf;
  for (const auto& [variant, _] : agg) {
    std::snprintf(buf, sizeof buf, " %12s", variant.c_str());
    out += buf;
  }
  out += '\n';
  for (const char* metric : {"distance", "compactness", "crossings"}) {
    for (const char* stat : {"avg", "min", "max"}) {
      std::snprintf(buf, sizeof buf, "%-12s %-4s", metric, stat);
      out += buf;
      for (const auto& [variant, metrics] : agg) {
        auto it = metrics.find(metric);
        if (it == metrics.end()) {
          std::snprintf(buf, sizeof buf, " %12s", "-");
        } else {
          const Stat& s = it->second;
          const double x = stat[1] == 'v' ? s.avg : stat[1] == 'i' ? s.min : s.max;
          std::snprintf(buf, sizeof buf, " %12.2f", x);
        }
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace qcvrp::harness

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

#include "qcvrp/harness/bench.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "qcvrp/common/error.hpp"
#include "qcvrp/env/serialize.hpp"
#include "qcvrp/harness/svg.hpp"

namespace qcvrp::harness {

using nlohmann::json;

RunConfig parse_run_config(const json& j, policy::Variant variant) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "env" && key != "train" && key != "policy") {
      throw ConfigError("unknown run config section '" + key + "'");
    }
  }
  RunConfig c;
  c.train = a2c::default_train_config(variant);
  if (j.contains("env")) env::from_json(j.at("env"), c.env);
  if (j.contains("train")) a2c::from_json(j.at("train"), c.train);
  c.policy.variant = variant;
  c.policy.n_clients = c.env.n_clients;
  c.policy.n_vehicles = c.env.n_vehicles;
  if (j.contains("policy")) {
    policy::from_json(j.at("policy"), c.policy);
    if (c.policy.variant != variant) {
      throw ConfigError("config is for variant " + policy::variant_name(c.policy.variant) +
                        " but " + policy::variant_name(variant) + " was requested");
    }
  }
  if (c.policy.n_clients != c.env.n_clients || c.policy.n_vehicles != c.env.n_vehicles) {
    throw ConfigError("policy size does not match the environment");
  }
  c.env.validate();
  c.train.validate();
  c.policy.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, policy::Variant variant) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_run_config(j, variant);
}

json run_config_json(const RunConfig& c) {
  return json{{"env", c.env}, {"train", c.train}, {"policy", c.policy}};
}

std::vector<policy::Variant> parse_variant_list(const std::string& csv) {
  std::vector<policy::Variant> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto v = policy::parse_variant(item);
    for (auto seen : out) {
      if (seen == v) throw ConfigError("variant " + item + " listed twice");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("no variants given");
  return out;
}

BenchReport summarize(std::vector<std::string> variants,
                      std::vector<std::uint64_t> seeds,
                      std::vector<MetricsRecord> records) {
  BenchReport r;
  r.variants = std::move(variants);
  r.seeds = std::move(seeds);
  r.records = std::move(records);
  r.aggregate = aggregate_runs(r.records);
  for (const auto& variant : r.variants) {
    std::vector<double> dist, comp, cross;
    for (const auto& rec : r.records) {
      if (rec.variant != variant) continue;
      dist.push_back(rec.distance);
      if (rec.compactness) comp.push_back(*rec.compactness);
      cross.push_back(static_cast<double>(rec.crossings));
    }
    if (!dist.empty()) r.boxplots["distance"][variant] = boxplot_summary(dist);
    if (!comp.empty()) r.boxplots["compactness"][variant] = boxplot_summary(comp);
    if (!cross.empty()) r.boxplots["crossings"][variant] = boxplot_summary(cross);
  }
  return r;
}

BenchReport run_bench(const BenchOptions& o) {
  if (o.variants.empty()) throw ConfigError("bench needs at least one variant");
  if (o.seeds.empty()) throw ConfigError("bench needs at least one seed");
  std::vector<RunConfig> configs;
  for (auto v : o.variants) configs.push_back(parse_run_config(o.config, v));

  struct Cell {
    std::size_t variant;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < o.variants.size(); ++i) {
    for (auto s : o.seeds) cells.push_back({i, s});
  }
  std::vector<MetricsRecord> records(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const auto& cell = cells[k];
      const auto& cfg = configs[cell.variant];
      const auto name = policy::variant_name(o.variants[cell.variant]);
      try {
        a2c::RunOptions ro;
        if (!o.out_dir.empty()) {
          ro.out_dir = o.out_dir / name / ("seed_" + std::to_string(cell.seed));
        }
        ro.write_svgs = o.write_svgs;
        auto result = a2c::train(cfg.env, cfg.policy, cfg.train, cell.seed, ro);
        if (result.aborted) throw NumericError(result.abort_reason);
        MetricsRecord rec = result.evals.back().result.metrics;
        rec.variant = name;
        rec.seed = cell.seed;
        records[k] = rec;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(o.threads, cells.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::string> names;
  for (auto v : o.variants) names.push_back(policy::variant_name(v));
  auto report = summarize(std::move(names), o.seeds, std::move(records));
  if (!o.out_dir.empty()) write_report(report, o.out_dir);
  return report;
}

json report_to_json(const BenchReport& r) {
  json agg = json::object();
  for (const auto& [variant, metrics] : r.aggregate) {
    for (const auto& [metric, stat] : metrics) agg[variant][metric] = stat;
  }
  json box = json::object();
  for (const auto& [metric, per] : r.boxplots) {
    for (const auto& [variant, b] : per) box[metric][variant] = b;
  }
  return json{{"variants", r.variants},
              {"seeds", r.seeds},
              {"metrics", agg},
              {"boxplots", box},
              {"records", r.records}};
}

BenchReport report_from_json(const json& j) {
  try {
    BenchReport r;
    r.variants = j.at("variants").get<std::vector<std::string>>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.records = j.at("records").get<std::vector<MetricsRecord>>();
    for (const auto& [variant, metrics] : j.at("metrics").items()) {
      for (const auto& [metric, stat] : metrics.items()) {
        r.aggregate[variant][metric] = stat.get<Stat>();
      }
    }
    for (const auto& [metric, per] : j.at("boxplots").items()) {
      for (const auto& [variant, b] : per.items()) {
        r.boxplots[metric][variant] = b.get<BoxplotSummary>();
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

void write_report(const BenchReport& r, const std::filesystem::path& dir) {
  write_text(dir / "report.json", report_to_json(r).dump(2) + "\n");
  write_text(dir / "report.txt", format_table(r.aggregate));
  for (const auto& [metric, per] : r.boxplots) {
    write_text(dir / ("boxplot_" + metric + ".svg"), boxplot_svg(per, metric));
  }
}

}  // namespace qcvrp::harness

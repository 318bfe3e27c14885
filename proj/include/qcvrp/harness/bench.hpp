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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcvrp/a2c/trainer.hpp"
#include "qcvrp/env/cvrp.hpp"
#include "qcvrp/harness/metrics.hpp"
#include "qcvrp/policy/policy.hpp"

namespace qcvrp::harness {

struct RunConfig {
  env::EnvConfig env;
  a2c::TrainConfig train;
  policy::PolicySpec policy;
};

// Top-level keys "env", "train", "policy", each optional and each holding the
// field names of the matching struct. Training defaults follow the variant.
// A "variant" inside "policy" must agree with `variant`; the policy's client
// and vehicle counts default to the environment's and must agree with it.
RunConfig parse_run_config(const nlohmann::json& j, policy::Variant variant);
RunConfig load_run_config(const std::filesystem::path& path, policy::Variant variant);
nlohmann::json run_config_json(const RunConfig& c);

struct BenchOptions {
  std::vector<policy::Variant> variants;
  std::vector<std::uint64_t> seeds;
  nlohmann::json config = nlohmann::json::object();  // RunConfig layout
  std::filesystem::path out_dir;                     // empty: nothing written
  unsigned threads = 1;
  bool write_svgs = true;
};

struct BenchReport {
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
  // Final greedy evaluation of every (variant, seed) cell, variant-major.
  std::vector<MetricsRecord> records;
  Aggregate aggregate;
  // metric -> variant -> summary
  std::map<std::string, std::map<std::string, BoxplotSummary>> boxplots;
};

// Trains every (variant, seed) cell, possibly on several threads, then
// aggregates. Each cell writes under out_dir/<variant>/seed_<n>/.
BenchReport run_bench(const BenchOptions& options);

// Aggregate and boxplots recomputed from records.
BenchReport summarize(std::vector<std::string> variants,
                      std::vector<std::uint64_t> seeds,
                      std::vector<MetricsRecord> records);

nlohmann::json report_to_json(const BenchReport& r);
BenchReport report_from_json(const nlohmann::json& j);

// report.json, report.txt and one boxplot SVG per metric.
void write_report(const BenchReport& r, const std::filesystem::path& dir);

std::vector<policy::Variant> parse_variant_list(const std::string& csv);

}  // namespace qcvrp::harness

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

// Command-line front end. Talks to the library through the C API only.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qcvrp/qcvrp.h"

namespace {

int report(qcvrp_status status, const char* what) {
  if (status == QCVRP_OK) return 0;
  std::fprintf(stderr, "qcvrp %s: %s: %s\n", what, qcvrp_status_name(status),
               qcvrp_last_error());
  return 10 + static_cast<int>(status);
}

void print_and_free(char* doc) {
  if (!doc) return;
  std::printf("%s\n", doc);
  qcvrp_string_free(doc);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accepts "--variants cpn hqp" as well as "--variants cpn,hqp".
std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qcvrp: multi-vehicle routing with classical and quantum policies"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(qcvrp_version()));

  std::string variant, config, out, checkpoint, instance;
  std::vector<std::string> variants{"cpn", "hqp", "fqp"};
  std::uint64_t seed = 0;
  std::size_t n_seeds = 10;
  unsigned threads = 1;

  auto* train = app.add_subcommand("train", "train one policy");
  train->add_option("--variant", variant, "cpn, hqp or fqp")
      ->required()
      ->check(CLI::IsMember({"cpn", "hqp", "fqp"}));
  train->add_option("--config", config, "run config JSON")->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "training seed")->required();
  train->add_option("--out", out, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "greedy rollout of a checkpoint on an instance");
  eval->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--instance", instance)->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "train every variant on every seed");
  bench->add_option("--variants", variants, "variants to run");
  bench->add_option("--seeds", n_seeds, "number of seeds")->check(CLI::PositiveNumber);
  bench->add_option("--config", config, "run config JSON")->check(CLI::ExistingFile);
  bench->add_option("--out", out, "output directory")->required();
  bench->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* inst = app.add_subcommand("instance", "write a problem instance");
  inst->add_option("--seed", seed)->required();
  inst->add_option("--out", out, "output file")->required();
  inst->add_option("--env", config, "environment config JSON")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  const char* cfg = config.empty() ? nullptr : config.c_str();
  char* doc = nullptr;
  if (*train) {
    int rc = report(qcvrp_train(variant.c_str(), cfg, seed, out.c_str(), &doc), "train");
    print_and_free(doc);
    return rc;
  }
  if (*eval) {
    int rc = report(qcvrp_eval(checkpoint.c_str(), instance.c_str(), out.c_str(), &doc),
                    "eval");
    print_and_free(doc);
    return rc;
  }
  if (*bench) {
    int rc = report(qcvrp_bench(join(variants).c_str(), n_seeds, cfg, out.c_str(), threads, &doc),
                    "bench");
    if (doc) {
      std::printf("report written to %s\n", out.c_str());
      qcvrp_string_free(doc);
    }
    return rc;
  }
  const std::string env_json = config.empty() ? std::string() : read_file(config);
  return report(qcvrp_instance_write(env_json.empty() ? nullptr : env_json.c_str(), seed,
                                     out.c_str()),
                "instance");
}

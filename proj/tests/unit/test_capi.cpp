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

// Exercises the shared library through its C header only.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qcvrp/qcvrp.h"

namespace {

const char* kSmallEnv = R"({"n_clients": 5, "n_vehicles": 2})";

std::string take(char* s) {
  std::string out = s ? s : "";
  qcvrp_string_free(s);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qcvrp_capi_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("status names and last error") {
  CHECK(std::string(qcvrp_status_name(QCVRP_OK)) == "ok");
  qcvrp_env* env = nullptr;
  CHECK(qcvrp_env_create(R"({"n_clients": 0})", 1, &env) == QCVRP_ERR_CONFIG);
  CHECK(env == nullptr);
  CHECK(std::string(qcvrp_last_error()).size() > 0);
  CHECK(qcvrp_env_create("{not json", 1, &env) == QCVRP_ERR_CONFIG);
  CHECK(qcvrp_env_create(nullptr, 1, nullptr) == QCVRP_ERR_INVALID_ARGUMENT);
  qcvrp_policy* p = nullptr;
  CHECK(qcvrp_policy_create("xyz", nullptr, 0, &p) == QCVRP_ERR_CONFIG);
  CHECK(qcvrp_policy_load("/nonexistent/ckpt.json", &p) == QCVRP_ERR_IO);
}

TEST_CASE("environment round trip through handles") {
  qcvrp_env* env = nullptr;
  REQUIRE(qcvrp_env_create(kSmallEnv, 7, &env) == QCVRP_OK);
  size_t nc = 0, nv = 0, obs = 0;
  REQUIRE(qcvrp_env_dims(env, &nc, &nv, &obs) == QCVRP_OK);
  CHECK(nc == 5);
  CHECK(nv == 2);
  CHECK(obs == 3 + 15 + 6);

  std::vector<double> o(obs);
  CHECK(qcvrp_env_observe(env, o.data(), o.size() - 1) == QCVRP_ERR_CONTRACT);
  REQUIRE(qcvrp_env_observe(env, o.data(), o.size()) == QCVRP_OK);
  std::vector<uint8_t> mask(nc + 1);
  REQUIRE(qcvrp_env_mask(env, 0, mask.data(), mask.size()) == QCVRP_OK);
  CHECK(mask[nc] == 0);  // depot only valid when nothing else is

  // Same seed through the instance document gives the same observation.
  char* doc = nullptr;
  REQUIRE(qcvrp_env_instance_json(env, &doc) == QCVRP_OK);
  std::string inst = take(doc);
  qcvrp_env* twin = nullptr;
  REQUIRE(qcvrp_env_from_instance(inst.c_str(), &twin) == QCVRP_OK);
  std::vector<double> o2(obs);
  REQUIRE(qcvrp_env_observe(twin, o2.data(), o2.size()) == QCVRP_OK);
  CHECK(o == o2);

  char* again = nullptr;
  REQUIRE(qcvrp_instance_json(kSmallEnv, 7, &again) == QCVRP_OK);
  qcvrp_env* third = nullptr;
  REQUIRE(qcvrp_env_from_instance(take(again).c_str(), &third) == QCVRP_OK);
  std::vector<double> o3(obs);
  REQUIRE(qcvrp_env_observe(third, o3.data(), o3.size()) == QCVRP_OK);
  CHECK(o == o3);
  qcvrp_env_destroy(third);

  // Greedy policy rollout to completion.
  qcvrp_policy* pol = nullptr;
  REQUIRE(qcvrp_policy_create("cpn", R"({"n_clients": 5, "n_vehicles": 2,
      "d_model": 8, "heads": 2, "classical_layers": 1, "hidden": 8})", 3, &pol) == QCVRP_OK);
  size_t pv = 0, ps = 0, np = 0;
  REQUIRE(qcvrp_policy_dims(pol, &pv, &ps, &np) == QCVRP_OK);
  CHECK(pv == 2);
  CHECK(ps == 6);
  CHECK(np > 0);
  std::vector<double> logits(pv * ps);
  double value = NAN;
  REQUIRE(qcvrp_policy_forward(pol, o.data(), o.size(), logits.data(), logits.size(),
                               &value) == QCVRP_OK);
  CHECK(std::isfinite(value));
  CHECK(qcvrp_policy_forward(pol, o.data(), o.size() - 3, logits.data(), logits.size(),
                             &value) != QCVRP_OK);

  int done = 0;
  size_t guard = 0;
  std::vector<size_t> actions(nv);
  std::vector<double> rewards(nv);
  while (!done && guard++ < 1000) {
    REQUIRE(qcvrp_policy_act(pol, twin, actions.data(), actions.size()) == QCVRP_OK);
    REQUIRE(qcvrp_env_step(twin, actions.data(), actions.size(), rewards.data(), &done) ==
            QCVRP_OK);
  }
  CHECK(done == 1);
  double dist = 0;
  REQUIRE(qcvrp_env_distance(twin, &dist) == QCVRP_OK);
  CHECK(dist > 0);
  char* routes = nullptr;
  REQUIRE(qcvrp_env_routes_json(twin, &routes) == QCVRP_OK);
  CHECK(take(routes).find('[') != std::string::npos);

  qcvrp_policy_destroy(pol);
  qcvrp_env_destroy(twin);
  qcvrp_env_destroy(env);
}

TEST_CASE("train, eval and bench write their artifacts") {
  auto dir = scratch("runs");
  std::filesystem::create_directories(dir);
  auto cfg = dir / "config.json";
  {
    std::ofstream out(cfg);
    out << R"({"env": {"n_clients": 4, "n_vehicles": 2},
              "policy": {"d_model": 8, "heads": 2, "classical_layers": 1, "hidden": 8},
              "train": {"episodes": 3, "eval_every": 2, "seeds": [5, 6]}})";
  }
  char* summary = nullptr;
  REQUIRE(qcvrp_train("cpn", cfg.c_str(), 5, (dir / "train").c_str(), &summary) == QCVRP_OK);
  std::string s = take(summary);
  CHECK(s.find("\"episodes\":3") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "train" / "run.jsonl"));

  std::filesystem::path ckpt;
  for (auto& e : std::filesystem::directory_iterator(dir / "train" / "checkpoints")) {
    if (ckpt.empty() || e.path() > ckpt) ckpt = e.path();
  }
  REQUIRE(!ckpt.empty());
  auto inst = dir / "inst.json";
  REQUIRE(qcvrp_instance_write(R"({"n_clients": 4, "n_vehicles": 2})", 11, inst.c_str()) ==
          QCVRP_OK);
  REQUIRE(qcvrp_eval(ckpt.c_str(), inst.c_str(), (dir / "eval").c_str(), &summary) == QCVRP_OK);
  CHECK(take(summary).find("\"metrics\"") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "eval" / "routes.svg"));
  CHECK(std::filesystem::exists(dir / "eval" / "eval.json"));

  // Size mismatch between instance and checkpoint.
  auto big = dir / "big.json";
  REQUIRE(qcvrp_instance_write(R"({"n_clients": 6, "n_vehicles": 2})", 11, big.c_str()) ==
          QCVRP_OK);
  CHECK(qcvrp_eval(ckpt.c_str(), big.c_str(), nullptr, nullptr) == QCVRP_ERR_CONFIG);

  char* report = nullptr;
  REQUIRE(qcvrp_bench("cpn", 3, cfg.c_str(), (dir / "bench").c_str(), 1, &report) ==
          QCVRP_OK);
  std::string r = take(report);
  CHECK(r.find("\"seeds\":[5,6,7]") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "bench" / "report.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("instance files are byte identical across calls") {
  auto dir = scratch("inst");
  auto a = dir / "a.json", b = dir / "b.json";
  REQUIRE(qcvrp_instance_write(nullptr, 99, a.c_str()) == QCVRP_OK);
  REQUIRE(qcvrp_instance_write(nullptr, 99, b.c_str()) == QCVRP_OK);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).size() > 100);
  std::filesystem::remove_all(dir);
}

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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "qcvrp/a2c/trainer.hpp"
#include "qcvrp/common/error.hpp"
#include "qcvrp/harness/svg.hpp"

using namespace qcvrp;
using namespace qcvrp::a2c;

namespace {

env::EnvConfig small_env(std::size_t clients = 4, std::size_t vehicles = 2) {
  env::EnvConfig c;
  c.n_clients = clients;
  c.n_vehicles = vehicles;
  return c;
}

policy::PolicySpec small_cpn(const env::EnvConfig& e) {
  policy::PolicySpec s;
  s.n_clients = e.n_clients;
  s.n_vehicles = e.n_vehicles;
  s.d_model = 8;
  s.heads = 2;
  s.classical_layers = 1;
  s.hidden = 16;
  return s;
}

// Hand-built single-step trajectory with the given log-prob, value and
// entropy as graph leaves.
struct Manual {
  ad::Graph g;
  Trajectory traj;
  void add(double logp, double value, double entropy, double ret) {
    StepRecord s;
    s.log_prob_sum = g.variable(ad::Tensor::scalar(logp));
    s.value_node = g.variable(ad::Tensor({1}, {value}));
    s.entropy_sum = g.variable(ad::Tensor::scalar(entropy));
    s.value = value;
    traj.steps.push_back(s);
    traj.returns.push_back(ret);
  }
};

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qcvrp_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("discounted returns") {
  auto g = discounted_returns({1, 0, 2}, 0.97);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(2.8818).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(1.94).epsilon(1e-12));
  CHECK(g[2] == 2.0);
  CHECK(discounted_returns({1.5, -2, 3}, 0.0) == std::vector<double>{1.5, -2, 3});
  CHECK(discounted_returns({0, 0, 0}, 0.9) == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(discounted_returns({}, 0.9), ContractError);
}

TEST_CASE("a2c loss") {
  SUBCASE("hand example") {
    Manual m;
    m.add(-1.0, 1.0, 0.7, 2.0);
    auto loss = a2c_loss(m.traj, 0.0, 0.5);
    CHECK(loss.report.total == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(loss.report.policy == doctest::Approx(1.0));
    CHECK(loss.report.value == doctest::Approx(1.0));
  }
  SUBCASE("perfect critic") {
    Manual m;
    m.add(-0.3, 2.5, 0.2, 2.5);
    m.add(-1.1, -1.0, 0.4, -1.0);
    auto loss = a2c_loss(m.traj, 0.1, 0.5);
    CHECK(loss.report.policy == 0.0);
    CHECK(loss.report.value == 0.0);
  }
  SUBCASE("zero entropy coefficient ignores entropies") {
    Manual a, b;
    a.add(-0.5, 0.2, 0.1, 1.0);
    b.add(-0.5, 0.2, 9.0, 1.0);
    CHECK(a2c_loss(a.traj, 0.0, 0.5).report.total ==
          a2c_loss(b.traj, 0.0, 0.5).report.total);
  }
  SUBCASE("decomposition is exact") {
    Manual m;
    m.add(-0.37, 0.81, 1.3, 1.7);
    m.add(-2.2, 0.4, 0.9, 0.95);
    const double ec = 0.037, vc = 0.5;
    auto r = a2c_loss(m.traj, ec, vc).report;
    CHECK(r.total == r.policy + vc * r.value - ec * r.entropy);
  }
  SUBCASE("advantage is a constant in the graph") {
    Manual m;
    m.add(-0.5, 0.3, 0.2, 1.0);
    auto loss = a2c_loss(m.traj, 0.0, 0.0);
    m.g.backward(loss.total);
    CHECK(m.g.grad(m.traj.steps[0].value_node)[0] == 0.0);
    CHECK(m.g.grad(m.traj.steps[0].log_prob_sum)[0] == doctest::Approx(-0.7));
  }
  SUBCASE("length mismatch") {
    Manual m;
    m.add(-0.5, 0.3, 0.2, 1.0);
    m.traj.returns.push_back(1.0);
    CHECK_THROWS_AS(a2c_loss(m.traj, 0.1, 0.5), ContractError);
  }
}

TEST_CASE("entropy schedule") {
  auto c = default_train_config(policy::Variant::kCpn);
  CHECK(entropy_coef_schedule(0, c) == 0.1);
  CHECK(entropy_coef_schedule(c.episodes - 1, c) == doctest::Approx(0.01).epsilon(1e-15));
  c.episodes = 3;
  CHECK(entropy_coef_schedule(1, c) == doctest::Approx(0.055).epsilon(1e-15));
  auto q = default_train_config(policy::Variant::kHqp);
  CHECK(q.episodes == 500);
  CHECK(q.lr == 1e-6);
  CHECK(entropy_coef_schedule(0, q) == 0.5);
  CHECK(entropy_coef_schedule(499, q) == doctest::Approx(0.03));
}

TEST_CASE("train config json") {
  auto c = default_train_config(policy::Variant::kFqp);
  c.eval_seed = 77;
  nlohmann::json j = c;
  TrainConfig back;
  from_json(j, back);
  CHECK(nlohmann::json(back) == j);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"episode", 3}}, back), ConfigError);
  TrainConfig bad;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.entropy_end = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("episode collection") {
  auto e = small_env(5, 2);
  policy::Policy p(small_cpn(e), 3);
  SUBCASE("greedy is repeatable") {
    auto s1 = env::reset(e, 4);
    auto s2 = env::reset(e, 4);
    Rng r1(1), r2(99);
    auto a = collect_episode(s1, p, nullptr, r1, policy::SampleMode::kGreedy);
    auto b = collect_episode(s2, p, nullptr, r2, policy::SampleMode::kGreedy);
    REQUIRE(a.length() == b.length());
    for (std::size_t t = 0; t < a.length(); ++t) {
      CHECK(a.steps[t].actions == b.steps[t].actions);
      CHECK(a.steps[t].reward == b.steps[t].reward);
      CHECK(a.steps[t].observation == b.steps[t].observation);
    }
  }
  SUBCASE("replay audit") {
    for (std::uint64_t ep = 0; ep < 100; ++ep) {
      auto s = env::reset(e, ep);
      Rng rng(ep);
      auto traj = collect_episode(s, p, nullptr, rng, policy::SampleMode::kStochastic);
      CHECK(traj.length() <= e.horizon());
      CHECK(env::is_terminal(s));
      const std::size_t S = e.n_clients + 1;
      for (const auto& step : traj.steps) {
        for (std::size_t v = 0; v < e.n_vehicles; ++v) {
          bool any = false;
          for (std::size_t k = 0; k < S; ++k) any = any || step.masks[v * S + k];
          if (any) CHECK(step.masks[v * S + step.actions[v]] == 1);
        }
      }
    }
  }
  SUBCASE("graph values match the detached pass") {
    auto s1 = env::reset(e, 8);
    auto s2 = env::reset(e, 8);
    ad::Graph g;
    ad::Binder bind(g, p.params());
    Rng r1(5), r2(5);
    auto a = collect_episode(s1, p, &bind, r1, policy::SampleMode::kStochastic);
    auto b = collect_episode(s2, p, nullptr, r2, policy::SampleMode::kStochastic);
    REQUIRE(a.length() == b.length());
    for (std::size_t t = 0; t < a.length(); ++t) {
      double lp = 0.0, h = 0.0;
      for (double x : b.steps[t].log_probs) lp += x;
      for (double x : b.steps[t].entropies) h += x;
      CHECK(a.steps[t].log_prob_sum.item() == doctest::Approx(lp).epsilon(1e-12));
      CHECK(a.steps[t].entropy_sum.item() == doctest::Approx(h).epsilon(1e-12));
      CHECK(a.steps[t].value == b.steps[t].value);
    }
  }
}

TEST_CASE("policy loss leaves the critic alone") {
  auto e = small_env(4, 2);
  policy::Policy p(small_cpn(e), 6);
  auto s = env::reset(e, 2);
  ad::Graph g;
  ad::Binder bind(g, p.params());
  Rng rng(3);
  auto traj = collect_episode(s, p, &bind, rng, policy::SampleMode::kStochastic);
  traj.returns = discounted_returns(traj.rewards(), 0.97);
  auto loss = a2c_loss(traj, 0.0, 0.0);
  g.backward(loss.total);
  auto grads = bind.gradients();
  for (const char* k : {"head.critic.weight", "head.critic.bias"}) {
    for (double x : grads.at(k)) CHECK(x == 0.0);
  }
  double actor = 0.0;
  for (double x : grads.at("head.pointer.weight")) actor += x * x;
  CHECK(actor > 0.0);
}

TEST_CASE("deterministic evaluation") {
  auto e = small_env(6, 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    policy::Policy p(small_cpn(e), seed);
    auto a = evaluate_deterministic(e, p, 1000 + seed);
    auto b = evaluate_deterministic(e, p, 1000 + seed);
    CHECK(nlohmann::json(a.metrics) == nlohmann::json(b.metrics));
    CHECK(a.metrics.served <= e.n_clients);
    CHECK(a.metrics.served >= 1);
    CHECK(a.steps <= e.horizon());
  }
}

TEST_CASE("training run schedule, artifacts and resume") {
  auto e = small_env(4, 2);
  auto spec = small_cpn(e);
  auto cfg = default_train_config(policy::Variant::kCpn);
  cfg.episodes = 7;
  cfg.eval_every = 3;
  cfg.lr = 1e-3;
  auto dir = scratch_dir("train_a");
  auto full = train(e, spec, cfg, 12, RunOptions{dir});
  CHECK_FALSE(full.aborted);

  std::size_t evals = 0, episodes = 0;
  for (const auto& r : full.log) {
    if (r.at("type") == "eval") ++evals;
    if (r.at("type") == "episode") {
      ++episodes;
      CHECK(r.at("grad_norm").get<double>() >= 0.0);
    }
  }
  CHECK(episodes == 7);
  CHECK(evals == 4);  // 0, 3, 6, 7
  CHECK(std::filesystem::exists(dir / "run.jsonl"));
  CHECK(std::filesystem::exists(dir / "routes" / "episode_000003.svg"));
  CHECK(std::filesystem::exists(dir / "checkpoints" / "episode_000007.json"));

  SUBCASE("second run is byte-identical") {
    auto dir_b = scratch_dir("train_b");
    train(e, spec, cfg, 12, RunOptions{dir_b});
    CHECK(harness::read_text(dir / "run.jsonl") == harness::read_text(dir_b / "run.jsonl"));
    CHECK(harness::read_text(dir / "routes" / "episode_000006.svg") ==
          harness::read_text(dir_b / "routes" / "episode_000006.svg"));
  }
  SUBCASE("resume reproduces the tail") {
    auto ckpt = nlohmann::json::parse(
        harness::read_text(dir / "checkpoints" / "episode_000003.json"));
    auto dir_c = scratch_dir("train_c");
    auto rest = resume(ckpt, RunOptions{dir_c});
    std::vector<nlohmann::json> tail;
    bool after = false;
    for (const auto& r : full.log) {
      if (after) tail.push_back(r);
      if (r.at("type") == "eval" && r.at("episode") == 3) after = true;
    }
    REQUIRE(rest.log.size() == tail.size());
    for (std::size_t i = 0; i < tail.size(); ++i) CHECK(rest.log[i].dump() == tail[i].dump());
  }
}

TEST_CASE("non-finite loss aborts the run") {
  auto e = small_env(4, 2);
  policy::Policy p(small_cpn(e), 1);
  p.params().get_mut("head.critic.bias").values[0] = std::nan("");
  auto cfg = default_train_config(policy::Variant::kCpn);
  cfg.episodes = 3;
  auto r = train_policy(e, p, cfg, 0);
  CHECK(r.aborted);
  CHECK(r.episodes_completed == 0);
  CHECK(r.log.back().at("type") == "abort");
  CHECK(r.log.back().at("reason") == "non-finite loss");
}

TEST_CASE("checkpoint keeps optimizer state") {
  auto e = small_env(3, 2);
  auto cfg = default_train_config(policy::Variant::kHqp);
  cfg.episodes = 2;
  cfg.eval_every = 2;
  policy::PolicySpec spec;
  spec.variant = policy::Variant::kHqp;
  spec.n_clients = 3;
  spec.n_vehicles = 2;
  spec.hidden = 8;
  auto r = train(e, spec, cfg, 4);
  auto j = checkpoint_json(e, cfg, *r.policy, 4, 2);
  auto back = restore_policy(nlohmann::json::parse(j.dump()));
  CHECK(back.params().step() == 2);
  for (const auto& [name, t] : r.policy->params().second_moments())
    CHECK(back.params().second_moments().at(name).values == t.values);
  CHECK(j.at("quantum_angles").contains("hqp.encoder.0.angles"));
}

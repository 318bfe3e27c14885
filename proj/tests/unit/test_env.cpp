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

#include "doctest.h"
#include "qcvrp/common/error.hpp"
#include "qcvrp/common/rng.hpp"
#include "qcvrp/env/cvrp.hpp"
#include "qcvrp/env/serialize.hpp"

using namespace qcvrp;
using namespace qcvrp::env;

namespace {

EnvConfig small_config(std::size_t clients, std::size_t vehicles) {
  EnvConfig c;
  c.n_clients = clients;
  c.n_vehicles = vehicles;
  return c;
}

EnvState custom_state(EnvConfig cfg, std::vector<Point> positions,
                      std::vector<int> demands) {
  cfg.n_clients = positions.size();
  Instance inst;
  inst.positions = std::move(positions);
  inst.demands = std::move(demands);
  inst.vehicle_capacity = cfg.vehicle_capacity;
  inst.depot_capacity = 100.0;
  return make_state(cfg, inst);
}

std::size_t random_valid(const std::vector<std::uint8_t>& mask, Rng& rng) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) valid.push_back(i);
  return valid[rng.uniform_int(0, valid.size() - 1)];
}

}  // namespace

TEST_CASE("reset") {
  EnvConfig cfg;
  SUBCASE("deterministic per seed") {
    auto a = reset(cfg, 42);
    auto b = reset(cfg, 42);
    CHECK(observe(a) == observe(b));
    CHECK(observe(a) != observe(reset(cfg, 43)));
  }
  SUBCASE("observation length for the default fleet") {
    CHECK(observe(reset(cfg, 1)).size() == 75);
  }
  SUBCASE("demands in range") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      auto inst = generate_instance(cfg, seed);
      for (int d : inst.demands) CHECK((d >= 1 && d <= 9));
      for (const auto& p : inst.positions) {
        CHECK((p.x >= 0.0 && p.x < 1.0 && p.y >= 0.0 && p.y < 1.0));
      }
    }
  }
  SUBCASE("depot stock defaults to twice the demand") {
    auto s = reset(cfg, 3);
    CHECK(s.depot_capacity == 2.0 * s.total_initial_demand);
    CHECK(s.depot == Point{0.5, 0.5});
    for (const auto& v : s.vehicles) {
      CHECK(v.position == s.depot);
      CHECK(v.capacity == cfg.vehicle_capacity);
    }
  }
  SUBCASE("invalid configuration") {
    EnvConfig bad = cfg;
    bad.n_vehicles = 0;
    CHECK_THROWS_AS(reset(bad, 1), ConfigError);
    bad = cfg;
    bad.alpha = -1;
    CHECK_THROWS_AS(reset(bad, 1), ConfigError);
  }
}

TEST_CASE("observe") {
  auto s = reset(small_config(5, 3), 7);
  auto obs = observe(s);
  CHECK(obs.size() == 3 + 15 + 9);
  for (double v : obs) CHECK((v >= 0.0 && v <= 1.0));
  for (std::size_t v = 0; v < 3; ++v) CHECK(obs[3 + 15 + 3 * v + 2] == 1.0);
  CHECK(obs[2] == 1.0);
  const std::size_t client = 0;
  step_vehicle(s, 0, client);
  obs = observe(s);
  CHECK(obs[3 + 3 * client + 2] == 0.0);
}

TEST_CASE("valid_action_mask") {
  SUBCASE("fresh episode") {
    auto s = reset(EnvConfig{}, 1);
    auto m = valid_action_mask(s, 0);
    for (std::size_t c = 0; c < 20; ++c) CHECK(m[c] == 1);
    CHECK(m[20] == 0);
  }
  SUBCASE("empty vehicle only sees the depot") {
    auto s = reset(EnvConfig{}, 1);
    s.vehicles[1].capacity = 0.0;
    auto m = valid_action_mask(s, 1);
    for (std::size_t c = 0; c < 20; ++c) CHECK(m[c] == 0);
    CHECK(m[20] == 1);
  }
  SUBCASE("demand above remaining capacity") {
    auto s = custom_state(small_config(2, 1), {{0.1, 0.1}, {0.2, 0.2}}, {7, 3});
    s.vehicles[0].capacity = 5.0;
    auto m = valid_action_mask(s, 0);
    CHECK(m[0] == 0);
    CHECK(m[1] == 1);
    CHECK(m[2] == 0);
  }
  SUBCASE("out of range vehicle") {
    auto s = reset(small_config(3, 2), 1);
    CHECK_THROWS_AS(valid_action_mask(s, 2), ContractError);
  }
}

TEST_CASE("anchor") {
  auto s = reset(small_config(3, 1), 1);
  s.vehicles[0].position = {0.2, 0.7};
  CHECK(anchor(s, 0) == Point{0.2, 0.7});
  s.vehicles[0].served = {{0, 0}, {1, 1}};
  CHECK(anchor(s, 0) == Point{0.5, 0.5});
  s.vehicles[0].served = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  CHECK(anchor(s, 0) == Point{0.5, 0.5});
}

TEST_CASE("zone_cost") {
  EnvConfig cfg = small_config(1, 2);
  cfg.epsilon_zone = 0.0;
  auto s = custom_state(cfg, {{0.0, 0.0}}, {1});
  s.vehicles[0].position = {0.25, 0.0};
  s.vehicles[1].position = {0.5, 0.0};
  CHECK(zone_cost(s, 0, 0) == 0.0);
  CHECK(std::abs(zone_cost(s, 1, 0) - (1.0 - std::exp(-1.0))) < 1e-12);
  CHECK(zone_cost(s, 1, 0) == doctest::Approx(0.632121).epsilon(1e-6));

  auto single = custom_state(small_config(3, 1), {{0.1, 0.2}, {0.9, 0.9}, {0.3, 0.6}}, {1, 2, 3});
  for (std::size_t c = 0; c < 3; ++c) CHECK(zone_cost(single, 0, c) == 0.0);

  // Client almost on one anchor, far from the other: still below 1.
  s.vehicles[0].position = {1e-9, 0.0};
  s.vehicles[1].position = {1.0, 1.0};
  CHECK(zone_cost(s, 1, 0) < 1.0);
  CHECK(zone_cost(s, 1, 0) > 0.999);

  s.clients[0].demand = 0.0;
  CHECK_THROWS_AS(zone_cost(s, 0, 0), ContractError);
}

TEST_CASE("segments_properly_intersect") {
  CHECK(segments_properly_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0}));
  CHECK_FALSE(segments_properly_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
  CHECK_FALSE(segments_properly_intersect({0, 0}, {1, 0}, {1, 0}, {1, 1}));
  // T-junction: an endpoint lying on the other segment is not proper.
  CHECK_FALSE(segments_properly_intersect({0, 0}, {1, 0}, {0.5, 0}, {0.5, 1}));
  // Collinear overlap.
  CHECK_FALSE(segments_properly_intersect({0, 0}, {1, 0}, {0.5, 0}, {2, 0}));
  // Shared depot endpoint.
  CHECK_FALSE(segments_properly_intersect({0.5, 0.5}, {0, 1}, {0.5, 0.5}, {1, 1}));
}

TEST_CASE("crossing_penalty") {
  auto s = reset(small_config(2, 3), 5);
  SUBCASE("nothing to cross") {
    CHECK(crossing_penalty(s, 0, {0, 0}, {1, 1}) == 0.0);
  }
  SUBCASE("full-diagonal crossing costs lambda") {
    s.vehicles[1].segments.push_back({{0, 1}, {1, 0}});
    CHECK(crossing_penalty(s, 0, {0, 0}, {1, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  }
  SUBCASE("crossing two routes costs the same as one") {
    s.vehicles[1].segments.push_back({{0, 0.9}, {0.9, 0}});
    const double one = crossing_penalty(s, 0, {0.1, 0.1}, {0.8, 0.8});
    s.vehicles[2].segments.push_back({{0.2, 0.9}, {0.9, 0.2}});
    const double two = crossing_penalty(s, 0, {0.1, 0.1}, {0.8, 0.8});
    CHECK(one < 0.0);
    CHECK(one == two);
  }
  SUBCASE("own contiguous segment is excluded, older ones are not") {
    s.vehicles[0].segments.push_back({{0, 1}, {1, 0}});
    CHECK(crossing_penalty(s, 0, {0, 0}, {1, 1}) == 0.0);
    s.vehicles[0].segments.push_back({{1, 0}, {0.5, 0.2}});
    CHECK(crossing_penalty(s, 0, {0, 0}, {1, 1}) < 0.0);
  }
}

TEST_CASE("overlap_exponential") {
  EnvConfig cfg = small_config(1, 2);
  auto s = reset(cfg, 1);
  CHECK(overlap_exponential(s, 0) == 1.0);
  s.vehicles[1].position = {1e6, 1e6};
  CHECK(overlap_exponential(s, 0) < 1e-300);

  auto three = reset(small_config(1, 3), 1);
  const double gap = three.config.gamma_overlap * kMaxDistance;
  three.vehicles[0].position = {0.1, 0.1};
  three.vehicles[1].position = {0.1, 0.1};
  three.vehicles[2].position = {0.1 + gap, 0.1};
  CHECK(overlap_exponential(three, 0) == doctest::Approx((1.0 + std::exp(-1.0)) / 2.0).epsilon(1e-12));
  CHECK(overlap_exponential(three, 0) == doctest::Approx(0.683940).epsilon(1e-6));

  CHECK_THROWS_AS(overlap_exponential(reset(small_config(1, 1), 1), 0), ContractError);
}

TEST_CASE("step") {
  SUBCASE("serving a client at the vehicle position") {
    auto s = custom_state(small_config(2, 1), {{0.5, 0.5}, {0.9, 0.9}}, {3, 4});
    auto out = step(s, {0});
    const auto& r = out.rewards[0];
    CHECK(r.total == 6.0);
    CHECK(r.service == 1.0);
    CHECK(r.nearby_bonus == 5.0);
    CHECK(r.distance == 0.0);
    CHECK(r.zone == 0.0);
    CHECK(r.crossing == 0.0);
    CHECK(s.vehicles[0].capacity == 27.0);
    CHECK(s.clients[0].demand == 0.0);
    CHECK_FALSE(out.done);
  }
  SUBCASE("masked action is a penalized no-op") {
    auto s = custom_state(small_config(2, 2), {{0.1, 0.5}, {0.9, 0.9}}, {3, 4});
    step_vehicle(s, 0, 0);
    const auto before = s.vehicles[1];
    const auto obs_before = observe(s);
    auto r = step_vehicle(s, 1, 0);
    CHECK(r.total == -1.0);
    CHECK(r.invalid == -1.0);
    CHECK(observe(s) == obs_before);
    CHECK(s.vehicles[1].position == before.position);
  }
  SUBCASE("episode ends when all clients are served") {
    auto s = custom_state(small_config(2, 2), {{0.1, 0.5}, {0.9, 0.9}}, {3, 4});
    auto out = step(s, {0, 1});
    CHECK(out.done);
    CHECK(is_terminal(s));
    CHECK(out.info.served == 2);
  }
  SUBCASE("depot return reloads from the shared stock") {
    auto s = custom_state(small_config(2, 1), {{0.1, 0.5}, {0.9, 0.9}}, {3, 4});
    step_vehicle(s, 0, 0);
    s.vehicles[0].capacity = 0.0;  // force a reload
    s.depot_remaining = 10.0;
    auto r = step_vehicle(s, 0, 2);
    CHECK(r.distance == doctest::Approx(-0.4 / kMaxDistance).epsilon(1e-12));
    CHECK(s.vehicles[0].capacity == 10.0);
    CHECK(s.depot_remaining == 0.0);
  }
  SUBCASE("malformed action index is rejected before any change") {
    auto s = reset(small_config(3, 2), 1);
    CHECK_THROWS_AS(step(s, {0, 4}), ContractError);
    CHECK_THROWS_AS(step(s, {0}), ContractError);
    CHECK(s.agent_step == 0);
    CHECK(s.vehicles[0].position == s.depot);
  }
  SUBCASE("truncation penalty is split across vehicles") {
    EnvConfig cfg = small_config(3, 2);
    cfg.max_agent_steps = 1;
    auto s = custom_state(cfg, {{0.1, 0.5}, {0.9, 0.9}, {0.4, 0.4}}, {3, 4, 5});
    auto out = step(s, {0, 1});
    CHECK(out.done);
    CHECK(out.info.truncated);
    for (const auto& r : out.rewards) {
      CHECK(r.truncation == -0.5);
      CHECK(r.total == r.component_sum());
    }
  }
  SUBCASE("vehicles after the final service stay put") {
    auto s = custom_state(small_config(1, 2), {{0.1, 0.5}}, {3});
    auto out = step(s, {0, 0});
    CHECK(out.done);
    CHECK(out.rewards[1].total == 0.0);
    CHECK(s.vehicles[1].position == s.depot);
  }
}

TEST_CASE("is_terminal") {
  auto s = reset(small_config(3, 1), 2);
  CHECK_FALSE(is_terminal(s));
  for (auto& c : s.clients) c.demand = 0.0;
  CHECK(is_terminal(s));
  auto t = reset(small_config(3, 1), 2);
  t.agent_step = t.config.horizon();
  CHECK(is_terminal(t));
}

TEST_CASE("random-policy invariants") {
  EnvConfig cfg;
  Rng rng(99);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto s = reset(cfg, seed);
    while (!is_terminal(s)) {
      for (std::size_t v = 0; v < cfg.n_vehicles && !all_served(s); ++v) {
        const auto mask = valid_action_mask(s, v);
        auto r = step_vehicle(s, v, random_valid(mask, rng));
        CHECK(r.invalid == 0.0);
        CHECK(r.total == r.component_sum());
        double remaining = 0;
        for (const auto& c : s.clients) remaining += c.demand;
        CHECK(s.served_demand + remaining == s.total_initial_demand);
        for (const auto& veh : s.vehicles) CHECK(veh.capacity >= 0.0);
        CHECK(s.reload_total <= s.depot_capacity);
      }
      ++s.agent_step;
    }
  }
}

TEST_CASE("instance json") {
  EnvConfig cfg = small_config(6, 2);
  auto inst = generate_instance(cfg, 17);
  auto j = instance_to_json(cfg, inst);
  CHECK(j.at("n_clients") == 6);
  CHECK(j.at("positions").size() == 6);
  auto [cfg2, inst2] = instance_from_json(nlohmann::json::parse(j.dump()));
  CHECK(cfg2.n_vehicles == 2);
  CHECK(inst2.demands == inst.demands);
  CHECK(inst2.positions == inst.positions);
  CHECK(observe(make_state(cfg2, inst2)) == observe(make_state(cfg, inst)));
  CHECK(j.dump() == instance_to_json(cfg, generate_instance(cfg, 17)).dump());

  nlohmann::json bad = {{"n_clients", 3}, {"bogus", 1}};
  CHECK_THROWS_AS(bad.get<EnvConfig>(), ConfigError);
}

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

#include "qcvrp/env/serialize.hpp"

#include <set>
#include <string>

#include "qcvrp/common/error.hpp"

namespace qcvrp::env {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
  }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end()) {
    if (it->is_null()) {
      out.reset();
    } else {
      T v{};
      read(j, key, v);
      out = v;
    }
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError(std::string("unknown ") + what + " field '" + key + "'");
    }
  }
}

json point(const Point& p) { return json::array({p.x, p.y}); }

Point point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("point must be [x, y]");
  return Point{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void to_json(json& j, const EnvConfig& c) {
  j = json{{"n_clients", c.n_clients},
           {"n_vehicles", c.n_vehicles},
           {"vehicle_capacity", c.vehicle_capacity},
           {"demand_max", c.demand_max},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"lambda_overlap", c.lambda_overlap},
           {"lambda_zone", c.lambda_zone},
           {"gamma_overlap", c.gamma_overlap},
           {"epsilon_zone", c.epsilon_zone},
           {"neighbor_threshold", c.neighbor_threshold},
           {"nearby_client_bonus", c.nearby_client_bonus},
           {"invalid_action_penalty", c.invalid_action_penalty},
           {"unserved_client_penalty", c.unserved_client_penalty},
           {"exponential_overlap", c.exponential_overlap}};
  j["depot_capacity"] = c.depot_capacity ? json(*c.depot_capacity) : json(nullptr);
  j["max_agent_steps"] = c.max_agent_steps ? json(*c.max_agent_steps) : json(nullptr);
}

void from_json(const json& j, EnvConfig& c) {
  reject_unknown(j,
                 {"n_clients", "n_vehicles", "vehicle_capacity", "demand_max",
                  "depot_capacity", "alpha", "beta", "lambda_overlap",
                  "lambda_zone", "gamma_overlap", "epsilon_zone",
                  "neighbor_threshold", "nearby_client_bonus",
                  "invalid_action_penalty", "unserved_client_penalty",
                  "max_agent_steps", "exponential_overlap"},
                 "env");
  read(j, "n_clients", c.n_clients);
  read(j, "n_vehicles", c.n_vehicles);
  read(j, "vehicle_capacity", c.vehicle_capacity);
  read(j, "demand_max", c.demand_max);
  read_optional(j, "depot_capacity", c.depot_capacity);
  read(j, "alpha", c.alpha);
  read(j, "beta", c.beta);
  read(j, "lambda_overlap", c.lambda_overlap);
  read(j, "lambda_zone", c.lambda_zone);
  read(j, "gamma_overlap", c.gamma_overlap);
  read(j, "epsilon_zone", c.epsilon_zone);
  read(j, "neighbor_threshold", c.neighbor_threshold);
  read(j, "nearby_client_bonus", c.nearby_client_bonus);
  read(j, "invalid_action_penalty", c.invalid_action_penalty);
  read(j, "unserved_client_penalty", c.unserved_client_penalty);
  read_optional(j, "max_agent_steps", c.max_agent_steps);
  read(j, "exponential_overlap", c.exponential_overlap);
  c.validate();
}

json instance_to_json(const EnvConfig& config, const Instance& inst) {
  json positions = json::array();
  for (const auto& p : inst.positions) positions.push_back(point(p));
  return json{{"seed", inst.seed},
              {"n_clients", inst.n_clients()},
              {"n_vehicles", config.n_vehicles},
              {"positions", positions},
              {"demands", inst.demands},
              {"depot", point(inst.depot)},
              {"Q", inst.vehicle_capacity},
              {"depot_capacity", inst.depot_capacity},
              {"config", config}};
}

std::pair<EnvConfig, Instance> instance_from_json(const json& j) {
  try {
    EnvConfig config;
    if (j.contains("config")) config = j.at("config").get<EnvConfig>();
    Instance inst;
    inst.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("positions")) inst.positions.push_back(point_from(p));
    inst.demands = j.at("demands").get<std::vector<int>>();
    inst.depot = j.contains("depot") ? point_from(j.at("depot")) : kDepotPosition;
    inst.vehicle_capacity = j.at("Q").get<double>();
    inst.depot_capacity = j.at("depot_capacity").get<double>();
    config.n_clients = j.at("n_clients").get<std::size_t>();
    config.n_vehicles = j.at("n_vehicles").get<std::size_t>();
    config.vehicle_capacity = inst.vehicle_capacity;
    config.depot_capacity = inst.depot_capacity;
    if (inst.positions.size() != config.n_clients ||
        inst.demands.size() != config.n_clients) {
      throw ConfigError("instance client count does not match its arrays");
    }
    config.validate();
    return {config, inst};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed instance: ") + e.what());
  }
}

json route_log_to_json(const RouteLog& log) {
  json vehicles = json::array();
  for (std::size_t v = 0; v < log.n_vehicles(); ++v) {
    json positions = json::array();
    for (const auto& p : log.positions[v]) positions.push_back(point(p));
    json stops = json::array();
    for (const auto& s : log.stops[v]) {
      stops.push_back(json{{"client", s.client}, {"demand", s.demand_served}});
    }
    vehicles.push_back(json{{"positions", positions}, {"stops", stops}});
  }
  return json{{"depot", point(log.depot)}, {"vehicles", vehicles}};
}

}  // namespace qcvrp::env

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

#include "qcvrp/env/cvrp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qcvrp/common/error.hpp"
#include "qcvrp/common/rng.hpp"

namespace qcvrp::env {
namespace {

void check_vehicle(const EnvState& s, std::size_t v) {
  if (v >= s.vehicles.size()) {
    throw ContractError("vehicle index " + std::to_string(v) +
                        " out of range " + std::to_string(s.vehicles.size()));
  }
}

void record_stop(EnvState& s, std::size_t v, int client, const Point& to,
                 double demand) {
  s.routes.positions[v].push_back(to);
  s.routes.stops[v].push_back(RouteStop{client, to, demand});
}

// Moves the vehicle and appends the segment when it actually travelled.
double travel(EnvState& s, std::size_t v, const Point& to) {
  auto& veh = s.vehicles[v];
  const double len = distance(veh.position, to);
  if (len > 0.0) veh.segments.push_back(Segment{veh.position, to});
  veh.position = to;
  s.distance_travelled += len;
  return len;
}

}  // namespace

void EnvConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (n_clients < 1) fail("n_clients must be at least 1");
  if (n_vehicles < 1) fail("n_vehicles must be at least 1");
  if (!(vehicle_capacity > 0.0)) fail("vehicle_capacity must be positive");
  if (demand_max < 1) fail("demand_max must be at least 1");
  if (depot_capacity && !(*depot_capacity > 0.0)) fail("depot_capacity must be positive");
  if (alpha < 0 || beta < 0 || lambda_overlap < 0 || lambda_zone < 0) {
    fail("alpha, beta, lambda_overlap and lambda_zone must be non-negative");
  }
  if (!(gamma_overlap > 0.0)) fail("gamma_overlap must be positive");
  if (epsilon_zone < 0.0) fail("epsilon_zone must be non-negative");
  if (neighbor_threshold < 0.0) fail("neighbor_threshold must be non-negative");
  if (max_agent_steps && *max_agent_steps < 1) fail("max_agent_steps must be at least 1");
}

void RewardBreakdown::finalize() { total = component_sum(); }

double RewardBreakdown::component_sum() const {
  return service + distance + zone + crossing + overlap + nearby_bonus +
         invalid + truncation;
}

Instance generate_instance(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Instance inst;
  inst.seed = seed;
  inst.vehicle_capacity = config.vehicle_capacity;
  inst.positions.resize(config.n_clients);
  for (auto& p : inst.positions) {
    p.x = rng.uniform();
    p.y = rng.uniform();
  }
  inst.demands.resize(config.n_clients);
  double total = 0.0;
  for (auto& d : inst.demands) {
    d = static_cast<int>(rng.uniform_int(1, config.demand_max));
    total += d;
  }
  inst.depot_capacity = config.depot_capacity.value_or(2.0 * total);
  return inst;
}

EnvState make_state(const EnvConfig& config, const Instance& inst) {
  config.validate();
  if (inst.positions.size() != config.n_clients ||
      inst.demands.size() != config.n_clients) {
    throw ConfigError("instance has " + std::to_string(inst.positions.size()) +
                      " clients, configuration expects " +
                      std::to_string(config.n_clients));
  }
  EnvState s;
  s.config = config;
  s.config.vehicle_capacity = inst.vehicle_capacity;
  s.config.depot_capacity = inst.depot_capacity;
  s.seed = inst.seed;
  s.depot = inst.depot;
  s.depot_capacity = inst.depot_capacity;
  s.depot_remaining = inst.depot_capacity;
  s.clients.resize(config.n_clients);
  for (std::size_t c = 0; c < config.n_clients; ++c) {
    if (inst.demands[c] < 0) throw ConfigError("negative client demand");
    s.clients[c].position = inst.positions[c];
    s.clients[c].demand = inst.demands[c];
    s.clients[c].initial_demand = inst.demands[c];
    s.total_initial_demand += inst.demands[c];
  }
  s.vehicles.resize(config.n_vehicles);
  for (auto& v : s.vehicles) {
    v.position = inst.depot;
    v.capacity = inst.vehicle_capacity;
  }
  s.routes.depot = inst.depot;
  s.routes.positions.assign(config.n_vehicles, std::vector<Point>{inst.depot});
  s.routes.stops.assign(config.n_vehicles, {});
  return s;
}

EnvState reset(const EnvConfig& config, std::uint64_t seed) {
  return make_state(config, generate_instance(config, seed));
}

Instance instance_of(const EnvState& s) {
  Instance inst;
  inst.seed = s.seed;
  inst.depot = s.depot;
  inst.vehicle_capacity = s.config.vehicle_capacity;
  inst.depot_capacity = s.depot_capacity;
  for (const auto& c : s.clients) {
    inst.positions.push_back(c.position);
    inst.demands.push_back(static_cast<int>(c.initial_demand));
  }
  return inst;
}

std::vector<double> observe(const EnvState& s) {
  std::vector<double> obs;
  obs.reserve(s.config.observation_size());
  obs.push_back(s.depot.x);
  obs.push_back(s.depot.y);
  obs.push_back(s.depot_remaining / s.depot_capacity);
  const double dmax = s.config.demand_max;
  for (const auto& c : s.clients) {
    obs.push_back(c.position.x);
    obs.push_back(c.position.y);
    obs.push_back(c.demand / dmax);
  }
  const double q = s.config.vehicle_capacity;
  for (const auto& v : s.vehicles) {
    obs.push_back(v.position.x);
    obs.push_back(v.position.y);
    obs.push_back(v.capacity / q);
  }
  return obs;
}

std::vector<std::uint8_t> valid_action_mask(const EnvState& s, std::size_t v) {
  check_vehicle(s, v);
  const double cap = s.vehicles[v].capacity;
  std::vector<std::uint8_t> mask(s.clients.size() + 1, 0);
  bool any = false;
  for (std::size_t c = 0; c < s.clients.size(); ++c) {
    const double d = s.clients[c].demand;
    mask[c] = d > 0.0 && d <= cap;
    any = any || mask[c];
  }
  mask.back() = !any;
  return mask;
}

Point anchor(const EnvState& s, std::size_t v) {
  check_vehicle(s, v);
  const auto& veh = s.vehicles[v];
  if (veh.served.empty()) return veh.position;
  Point sum;
  for (const auto& p : veh.served) {
    sum.x += p.x;
    sum.y += p.y;
  }
  const double n = static_cast<double>(veh.served.size());
  return Point{sum.x / n, sum.y / n};
}

double zone_cost(const EnvState& s, std::size_t v, std::size_t c) {
  check_vehicle(s, v);
  if (c >= s.clients.size()) throw ContractError("client index out of range");
  if (!(s.clients[c].demand > 0.0)) {
    throw ContractError("zone cost of an already served client");
  }
  const Point& xc = s.clients[c].position;
  const double eps = s.config.epsilon_zone;
  const double d = distance(xc, anchor(s, v)) + eps;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < s.vehicles.size(); ++u) {
    best = std::min(best, distance(xc, anchor(s, u)) + eps);
  }
  if (d == best) return 0.0;
  // 1 - e^-x rounds to 1.0 once x passes ~37; keep the value below 1.
  return std::min(-std::expm1(-(d / best - 1.0)), std::nextafter(1.0, 0.0));
}

double crossing_penalty(const EnvState& s, std::size_t v, const Point& from,
                        const Point& to) {
  check_vehicle(s, v);
  for (std::size_t u = 0; u < s.vehicles.size(); ++u) {
    const auto& segs = s.vehicles[u].segments;
    // The vehicle's own last segment ends where this move starts.
    const std::size_t n = u == v && !segs.empty() ? segs.size() - 1 : segs.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (segments_properly_intersect(from, to, segs[i].from, segs[i].to)) {
        return -s.config.lambda_overlap * distance(from, to) / kMaxDistance;
      }
    }
  }
  return 0.0;
}

double overlap_exponential(const EnvState& s, std::size_t v) {
  check_vehicle(s, v);
  const std::size_t n = s.vehicles.size();
  if (n < 2) throw ContractError("overlap term needs at least two vehicles");
  const double scale = s.config.gamma_overlap * kMaxDistance;
  double total = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    if (u == v) continue;
    total += std::exp(-distance(s.vehicles[v].position, s.vehicles[u].position) / scale);
  }
  return total / static_cast<double>(n - 1);
}

RewardBreakdown step_vehicle(EnvState& s, std::size_t v, std::size_t action) {
  check_vehicle(s, v);
  if (action > s.clients.size()) {
    throw ContractError("action " + std::to_string(action) + " for vehicle " +
                        std::to_string(v) + " outside [0, " +
                        std::to_string(s.clients.size()) + "]");
  }
  const auto& cfg = s.config;
  RewardBreakdown r;
  const auto mask = valid_action_mask(s, v);
  if (!mask[action]) {
    r.invalid = cfg.invalid_action_penalty;
    r.finalize();
    return r;
  }
  auto& veh = s.vehicles[v];
  const Point from = veh.position;
  if (action == cfg.depot_action()) {
    const double len = travel(s, v, s.depot);
    r.distance = -cfg.alpha * len / kMaxDistance;
    const double reload =
        std::min(cfg.vehicle_capacity - veh.capacity, s.depot_remaining);
    veh.capacity += reload;
    s.depot_remaining -= reload;
    s.reload_total += reload;
    record_stop(s, v, -1, s.depot, 0.0);
    r.finalize();
    return r;
  }
  auto& client = s.clients[action];
  const Point to = client.position;
  const double len = distance(from, to);
  r.service = cfg.beta;
  r.distance = -cfg.alpha * len / kMaxDistance;
  if (len <= cfg.neighbor_threshold * kMaxDistance) {
    r.nearby_bonus = cfg.nearby_client_bonus;
  }
  r.zone = -cfg.lambda_zone * zone_cost(s, v, action);
  r.crossing = crossing_penalty(s, v, from, to);
  travel(s, v, to);
  const double demand = client.demand;
  veh.capacity -= demand;
  veh.served.push_back(to);
  client.demand = 0.0;
  s.served_demand += demand;
  record_stop(s, v, static_cast<int>(action), to, demand);
  if (cfg.exponential_overlap && s.vehicles.size() >= 2) {
    r.overlap = -cfg.lambda_overlap * overlap_exponential(s, v);
  }
  r.finalize();
  return r;
}

StepResult step(EnvState& s, const ActionSet& actions) {
  if (actions.size() != s.vehicles.size()) {
    throw ContractError("expected " + std::to_string(s.vehicles.size()) +
                        " actions, got " + std::to_string(actions.size()));
  }
  for (std::size_t v = 0; v < actions.size(); ++v) {
    if (actions[v] > s.clients.size()) {
      throw ContractError("action " + std::to_string(actions[v]) +
                          " for vehicle " + std::to_string(v) +
                          " outside [0, " + std::to_string(s.clients.size()) + "]");
    }
  }
  if (is_terminal(s)) throw ContractError("step on a terminal state");

  StepResult out;
  out.rewards.resize(s.vehicles.size());
  for (std::size_t v = 0; v < actions.size(); ++v) {
    // Vehicles after the last service have nothing left to do.
    if (all_served(s)) break;
    const bool was_valid = valid_action_mask(s, v)[actions[v]];
    out.rewards[v] = step_vehicle(s, v, actions[v]);
    if (!was_valid) {
      ++out.info.invalid;
    } else if (actions[v] != s.config.depot_action()) {
      ++out.info.served;
    }
  }
  ++s.agent_step;
  if (all_served(s)) {
    out.done = true;
  } else if (s.agent_step >= s.config.horizon()) {
    out.done = true;
    out.info.truncated = true;
    const double share = s.config.unserved_client_penalty *
                         static_cast<double>(unserved_count(s)) /
                         static_cast<double>(s.vehicles.size());
    for (auto& r : out.rewards) {
      r.truncation = share;
      r.finalize();
    }
  }
  return out;
}

bool all_served(const EnvState& s) {
  return std::all_of(s.clients.begin(), s.clients.end(),
                     [](const ClientState& c) { return c.demand == 0.0; });
}

bool is_terminal(const EnvState& s) {
  return all_served(s) || s.agent_step >= s.config.horizon();
}

std::size_t unserved_count(const EnvState& s) {
  return static_cast<std::size_t>(
      std::count_if(s.clients.begin(), s.clients.end(),
                    [](const ClientState& c) { return c.demand > 0.0; }));
}

std::size_t served_count(const EnvState& s) {
  return s.clients.size() - unserved_count(s);
}

}  // namespace qcvrp::env

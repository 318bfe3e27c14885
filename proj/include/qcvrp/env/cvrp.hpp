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
#include <numbers>
#include <optional>
#include <vector>

#include "qcvrp/env/geometry.hpp"

namespace qcvrp::env {

// Diagonal of the unit-square map.
inline constexpr double kMaxDistance = std::numbers::sqrt2;
inline constexpr Point kDepotPosition{0.5, 0.5};

struct EnvConfig {
  std::size_t n_clients = 20;
  std::size_t n_vehicles = 4;
  double vehicle_capacity = 30.0;
  int demand_max = 9;
  // Shared depot stock; unset means twice the total initial demand.
  std::optional<double> depot_capacity;
  double alpha = 1.0;
  double beta = 1.0;
  double lambda_overlap = 1.0;
  double lambda_zone = 1.0;
  double gamma_overlap = 0.1;
  double epsilon_zone = 1e-6;
  double neighbor_threshold = 0.2;
  double nearby_client_bonus = 5.0;
  double invalid_action_penalty = -1.0;
  double unserved_client_penalty = -1.0;
  // Unset means 8 * n_clients.
  std::optional<std::size_t> max_agent_steps;
  // Adds the exponential proximity term to every client move.
  bool exponential_overlap = false;

  void validate() const;
  std::size_t horizon() const {
    return max_agent_steps.value_or(8 * n_clients);
  }
  std::size_t observation_size() const {
    return 3 + 3 * n_clients + 3 * n_vehicles;
  }
  // Index of the depot action.
  std::size_t depot_action() const { return n_clients; }
};

// A concrete problem: everything reset() draws from the seed.
struct Instance {
  std::uint64_t seed = 0;
  Point depot = kDepotPosition;
  std::vector<Point> positions;
  std::vector<int> demands;
  double vehicle_capacity = 30.0;
  double depot_capacity = 0.0;

  std::size_t n_clients() const { return positions.size(); }
};

Instance generate_instance(const EnvConfig& config, std::uint64_t seed);

// One executed move in a vehicle's history.
struct RouteStop {
  // Client index, or -1 for the depot.
  int client = -1;
  Point position;
  double demand_served = 0.0;
};

// Per-vehicle position history; positions[v][0] is the depot.
struct RouteLog {
  Point depot = kDepotPosition;
  std::vector<std::vector<Point>> positions;
  std::vector<std::vector<RouteStop>> stops;

  std::size_t n_vehicles() const { return positions.size(); }
};

struct Segment {
  Point from;
  Point to;
};

struct ClientState {
  Point position;
  double demand = 0.0;
  double initial_demand = 0.0;
};

struct VehicleState {
  Point position = kDepotPosition;
  double capacity = 0.0;
  std::vector<Point> served;
  // Non-degenerate moves, in execution order.
  std::vector<Segment> segments;
};

struct EnvState {
  EnvConfig config;
  std::uint64_t seed = 0;
  Point depot = kDepotPosition;
  double depot_capacity = 0.0;
  double depot_remaining = 0.0;
  std::vector<ClientState> clients;
  std::vector<VehicleState> vehicles;
  std::size_t agent_step = 0;
  // Bookkeeping for the invariants and metrics.
  double total_initial_demand = 0.0;
  double served_demand = 0.0;
  double reload_total = 0.0;
  double distance_travelled = 0.0;
  RouteLog routes;
};

struct RewardBreakdown {
  double service = 0.0;
  double distance = 0.0;
  double zone = 0.0;
  double crossing = 0.0;
  double overlap = 0.0;
  double nearby_bonus = 0.0;
  double invalid = 0.0;
  double truncation = 0.0;
  double total = 0.0;

  // Sets total to the component sum.
  void finalize();
  double component_sum() const;
};

using ActionSet = std::vector<std::size_t>;

struct StepInfo {
  std::size_t served = 0;
  std::size_t invalid = 0;
  bool truncated = false;
};

struct StepResult {
  std::vector<RewardBreakdown> rewards;
  bool done = false;
  StepInfo info;
};

EnvState reset(const EnvConfig& config, std::uint64_t seed);
EnvState make_state(const EnvConfig& config, const Instance& instance);
Instance instance_of(const EnvState& state);

// [depot x, y, stock fraction] ++ [x, y, demand / demand_max] per client ++
// [x, y, capacity / Q] per vehicle.
std::vector<double> observe(const EnvState& state);

// n_clients + 1 entries; the last is the depot.
std::vector<std::uint8_t> valid_action_mask(const EnvState& state,
                                            std::size_t vehicle);

Point anchor(const EnvState& state, std::size_t vehicle);
double zone_cost(const EnvState& state, std::size_t vehicle, std::size_t client);
double crossing_penalty(const EnvState& state, std::size_t vehicle,
                        const Point& from, const Point& to);
double overlap_exponential(const EnvState& state, std::size_t vehicle);

// Executes one vehicle's action against the current shared state.
RewardBreakdown step_vehicle(EnvState& state, std::size_t vehicle,
                             std::size_t action);

// One logical timestep: every vehicle in index order, then termination.
StepResult step(EnvState& state, const ActionSet& actions);

bool all_served(const EnvState& state);
bool is_terminal(const EnvState& state);
std::size_t unserved_count(const EnvState& state);
std::size_t served_count(const EnvState& state);

}  // namespace qcvrp::env

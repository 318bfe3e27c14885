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

#include <utility>

#include "json.hpp"
#include "qcvrp/env/cvrp.hpp"

namespace qcvrp::env {

// Unknown keys are rejected with ConfigError; missing keys keep defaults.
void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

// {seed, n_clients, n_vehicles, positions, demands, depot, Q,
//  depot_capacity, config}
nlohmann::json instance_to_json(const EnvConfig& config, const Instance& inst);
std::pair<EnvConfig, Instance> instance_from_json(const nlohmann::json& j);

nlohmann::json route_log_to_json(const RouteLog& log);

}  // namespace qcvrp::env

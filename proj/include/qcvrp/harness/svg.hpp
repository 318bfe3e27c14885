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

#include <filesystem>
#include <map>
#include <string>

#include "qcvrp/env/cvrp.hpp"
#include "qcvrp/harness/metrics.hpp"

namespace qcvrp::harness {

// Clients as circles sized by demand, the depot as a square, one polyline per
// vehicle and a legend with per-vehicle distance. Output depends only on the
// inputs.
std::string routes_svg(const env::Instance& instance, const env::RouteLog& routes,
                       const std::string& title = "");
void render_routes_svg(const env::Instance& instance, const env::RouteLog& routes,
                       const std::filesystem::path& path,
                       const std::string& title = "");

// One box per entry, shared vertical axis.
std::string boxplot_svg(const std::map<std::string, BoxplotSummary>& boxes,
                        const std::string& title);

// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace qcvrp::harness

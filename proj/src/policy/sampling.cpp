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
#include <limits>

#include "qcvrp/common/error.hpp"
#include "qcvrp/policy/policy.hpp"

namespace qcvrp::policy {

RowSample sample_row(std::span<const double> logits,
                     std::span<const std::uint8_t> mask, SampleMode mode,
                     Rng& rng) {
  if (logits.size() != mask.size()) {
    throw DimensionError("logit row and mask differ in length");
  }
  double top = -std::numeric_limits<double>::infinity();
  std::size_t best = logits.size();
  for (std::size_t s = 0; s < logits.size(); ++s) {
    if (mask[s] && (best == logits.size() || logits[s] > top)) {
      top = logits[s];
      best = s;
    }
  }
  if (best == logits.size()) throw InfeasibleError("no valid action in mask row");

  double z = 0.0;
  for (std::size_t s = 0; s < logits.size(); ++s) {
    if (mask[s]) z += std::exp(logits[s] - top);
  }
  const double log_z = top + std::log(z);
  double entropy = 0.0;
  for (std::size_t s = 0; s < logits.size(); ++s) {
    if (!mask[s]) continue;
    const double lp = logits[s] - log_z;
    entropy -= std::exp(lp) * lp;
  }

  std::size_t pick = best;
  if (mode == SampleMode::kStochastic) {
    const double u = rng.uniform();
    double acc = 0.0;
    pick = logits.size();
    std::size_t last_valid = best;
    for (std::size_t s = 0; s < logits.size(); ++s) {
      if (!mask[s]) continue;
      last_valid = s;
      acc += std::exp(logits[s] - log_z);
      if (u < acc) {
        pick = s;
        break;
      }
    }
    // Rounding can leave acc a hair below 1.
    if (pick == logits.size()) pick = last_valid;
  }
  return RowSample{pick, logits[pick] - log_z, entropy};
}

SampleResult sample_actions(const PolicyOutput& output,
                            const std::vector<std::uint8_t>& masks,
                            SampleMode mode, Rng& rng) {
  const std::size_t S = output.n_candidates;
  if (masks.size() != output.n_vehicles * S) {
    throw DimensionError("mask has " + std::to_string(masks.size()) +
                         " entries, expected " +
                         std::to_string(output.n_vehicles * S));
  }
  SampleResult r;
  for (std::size_t v = 0; v < output.n_vehicles; ++v) {
    auto row = sample_row(output.row(v),
                          std::span<const std::uint8_t>(masks).subspan(v * S, S),
                          mode, rng);
    r.actions.push_back(row.action);
    r.log_probs.push_back(row.log_prob);
    r.entropies.push_back(row.entropy);
  }
  return r;
}

}  // namespace qcvrp::policy

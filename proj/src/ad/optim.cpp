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

#include "qcvrp/ad/optim.hpp"

#include <cmath>

#include "qcvrp/common/error.hpp"

namespace qcvrp::ad {

void adamw_step(ParamStore& store, const GradMap& grads, double lr,
                double beta1, double beta2, double eps, double weight_decay) {
  for (const auto& [name, p] : store.params_) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ContractError("missing gradient for " + name);
    if (it->second.size() != p.size()) {
      throw DimensionError("gradient for " + name + " has " +
                           std::to_string(it->second.size()) + " entries, want " +
                           std::to_string(p.size()));
    }
  }
  ++store.step_;
  const double t = static_cast<double>(store.step_);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (auto& [name, p] : store.params_) {
    const auto& g = grads.at(name);
    auto& m = store.m_.at(name).values;
    auto& v = store.v_.at(name).values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      double& w = p.values[i];
      w -= lr * weight_decay * w;
      w -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

double global_grad_norm(const GradMap& grads) {
  double sq = 0.0;
  for (const auto& [_, g] : grads) {
    for (double x : g) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(GradMap& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& [_, g] : grads) {
      for (double& x : g) x *= factor;
    }
  }
  return norm;
}

}  // namespace qcvrp::ad

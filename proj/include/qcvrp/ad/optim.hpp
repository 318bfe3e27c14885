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

#include "qcvrp/ad/nn.hpp"

namespace qcvrp::ad {

struct AdamWConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// One AdamW update. `grads` must hold a key for every stored parameter.
void adamw_step(ParamStore& store, const GradMap& grads, double lr,
                double beta1, double beta2, double eps, double weight_decay);

inline void adamw_step(ParamStore& store, const GradMap& grads,
                       const AdamWConfig& cfg) {
  adamw_step(store, grads, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
             cfg.weight_decay);
}

double global_grad_norm(const GradMap& grads);

// Rescales all gradients so the global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(GradMap& grads, double max_norm);

}  // namespace qcvrp::ad

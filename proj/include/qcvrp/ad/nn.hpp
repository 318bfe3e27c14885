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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qcvrp/ad/ops.hpp"
#include "qcvrp/ad/tensor.hpp"
#include "qcvrp/common/rng.hpp"

namespace qcvrp::ad {

using GradMap = std::map<std::string, std::vector<double>>;

// Named trainable tensors plus the AdamW moment accumulators.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get_mut(const std::string& name);
  std::vector<std::string> names() const;
  std::size_t total_size() const;

  const std::map<std::string, Tensor>& params() const { return params_; }
  const std::map<std::string, Tensor>& first_moments() const { return m_; }
  const std::map<std::string, Tensor>& second_moments() const { return v_; }
  std::uint64_t step() const { return step_; }

  // Replace optimizer state wholesale (checkpoint restore).
  void restore_moments(std::map<std::string, Tensor> m,
                       std::map<std::string, Tensor> v, std::uint64_t step);

 private:
  friend void adamw_step(ParamStore&, const GradMap&, double, double, double,
                         double, double);

  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  std::uint64_t step_ = 0;
};

// Binds store parameters into one graph, creating each leaf on first use so
// that repeated uses within an episode share a node.
class Binder {
 public:
  Binder(Graph& graph, const ParamStore& store) : graph_(graph), store_(store) {}

  Var operator()(const std::string& name);
  Graph& graph() { return graph_; }
  const ParamStore& store() const { return store_; }

  // Gradient for every store parameter; zeros for parameters never bound.
  GradMap gradients() const;

 private:
  Graph& graph_;
  const ParamStore& store_;
  std::map<std::string, Var> bound_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weight and bias.
void init_linear(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, Rng& rng);
Var apply_linear(Binder& bind, const std::string& prefix, const Var& x);

void init_layer_norm(ParamStore& store, const std::string& prefix,
                     std::size_t width);
Var apply_layer_norm(Binder& bind, const std::string& prefix, const Var& x);

void init_attention(ParamStore& store, const std::string& prefix,
                    std::size_t d_model, std::size_t heads, Rng& rng);

// Scaled dot-product attention per head with learned q/k/v/output
// projections. query [B, Tq, D], key and value [B, Tk, D].
Var multi_head_attention(Binder& bind, const std::string& prefix,
                         const Var& query, const Var& key, const Var& value,
                         std::size_t heads);

struct TransformerShape {
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t hidden = 128;
  std::size_t layers = 1;
};

// Post-norm blocks: self-attention, add & norm, feed-forward, add & norm.
void init_transformer_encoder(ParamStore& store, const std::string& prefix,
                              const TransformerShape& shape, Rng& rng);
Var transformer_encoder(Binder& bind, const std::string& prefix, const Var& x,
                        const TransformerShape& shape);

// Post-norm blocks: unmasked self-attention over the targets, cross-attention
// onto memory, feed-forward; each followed by add & norm.
void init_transformer_decoder(ParamStore& store, const std::string& prefix,
                              const TransformerShape& shape, Rng& rng);
Var transformer_decoder(Binder& bind, const std::string& prefix,
                        const Var& target, const Var& memory,
                        const TransformerShape& shape);

}  // namespace qcvrp::ad

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

#include "qcvrp/ad/nn.hpp"

#include <cmath>

#include "qcvrp/common/error.hpp"

namespace qcvrp::ad {

void ParamStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw ContractError("duplicate parameter " + name);
  m_.emplace(name, Tensor::zeros(value.shape));
  v_.emplace(name, Tensor::zeros(value.shape));
  params_.emplace(name, std::move(value));
}

bool ParamStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

Tensor& ParamStore::get_mut(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, _] : params_) out.push_back(k);
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void ParamStore::restore_moments(std::map<std::string, Tensor> m,
                                 std::map<std::string, Tensor> v,
                                 std::uint64_t step) {
  for (const auto& [name, p] : params_) {
    auto mi = m.find(name);
    auto vi = v.find(name);
    if (mi == m.end() || vi == v.end() || mi->second.shape != p.shape ||
        vi->second.shape != p.shape) {
      throw ContractError("optimizer state missing or misshapen for " + name);
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
  step_ = step;
}

Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = graph_.variable(store_.get(name));
  bound_.emplace(name, v);
  return v;
}

GradMap Binder::gradients() const {
  GradMap out;
  for (const auto& [name, t] : store_.params()) {
    auto it = bound_.find(name);
    out[name] = it == bound_.end() ? std::vector<double>(t.size(), 0.0)
                                   : graph_.grad(it->second);
  }
  return out;
}

void init_linear(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w = Tensor::zeros({in, out});
  for (auto& x : w.values) x = rng.uniform(-bound, bound);
  Tensor b = Tensor::zeros({out});
  for (auto& x : b.values) x = rng.uniform(-bound, bound);
  store.add(prefix + ".weight", std::move(w));
  store.add(prefix + ".bias", std::move(b));
}

Var apply_linear(Binder& bind, const std::string& prefix, const Var& x) {
  return linear(x, bind(prefix + ".weight"), bind(prefix + ".bias"));
}

void init_layer_norm(ParamStore& store, const std::string& prefix,
                     std::size_t width) {
  store.add(prefix + ".gain", Tensor({width}, std::vector<double>(width, 1.0)));
  store.add(prefix + ".shift", Tensor::zeros({width}));
}

Var apply_layer_norm(Binder& bind, const std::string& prefix, const Var& x) {
  return layer_norm(x, bind(prefix + ".gain"), bind(prefix + ".shift"));
}

void init_attention(ParamStore& store, const std::string& prefix,
                    std::size_t d_model, std::size_t heads, Rng& rng) {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("model width " + std::to_string(d_model) +
                      " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  for (const char* p : {".q", ".k", ".v", ".out"}) {
    init_linear(store, prefix + p, d_model, d_model, rng);
  }
}

Var multi_head_attention(Binder& bind, const std::string& prefix,
                         const Var& query, const Var& key, const Var& value,
                         std::size_t heads) {
  const Shape& qs = query.shape();
  if (qs.size() != 3 || key.shape().size() != 3 ||
      key.shape() != value.shape() || key.shape()[0] != qs[0] ||
      key.shape()[2] != qs[2]) {
    throw DimensionError("attention: query " + shape_string(qs) + ", key " +
                         shape_string(key.shape()) + ", value " +
                         shape_string(value.shape()));
  }
  if (heads == 0 || qs[2] % heads != 0) {
    throw ConfigError("model width " + std::to_string(qs[2]) +
                      " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  const double head_dim = static_cast<double>(qs[2] / heads);
  Var q = split_heads(apply_linear(bind, prefix + ".q", query), heads);
  Var k = split_heads(apply_linear(bind, prefix + ".k", key), heads);
  Var v = split_heads(apply_linear(bind, prefix + ".v", value), heads);
  Var scores = scale(bmm(q, k, /*transpose_b=*/true), 1.0 / std::sqrt(head_dim));
  Var context = merge_heads(bmm(softmax(scores), v), heads);
  return apply_linear(bind, prefix + ".out", context);
}

namespace {

std::string layer_prefix(const std::string& prefix, std::size_t i) {
  return prefix + ".layers." + std::to_string(i);
}

void init_feed_forward(ParamStore& store, const std::string& prefix,
                       const TransformerShape& shape, Rng& rng) {
  init_linear(store, prefix + ".ff1", shape.d_model, shape.hidden, rng);
  init_linear(store, prefix + ".ff2", shape.hidden, shape.d_model, rng);
}

Var feed_forward(Binder& bind, const std::string& prefix, const Var& x) {
  return apply_linear(bind, prefix + ".ff2",
                      relu(apply_linear(bind, prefix + ".ff1", x)));
}

}  // namespace

void init_transformer_encoder(ParamStore& store, const std::string& prefix,
                              const TransformerShape& shape, Rng& rng) {
  for (std::size_t i = 0; i < shape.layers; ++i) {
    const auto p = layer_prefix(prefix, i);
    init_attention(store, p + ".self_attn", shape.d_model, shape.heads, rng);
    init_layer_norm(store, p + ".norm1", shape.d_model);
    init_feed_forward(store, p, shape, rng);
    init_layer_norm(store, p + ".norm2", shape.d_model);
  }
}

Var transformer_encoder(Binder& bind, const std::string& prefix, const Var& x,
                        const TransformerShape& shape) {
  Var h = x;
  for (std::size_t i = 0; i < shape.layers; ++i) {
    const auto p = layer_prefix(prefix, i);
    Var attn = multi_head_attention(bind, p + ".self_attn", h, h, h, shape.heads);
    h = apply_layer_norm(bind, p + ".norm1", add(h, attn));
    h = apply_layer_norm(bind, p + ".norm2", add(h, feed_forward(bind, p, h)));
  }
  return h;
}

void init_transformer_decoder(ParamStore& store, const std::string& prefix,
                              const TransformerShape& shape, Rng& rng) {
  for (std::size_t i = 0; i < shape.layers; ++i) {
    const auto p = layer_prefix(prefix, i);
    init_attention(store, p + ".self_attn", shape.d_model, shape.heads, rng);
    init_layer_norm(store, p + ".norm1", shape.d_model);
    init_attention(store, p + ".cross_attn", shape.d_model, shape.heads, rng);
    init_layer_norm(store, p + ".norm2", shape.d_model);
    init_feed_forward(store, p, shape, rng);
    init_layer_norm(store, p + ".norm3", shape.d_model);
  }
}

Var transformer_decoder(Binder& bind, const std::string& prefix,
                        const Var& target, const Var& memory,
                        const TransformerShape& shape) {
  Var h = target;
  for (std::size_t i = 0; i < shape.layers; ++i) {
    const auto p = layer_prefix(prefix, i);
    Var self = multi_head_attention(bind, p + ".self_attn", h, h, h, shape.heads);
    h = apply_layer_norm(bind, p + ".norm1", add(h, self));
    Var cross = multi_head_attention(bind, p + ".cross_attn", h, memory, memory,
                                     shape.heads);
    h = apply_layer_norm(bind, p + ".norm2", add(h, cross));
    h = apply_layer_norm(bind, p + ".norm3", add(h, feed_forward(bind, p, h)));
  }
  return h;
}

}  // namespace qcvrp::ad

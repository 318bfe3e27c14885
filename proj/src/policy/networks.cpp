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

#include <string>

#include "qcvrp/common/error.hpp"
#include "qcvrp/policy/policy.hpp"
#include "qcvrp/qsim/statevector.hpp"

namespace qcvrp::policy {

namespace {

constexpr double kAngleInit = 0.1;

std::string indexed(const std::string& prefix, std::size_t i) {
  return prefix + "." + std::to_string(i) + ".angles";
}

void init_angles(ad::ParamStore& store, const std::string& name,
                 std::size_t layers, std::size_t qubits, Rng& rng) {
  ad::Tensor t = ad::Tensor::zeros({layers, qubits, 3});
  for (double& a : t.values) a = rng.uniform(-kAngleInit, kAngleInit);
  store.add(name, std::move(t));
}

ad::TransformerShape transformer_shape(const PolicySpec& s) {
  return ad::TransformerShape{s.d_model, s.heads, s.ff_width(), s.classical_layers};
}

std::size_t head_input_width(const PolicySpec& s) {
  switch (s.variant) {
    case Variant::kCpn: return 2 * s.d_model;
    case Variant::kHqp:
    case Variant::kFqp: return s.heads * s.qubits().decoder_input + 3;
  }
  return 0;
}

// Candidate rows arrive depot first (observation order); actions number the
// clients first and the depot last.
ad::Var action_order(const ad::Var& rows) {
  const std::size_t S = rows.shape()[0];
  std::vector<ad::Var> out;
  out.reserve(S);
  for (std::size_t s = 1; s < S; ++s) out.push_back(ad::row(rows, s));
  out.push_back(ad::row(rows, 0));
  return ad::stack(out);
}

// Per-(vehicle, candidate) joint features -> ReLU feed-forward -> pointer
// logits and a pooled critic value.
GraphOutput pointer_and_critic(ad::Binder& bind, const ad::Var& per_vehicle,
                               const ad::Var& per_candidate) {
  const std::size_t V = per_vehicle.shape()[0];
  const std::size_t S = per_candidate.shape()[0];
  ad::Var joint = ad::pair_concat(per_vehicle, action_order(per_candidate));
  ad::Var hidden = ad::relu(ad::apply_linear(bind, "head.ff", joint));
  ad::Var logits = ad::reshape(ad::apply_linear(bind, "head.pointer", hidden), {V, S});
  ad::Var value = ad::apply_linear(bind, "head.critic", ad::mean_rows(hidden));
  return GraphOutput{logits, value};
}

}  // namespace

void init_parameters(const PolicySpec& spec, ad::ParamStore& store, Rng& rng) {
  spec.validate();
  const auto q = spec.qubits();
  switch (spec.variant) {
    case Variant::kCpn: {
      const auto shape = transformer_shape(spec);
      ad::init_linear(store, "cpn.embed_customers", 3, spec.d_model, rng);
      ad::init_linear(store, "cpn.embed_vehicles", 3, spec.d_model, rng);
      ad::init_transformer_encoder(store, "cpn.encoder", shape, rng);
      ad::init_transformer_decoder(store, "cpn.decoder", shape, rng);
      break;
    }
    case Variant::kHqp:
      for (std::size_t i = 0; i < spec.heads; ++i) {
        init_angles(store, indexed("hqp.encoder", i), spec.quantum_layers, q.encoder, rng);
      }
      for (std::size_t i = 0; i < spec.heads; ++i) {
        init_angles(store, indexed("hqp.decoder", i), spec.quantum_layers, q.decoder, rng);
      }
      break;
    case Variant::kFqp:
      init_angles(store, "fqp.embed_customers.angles", spec.embedding_layers,
                  q.embed_customers, rng);
      init_angles(store, "fqp.embed_vehicles.angles", spec.embedding_layers,
                  q.embed_vehicles, rng);
      for (std::size_t i = 0; i < spec.heads; ++i) {
        init_angles(store, indexed("fqp.encoder", i), spec.encoder_layers, q.encoder, rng);
      }
      for (std::size_t i = 0; i < spec.heads; ++i) {
        init_angles(store, indexed("fqp.decoder", i), spec.quantum_layers, q.decoder, rng);
      }
      break;
  }
  ad::init_linear(store, "head.ff", head_input_width(spec), spec.hidden, rng);
  ad::init_linear(store, "head.pointer", spec.hidden, 1, rng);
  ad::init_linear(store, "head.critic", spec.hidden, 1, rng);
}

GraphOutput cpn_forward(ad::Binder& bind, const PolicySpec& spec,
                        std::span<const double> obs) {
  auto split = split_observation(obs, spec.n_clients, spec.n_vehicles);
  const std::size_t S = spec.candidates(), V = spec.n_vehicles;
  ad::Graph& g = bind.graph();
  const auto shape = transformer_shape(spec);

  ad::Var cust = g.constant(ad::Tensor({1, S, 3}, split.customers.values));
  ad::Var veh = g.constant(ad::Tensor({1, V, 3}, split.vehicles.values));
  ad::Var enc = ad::transformer_encoder(
      bind, "cpn.encoder", ad::apply_linear(bind, "cpn.embed_customers", cust), shape);
  ad::Var dec = ad::transformer_decoder(
      bind, "cpn.decoder", ad::apply_linear(bind, "cpn.embed_vehicles", veh), enc, shape);
  return pointer_and_critic(bind, ad::reshape(dec, {V, spec.d_model}),
                            ad::reshape(enc, {S, spec.d_model}));
}

GraphOutput hqp_forward(ad::Binder& bind, const PolicySpec& spec,
                        std::span<const double> obs, ForwardTrace* trace) {
  auto split = split_observation(obs, spec.n_clients, spec.n_vehicles);
  const std::size_t V = spec.n_vehicles, h = spec.heads;
  const std::size_t dc = spec.customer_width();
  const std::size_t d_dec = spec.qubits().decoder_input;
  ad::Graph& g = bind.graph();

  ad::Var xc = g.constant(ad::Tensor::vector(split.customers.values));
  std::vector<ad::Var> z(h);
  for (std::size_t i = 0; i < h; ++i) {
    z[i] = qsim::vqc_node(xc, bind(indexed("hqp.encoder", i)), dc);
  }

  std::vector<ad::Var> rows;
  rows.reserve(V);
  if (trace) {
    trace->encoder.clear();
    for (const auto& zi : z) trace->encoder.push_back(zi.value());
    trace->decoder.assign(h, std::vector<std::vector<double>>(V));
  }
  for (std::size_t v = 0; v < V; ++v) {
    ad::Var ev = g.constant(ad::Tensor::vector(vehicle_view(split.vehicles, v)));
    std::vector<ad::Var> heads;
    heads.reserve(h);
    for (std::size_t i = 0; i < h; ++i) {
      ad::Var in = ad::concat_last({ev, z[i]});
      heads.push_back(qsim::vqc_node(in, bind(indexed("hqp.decoder", i)), d_dec));
      if (trace) trace->decoder[i][v] = heads.back().value();
    }
    rows.push_back(ad::concat_last(heads));
  }
  ad::Var cand = g.constant(split.customers);
  return pointer_and_critic(bind, ad::stack(rows), cand);
}

GraphOutput fqp_forward(ad::Binder& bind, const PolicySpec& spec,
                        std::span<const double> obs, ForwardTrace* trace) {
  auto split = split_observation(obs, spec.n_clients, spec.n_vehicles);
  const std::size_t V = spec.n_vehicles, h = spec.heads;
  const std::size_t dc = spec.customer_width(), dv = spec.vehicle_width();
  const std::size_t d_dec = spec.qubits().decoder_input;
  ad::Graph& g = bind.graph();

  ad::Var xc = g.constant(ad::Tensor::vector(split.customers.values));
  ad::Var ec = qsim::vqc_node(xc, bind("fqp.embed_customers.angles"), dc);
  std::vector<ad::Var> z(h);
  for (std::size_t i = 0; i < h; ++i) {
    z[i] = qsim::vqc_node(ec, bind(indexed("fqp.encoder", i)), dc);
  }
  ad::Var z_all = ad::concat_last(z);

  if (trace) {
    trace->encoder.clear();
    for (const auto& zi : z) trace->encoder.push_back(zi.value());
    trace->decoder.assign(h, std::vector<std::vector<double>>(V));
  }
  ad::Var emb_v = bind("fqp.embed_vehicles.angles");
  std::vector<ad::Var> rows;
  rows.reserve(V);
  for (std::size_t v = 0; v < V; ++v) {
    ad::Var xv = g.constant(ad::Tensor::vector(vehicle_view(split.vehicles, v)));
    ad::Var ev = qsim::vqc_node(xv, emb_v, dv);
    ad::Var in = ad::concat_last({ev, z_all});
    std::vector<ad::Var> heads;
    heads.reserve(h);
    for (std::size_t i = 0; i < h; ++i) {
      heads.push_back(qsim::vqc_node(in, bind(indexed("fqp.decoder", i)), d_dec));
      if (trace) trace->decoder[i][v] = heads.back().value();
    }
    rows.push_back(ad::concat_last(heads));
  }
  ad::Var cand = g.constant(split.customers);
  return pointer_and_critic(bind, ad::stack(rows), cand);
}

}  // namespace qcvrp::policy

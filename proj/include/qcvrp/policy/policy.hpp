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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcvrp/ad/nn.hpp"
#include "qcvrp/common/rng.hpp"

namespace qcvrp::policy {

enum class Variant { kCpn, kHqp, kFqp };

std::string variant_name(Variant v);
// Accepts "cpn", "hqp", "fqp" in any case.
Variant parse_variant(const std::string& name);

struct QubitCounts {
  std::size_t embed_customers = 0;  // FQP only
  std::size_t embed_vehicles = 0;   // FQP only
  std::size_t encoder = 0;
  std::size_t decoder = 0;
  std::size_t decoder_input = 0;    // width fed to each decoder head
};

struct PolicySpec {
  Variant variant = Variant::kCpn;
  std::size_t n_clients = 20;
  std::size_t n_vehicles = 4;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t classical_layers = 7;
  // Transformer feed-forward width; 0 means 4 * d_model.
  std::size_t transformer_hidden = 0;
  // Width of the post-processing feed-forward layer.
  std::size_t hidden = 128;
  // HQP encoder/decoder heads and the FQP decoder heads.
  std::size_t quantum_layers = 1;
  // FQP embedding circuits.
  std::size_t embedding_layers = 1;
  // FQP encoder heads.
  std::size_t encoder_layers = 1;

  std::size_t candidates() const { return n_clients + 1; }
  std::size_t customer_width() const { return 3 * (n_clients + 1); }
  std::size_t vehicle_width() const { return 3 * n_vehicles; }
  std::size_t ff_width() const {
    return transformer_hidden ? transformer_hidden : 4 * d_model;
  }
  QubitCounts qubits() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const PolicySpec& s);
void from_json(const nlohmann::json& j, PolicySpec& s);

// Logit columns follow the environment's action numbering: clients
// 0..n_clients-1, then the depot.
struct PolicyOutput {
  // Row-major [n_vehicles][n_clients + 1].
  std::vector<double> logits;
  std::size_t n_vehicles = 0;
  std::size_t n_candidates = 0;
  double value = 0.0;

  std::span<const double> row(std::size_t v) const {
    return std::span<const double>(logits).subspan(v * n_candidates, n_candidates);
  }
};

struct GraphOutput {
  ad::Var logits;  // [n_vehicles, n_clients + 1]
  ad::Var value;   // [1]
};

// Intermediate quantum-head outputs, recorded on request.
struct ForwardTrace {
  // encoder[i]: output of encoder head i.
  std::vector<std::vector<double>> encoder;
  // decoder[i][v]: output of decoder head i for vehicle v, before the heads
  // are concatenated.
  std::vector<std::vector<std::vector<double>>> decoder;
};

struct SplitObservation {
  ad::Tensor customers;  // [n_clients + 1, 3], depot first
  ad::Tensor vehicles;   // [n_vehicles, 3]
};

SplitObservation split_observation(std::span<const double> obs,
                                   std::size_t n_clients,
                                   std::size_t n_vehicles);

// Vehicle features as seen by vehicle v: its own triple first, then the
// others in index order.
std::vector<double> vehicle_view(const ad::Tensor& vehicles, std::size_t v);

class Policy {
 public:
  // Fresh parameters drawn from `seed`.
  Policy(PolicySpec spec, std::uint64_t seed);
  Policy(PolicySpec spec, ad::ParamStore params);

  const PolicySpec& spec() const { return spec_; }
  const ad::ParamStore& params() const { return params_; }
  ad::ParamStore& params() { return params_; }

  GraphOutput forward(ad::Binder& bind, std::span<const double> obs,
                      ForwardTrace* trace = nullptr) const;

  // Forward pass on a private graph, detached.
  PolicyOutput evaluate(std::span<const double> obs,
                        ForwardTrace* trace = nullptr) const;

 private:
  PolicySpec spec_;
  ad::ParamStore params_;
};

void init_parameters(const PolicySpec& spec, ad::ParamStore& store, Rng& rng);

// True for circuit-angle tensors ([layers, qubits, 3]).
bool is_quantum_parameter(const std::string& name);

GraphOutput cpn_forward(ad::Binder& bind, const PolicySpec& spec,
                        std::span<const double> obs);
GraphOutput hqp_forward(ad::Binder& bind, const PolicySpec& spec,
                        std::span<const double> obs, ForwardTrace* trace);
GraphOutput fqp_forward(ad::Binder& bind, const PolicySpec& spec,
                        std::span<const double> obs, ForwardTrace* trace);

// {variant, spec, parameters: {name: {shape, values}}, quantum_angles:
// {name: [layer][qubit][3]}}. Values are row-major.
nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);

enum class SampleMode { kStochastic, kGreedy };

struct RowSample {
  std::size_t action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Masked softmax over one logit row, then a draw (or argmax with ties to the
// lowest index). Throws InfeasibleError when nothing is valid.
RowSample sample_row(std::span<const double> logits,
                     std::span<const std::uint8_t> mask, SampleMode mode,
                     Rng& rng);

struct SampleResult {
  std::vector<std::size_t> actions;
  std::vector<double> log_probs;
  std::vector<double> entropies;
};

// masks is row-major [n_vehicles][n_clients + 1].
SampleResult sample_actions(const PolicyOutput& output,
                            const std::vector<std::uint8_t>& masks,
                            SampleMode mode, Rng& rng);

}  // namespace qcvrp::policy

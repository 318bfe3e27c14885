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

#include "qcvrp/policy/policy.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "qcvrp/common/error.hpp"
#include "qcvrp/qsim/statevector.hpp"

namespace qcvrp::policy {

using nlohmann::json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kCpn: return "cpn";
    case Variant::kHqp: return "hqp";
    case Variant::kFqp: return "fqp";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "cpn") return Variant::kCpn;
  if (s == "hqp") return Variant::kHqp;
  if (s == "fqp") return Variant::kFqp;
  throw ConfigError("unknown variant '" + name + "' (expected cpn, hqp or fqp)");
}

QubitCounts PolicySpec::qubits() const {
  QubitCounts q;
  const std::size_t dc = customer_width(), dv = vehicle_width();
  switch (variant) {
    case Variant::kCpn:
      break;
    case Variant::kHqp:
      q.encoder = qsim::qubits_for(dc);
      q.decoder_input = dv + dc;
      q.decoder = qsim::qubits_for(q.decoder_input);
      break;
    case Variant::kFqp:
      q.embed_customers = qsim::qubits_for(dc);
      q.embed_vehicles = qsim::qubits_for(dv);
      q.encoder = qsim::qubits_for(dc);
      q.decoder_input = dv + heads * dc;
      q.decoder = qsim::qubits_for(q.decoder_input);
      break;
  }
  return q;
}

void PolicySpec::validate() const {
  if (n_clients == 0 || n_vehicles == 0) {
    throw ConfigError("policy needs at least one client and one vehicle");
  }
  if (heads == 0) throw ConfigError("heads must be positive");
  if (hidden == 0) throw ConfigError("hidden must be positive");
  if (variant == Variant::kCpn) {
    if (d_model == 0 || d_model % heads != 0) {
      throw ConfigError("d_model " + std::to_string(d_model) +
                        " is not divisible by heads " + std::to_string(heads));
    }
  } else {
    if (quantum_layers == 0 || embedding_layers == 0 || encoder_layers == 0) {
      throw ConfigError("circuit layer counts must be positive");
    }
    const auto q = qubits();
    if (std::max({q.encoder, q.decoder, q.embed_customers, q.embed_vehicles}) > 16) {
      throw ConfigError("instance too large for the statevector simulator");
    }
  }
}

void to_json(json& j, const PolicySpec& s) {
  j = json{{"variant", variant_name(s.variant)},
           {"n_clients", s.n_clients},
           {"n_vehicles", s.n_vehicles},
           {"d_model", s.d_model},
           {"heads", s.heads},
           {"classical_layers", s.classical_layers},
           {"transformer_hidden", s.transformer_hidden},
           {"hidden", s.hidden},
           {"quantum_layers", s.quantum_layers},
           {"embedding_layers", s.embedding_layers},
           {"encoder_layers", s.encoder_layers}};
}

void from_json(const json& j, PolicySpec& s) {
  static const std::set<std::string> known = {
      "variant", "n_clients", "n_vehicles", "d_model", "heads",
      "classical_layers", "transformer_hidden", "hidden", "quantum_layers",
      "embedding_layers", "encoder_layers"};
  if (!j.is_object()) throw ConfigError("policy spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown policy field '" + key + "'");
  }
  try {
    if (j.contains("variant")) s.variant = parse_variant(j.at("variant").get<std::string>());
    auto read = [&](const char* key, std::size_t& out) {
      if (j.contains(key)) out = j.at(key).get<std::size_t>();
    };
    read("n_clients", s.n_clients);
    read("n_vehicles", s.n_vehicles);
    read("d_model", s.d_model);
    read("heads", s.heads);
    read("classical_layers", s.classical_layers);
    read("transformer_hidden", s.transformer_hidden);
    read("hidden", s.hidden);
    read("quantum_layers", s.quantum_layers);
    read("embedding_layers", s.embedding_layers);
    read("encoder_layers", s.encoder_layers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy spec: ") + e.what());
  }
}

SplitObservation split_observation(std::span<const double> obs,
                                   std::size_t n_clients,
                                   std::size_t n_vehicles) {
  const std::size_t want = 3 + 3 * n_clients + 3 * n_vehicles;
  if (obs.size() != want) {
    throw ContractError("observation has length " + std::to_string(obs.size()) +
                        ", expected " + std::to_string(want));
  }
  const std::size_t nc = 3 * (n_clients + 1);
  SplitObservation out;
  out.customers = ad::Tensor({n_clients + 1, 3},
                             std::vector<double>(obs.begin(), obs.begin() + nc));
  out.vehicles = ad::Tensor({n_vehicles, 3},
                            std::vector<double>(obs.begin() + nc, obs.end()));
  return out;
}

std::vector<double> vehicle_view(const ad::Tensor& vehicles, std::size_t v) {
  const std::size_t n = vehicles.extent(0);
  if (v >= n) throw ContractError("vehicle index out of range");
  std::vector<double> out;
  out.reserve(3 * n);
  auto put = [&](std::size_t u) {
    for (std::size_t k = 0; k < 3; ++k) out.push_back(vehicles.values[3 * u + k]);
  };
  put(v);
  for (std::size_t u = 0; u < n; ++u) {
    if (u != v) put(u);
  }
  return out;
}

bool is_quantum_parameter(const std::string& name) {
  const std::string suffix = ".angles";
  return name.size() > suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Policy::Policy(PolicySpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(derive_seed(seed, 0x706f6c696379ULL));
  init_parameters(spec_, params_, rng);
}

Policy::Policy(PolicySpec spec, ad::ParamStore params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  ad::ParamStore reference;
  Rng rng(0);
  init_parameters(spec_, reference, rng);
  for (const auto& [name, t] : reference.params()) {
    if (!params_.contains(name)) throw ConfigError("missing parameter " + name);
    if (params_.get(name).shape != t.shape) {
      throw DimensionError("parameter " + name + " has shape " +
                           ad::shape_string(params_.get(name).shape) +
                           ", expected " + ad::shape_string(t.shape));
    }
  }
  if (reference.params().size() != params_.params().size()) {
    throw ConfigError("unexpected extra parameters for this policy variant");
  }
}

GraphOutput Policy::forward(ad::Binder& bind, std::span<const double> obs,
                            ForwardTrace* trace) const {
  switch (spec_.variant) {
    case Variant::kCpn: return cpn_forward(bind, spec_, obs);
    case Variant::kHqp: return hqp_forward(bind, spec_, obs, trace);
    case Variant::kFqp: return fqp_forward(bind, spec_, obs, trace);
  }
  throw ContractError("bad variant");
}

PolicyOutput Policy::evaluate(std::span<const double> obs,
                              ForwardTrace* trace) const {
  ad::Graph g;
  ad::Binder bind(g, params_);
  GraphOutput out = forward(bind, obs, trace);
  PolicyOutput r;
  r.logits = out.logits.value();
  r.n_vehicles = out.logits.shape()[0];
  r.n_candidates = out.logits.shape()[1];
  r.value = out.value.value()[0];
  return r;
}

json policy_to_json(const Policy& policy) {
  json params = json::object();
  json angles = json::object();
  for (const auto& [name, t] : policy.params().params()) {
    if (is_quantum_parameter(name)) {
      const std::size_t L = t.extent(0), n = t.extent(1);
      json layers = json::array();
      for (std::size_t l = 0; l < L; ++l) {
        json qubits = json::array();
        for (std::size_t q = 0; q < n; ++q) {
          const std::size_t at = (l * n + q) * 3;
          qubits.push_back({t.values[at], t.values[at + 1], t.values[at + 2]});
        }
        layers.push_back(std::move(qubits));
      }
      angles[name] = std::move(layers);
    } else {
      params[name] = json{{"shape", t.shape}, {"values", t.values}};
    }
  }
  return json{{"variant", variant_name(policy.spec().variant)},
              {"spec", policy.spec()},
              {"parameters", std::move(params)},
              {"quantum_angles", std::move(angles)}};
}

Policy policy_from_json(const json& j) {
  try {
    PolicySpec spec = j.at("spec").get<PolicySpec>();
    if (parse_variant(j.at("variant").get<std::string>()) != spec.variant) {
      throw ConfigError("checkpoint variant disagrees with its spec");
    }
    ad::ParamStore store;
    for (const auto& [name, entry] : j.at("parameters").items()) {
      store.add(name, ad::Tensor(entry.at("shape").get<ad::Shape>(),
                                 entry.at("values").get<std::vector<double>>()));
    }
    for (const auto& [name, layers] : j.at("quantum_angles").items()) {
      std::vector<double> flat;
      std::size_t n = 0;
      for (const auto& qubits : layers) {
        if (n == 0) n = qubits.size();
        if (qubits.size() != n) throw DimensionError("ragged angles for " + name);
        for (const auto& triple : qubits) {
          if (triple.size() != 3) throw DimensionError("angle triple expected in " + name);
          for (const auto& a : triple) flat.push_back(a.get<double>());
        }
      }
      store.add(name, ad::Tensor({layers.size(), n, 3}, std::move(flat)));
    }
    return Policy(std::move(spec), std::move(store));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed policy checkpoint: ") + e.what());
  }
}

}  // namespace qcvrp::policy

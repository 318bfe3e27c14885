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

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "qcvrp/ad/tensor.hpp"

// Exact statevector simulation of the variational heads: amplitude-embedded
// input, L layers of per-qubit RX-RY-RZ rotations each followed by a CZ ring,
// and a truncated basis-probability readout.
//
// Qubit q is bit q of the basis index (qubit 0 is least significant).
namespace qcvrp::qsim {

using Complex = std::complex<double>;

class StateVector {
 public:
  // |0...0> on n qubits.
  explicit StateVector(std::size_t n_qubits);
  StateVector(std::size_t n_qubits, std::vector<Complex> amplitudes);

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }
  const Complex& operator[](std::size_t k) const { return amps_[k]; }

  double norm_squared() const;
  std::vector<double> probabilities() const;

  void apply_rx(std::size_t qubit, double theta);
  void apply_ry(std::size_t qubit, double theta);
  void apply_rz(std::size_t qubit, double theta);
  void apply_cz(std::size_t a, std::size_t b);

 private:
  std::size_t n_qubits_;
  std::vector<Complex> amps_;
};

// ceil(log2(d)), at least 1.
std::size_t qubits_for(std::size_t d);

// x / ||x|| in the first d amplitudes, zeros elsewhere. Throws EmbeddingError
// for a zero vector or when d exceeds 2^n_qubits.
StateVector amplitude_embed(std::span<const double> x, std::size_t n_qubits);

// Angles laid out [layer][qubit][RX, RY, RZ].
struct VqcParams {
  std::size_t layers = 1;
  std::size_t n_qubits = 1;
  std::vector<double> angles;

  VqcParams() = default;
  VqcParams(std::size_t layers, std::size_t n_qubits);
  VqcParams(std::size_t layers, std::size_t n_qubits, std::vector<double> angles);

  std::size_t size() const { return angles.size(); }
  static std::size_t index(std::size_t n_qubits, std::size_t layer,
                           std::size_t qubit, std::size_t axis) {
    return (layer * n_qubits + qubit) * 3 + axis;
  }
  std::span<const double> layer(std::size_t l) const {
    return std::span<const double>(angles).subspan(l * n_qubits * 3, n_qubits * 3);
  }
};

struct QuantumHeadOutput {
  std::vector<double> probs;
  std::size_t d_out = 0;
};

// Invoked with the state after every individual gate.
using GateObserver = std::function<void(const StateVector&)>;

// RX, RY, RZ on each qubit in turn; `layer_angles` holds n_qubits * 3 values.
void apply_rotation_layer(StateVector& state, std::span<const double> layer_angles,
                          const GateObserver& observer = {});

// CZ on (0,1), (1,2), ..., (n-2,n-1), (n-1,0). Two qubits get the single pair
// (0,1); one qubit is a no-op.
void apply_cz_ring(StateVector& state, const GateObserver& observer = {});

// Runs every layer on `state` in place.
void run_circuit(StateVector& state, const VqcParams& params,
                 const GateObserver& observer = {});

QuantumHeadOutput run_vqc(std::span<const double> x, const VqcParams& params,
                          std::size_t d_out, const GateObserver& observer = {});

struct VqcGradients {
  std::vector<double> angles;  // same layout as VqcParams::angles
  std::vector<double> input;   // d/dx through the normalization
};

// Exact gradient of sum_k upstream[k] * probs[k] by an adjoint sweep through
// the complex statevector.
VqcGradients vqc_gradients_backprop(std::span<const double> x,
                                    const VqcParams& params,
                                    std::span<const double> upstream);

// (p(theta + pi/2) - p(theta - pi/2)) / 2 for one angle and one output.
double vqc_gradient_parameter_shift(std::span<const double> x,
                                    const VqcParams& params,
                                    std::size_t angle_index,
                                    std::size_t output_index);

// Differentiable circuit node: x [d] and angles [layers, n_qubits, 3] give
// probabilities [d_out]; gradients reach both inputs through the adjoint sweep.
ad::Var vqc_node(const ad::Var& x, const ad::Var& angles, std::size_t d_out);

}  // namespace qcvrp::qsim

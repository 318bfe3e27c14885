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

#include "qcvrp/qsim/statevector.hpp"

#include <cmath>
#include <numbers>

#include "qcvrp/common/error.hpp"

namespace qcvrp::qsim {
namespace {

constexpr std::size_t kMaxQubits = 16;
constexpr Complex kI{0.0, 1.0};

enum class Axis { X = 0, Y = 1, Z = 2 };

// Applies the 2x2 matrix [[m00, m01], [m10, m11]] to `qubit`.
void apply_single(std::span<Complex> amps, std::size_t qubit, Complex m00,
                  Complex m01, Complex m10, Complex m11) {
  const std::size_t mask = std::size_t{1} << qubit;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (i & mask) continue;
    const Complex a0 = amps[i];
    const Complex a1 = amps[i | mask];
    amps[i] = m00 * a0 + m01 * a1;
    amps[i | mask] = m10 * a0 + m11 * a1;
  }
}

// exp(-i theta P / 2) for the Pauli P on `axis`.
void apply_rotation(std::span<Complex> amps, std::size_t qubit, Axis axis,
                    double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  switch (axis) {
    case Axis::X:
      apply_single(amps, qubit, c, -kI * s, -kI * s, c);
      break;
    case Axis::Y:
      apply_single(amps, qubit, c, -s, s, c);
      break;
    case Axis::Z:
      apply_single(amps, qubit, Complex(c, -s), 0.0, 0.0, Complex(c, s));
      break;
  }
}

void cz(std::span<Complex> amps, std::size_t a, std::size_t b) {
  const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if ((i & mask) == mask) amps[i] = -amps[i];
  }
}

void cz_ring(std::span<Complex> amps, std::size_t n) {
  if (n < 2) return;
  if (n == 2) {
    cz(amps, 0, 1);
    return;
  }
  for (std::size_t q = 0; q + 1 < n; ++q) cz(amps, q, q + 1);
  cz(amps, n - 1, 0);
}

// Im <lambda| P_qubit |psi>, the building block of d/dtheta.
double pauli_overlap_imag(std::span<const Complex> lambda,
                          std::span<const Complex> psi, std::size_t qubit,
                          Axis axis) {
  const std::size_t mask = std::size_t{1} << qubit;
  Complex acc = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (i & mask) continue;
    const std::size_t j = i | mask;
    Complex p0, p1;  // (P psi) at i and j
    switch (axis) {
      case Axis::X:
        p0 = psi[j];
        p1 = psi[i];
        break;
      case Axis::Y:
        p0 = -kI * psi[j];
        p1 = kI * psi[i];
        break;
      case Axis::Z:
        p0 = psi[i];
        p1 = -psi[j];
        break;
    }
    acc += std::conj(lambda[i]) * p0 + std::conj(lambda[j]) * p1;
  }
  return acc.imag();
}

void check_params(const VqcParams& params, std::size_t n_qubits) {
  if (params.n_qubits != n_qubits) {
    throw DimensionError("circuit parameters for " +
                         std::to_string(params.n_qubits) +
                         " qubits applied to a " + std::to_string(n_qubits) +
                         "-qubit state");
  }
  if (params.angles.size() != params.layers * params.n_qubits * 3) {
    throw DimensionError("angle array of length " +
                         std::to_string(params.angles.size()) + " for " +
                         std::to_string(params.layers) + " layers on " +
                         std::to_string(params.n_qubits) + " qubits");
  }
}

std::vector<double> truncate_probs(const StateVector& s, std::size_t d_out) {
  auto p = s.probabilities();
  p.resize(d_out);
  return p;
}

}  // namespace

StateVector::StateVector(std::size_t n_qubits)
    : n_qubits_(n_qubits), amps_() {
  if (n_qubits == 0 || n_qubits > kMaxQubits) {
    throw ContractError("qubit count " + std::to_string(n_qubits) +
                        " outside [1, 16]");
  }
  amps_.assign(std::size_t{1} << n_qubits, 0.0);
  amps_[0] = 1.0;
}

StateVector::StateVector(std::size_t n_qubits, std::vector<Complex> amplitudes)
    : StateVector(n_qubits) {
  if (amplitudes.size() != amps_.size()) {
    throw DimensionError(std::to_string(amplitudes.size()) +
                         " amplitudes for " + std::to_string(n_qubits) +
                         " qubits");
  }
  amps_ = std::move(amplitudes);
}

double StateVector::norm_squared() const {
  double n = 0.0;
  for (const auto& a : amps_) n += std::norm(a);
  return n;
}

std::vector<double> StateVector::probabilities() const {
  std::vector<double> p(amps_.size());
  for (std::size_t k = 0; k < amps_.size(); ++k) p[k] = std::norm(amps_[k]);
  return p;
}

void StateVector::apply_rx(std::size_t q, double theta) {
  apply_rotation(amps_, q, Axis::X, theta);
}
void StateVector::apply_ry(std::size_t q, double theta) {
  apply_rotation(amps_, q, Axis::Y, theta);
}
void StateVector::apply_rz(std::size_t q, double theta) {
  apply_rotation(amps_, q, Axis::Z, theta);
}
void StateVector::apply_cz(std::size_t a, std::size_t b) { cz(amps_, a, b); }

std::size_t qubits_for(std::size_t d) {
  std::size_t n = 1;
  while ((std::size_t{1} << n) < d) ++n;
  return n;
}

StateVector amplitude_embed(std::span<const double> x, std::size_t n_qubits) {
  if (n_qubits == 0 || n_qubits > kMaxQubits) {
    throw ContractError("qubit count " + std::to_string(n_qubits) +
                        " outside [1, 16]");
  }
  if (x.size() > (std::size_t{1} << n_qubits)) {
    throw EmbeddingError("cannot embed " + std::to_string(x.size()) +
                         " values in " + std::to_string(n_qubits) + " qubits");
  }
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw EmbeddingError("amplitude embedding of a zero vector");
  std::vector<Complex> amps(std::size_t{1} << n_qubits, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) amps[i] = x[i] / norm;
  return StateVector(n_qubits, std::move(amps));
}

VqcParams::VqcParams(std::size_t l, std::size_t n)
    : layers(l), n_qubits(n), angles(l * n * 3, 0.0) {}

VqcParams::VqcParams(std::size_t l, std::size_t n, std::vector<double> a)
    : layers(l), n_qubits(n), angles(std::move(a)) {
  check_params(*this, n);
}

void apply_rotation_layer(StateVector& state, std::span<const double> layer_angles,
                          const GateObserver& observer) {
  const std::size_t n = state.n_qubits();
  if (layer_angles.size() != n * 3) {
    throw DimensionError("rotation layer with " +
                         std::to_string(layer_angles.size()) + " angles on " +
                         std::to_string(n) + " qubits");
  }
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t k = 0; k < 3; ++k) {
      apply_rotation(state.amplitudes(), q, static_cast<Axis>(k),
                     layer_angles[q * 3 + k]);
      if (observer) observer(state);
    }
  }
}

void apply_cz_ring(StateVector& state, const GateObserver& observer) {
  const std::size_t n = state.n_qubits();
  if (n < 2) return;
  auto amps = state.amplitudes();
  if (n == 2) {
    cz(amps, 0, 1);
    if (observer) observer(state);
    return;
  }
  for (std::size_t q = 0; q < n; ++q) {
    cz(amps, q, (q + 1) % n);
    if (observer) observer(state);
  }
}

void run_circuit(StateVector& state, const VqcParams& params,
                 const GateObserver& observer) {
  check_params(params, state.n_qubits());
  for (std::size_t l = 0; l < params.layers; ++l) {
    apply_rotation_layer(state, params.layer(l), observer);
    apply_cz_ring(state, observer);
  }
}

QuantumHeadOutput run_vqc(std::span<const double> x, const VqcParams& params,
                          std::size_t d_out, const GateObserver& observer) {
  if (d_out > (std::size_t{1} << params.n_qubits)) {
    throw ContractError("readout of " + std::to_string(d_out) +
                        " probabilities from " +
                        std::to_string(params.n_qubits) + " qubits");
  }
  StateVector state = amplitude_embed(x, params.n_qubits);
  if (observer) observer(state);
  run_circuit(state, params, observer);
  return QuantumHeadOutput{truncate_probs(state, d_out), d_out};
}

VqcGradients vqc_gradients_backprop(std::span<const double> x,
                                    const VqcParams& params,
                                    std::span<const double> upstream) {
  const std::size_t n = params.n_qubits;
  if (upstream.size() > (std::size_t{1} << n)) {
    throw ContractError("upstream gradient longer than the state dimension");
  }
  StateVector psi = amplitude_embed(x, n);
  run_circuit(psi, params);

  // lambda = dL/d(Re psi) + i dL/d(Im psi) with L = sum_k u_k |psi_k|^2.
  std::vector<Complex> lambda(psi.dim(), 0.0);
  for (std::size_t k = 0; k < upstream.size(); ++k) {
    lambda[k] = 2.0 * upstream[k] * psi[k];
  }

  VqcGradients out;
  out.angles.assign(params.size(), 0.0);
  auto amps = psi.amplitudes();
  for (std::size_t l = params.layers; l-- > 0;) {
    cz_ring(amps, n);
    cz_ring(lambda, n);
    for (std::size_t q = n; q-- > 0;) {
      for (std::size_t k = 3; k-- > 0;) {
        const auto axis = static_cast<Axis>(k);
        const std::size_t idx = VqcParams::index(n, l, q, k);
        out.angles[idx] = 0.5 * pauli_overlap_imag(lambda, amps, q, axis);
        apply_rotation(amps, q, axis, -params.angles[idx]);
        apply_rotation(lambda, q, axis, -params.angles[idx]);
      }
    }
  }

  // Back through phi = x / ||x||; phi is real, so only Re(lambda) matters.
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += (x[i] / norm) * lambda[i].real();
  out.input.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.input[i] = (lambda[i].real() - (x[i] / norm) * dot) / norm;
  }
  return out;
}

double vqc_gradient_parameter_shift(std::span<const double> x,
                                    const VqcParams& params,
                                    std::size_t angle_index,
                                    std::size_t output_index) {
  if (angle_index >= params.size()) {
    throw ContractError("angle index " + std::to_string(angle_index) +
                        " out of range");
  }
  if (output_index >= (std::size_t{1} << params.n_qubits)) {
    throw ContractError("output index " + std::to_string(output_index) +
                        " out of range");
  }
  const double shift = std::numbers::pi / 2.0;
  VqcParams plus = params;
  VqcParams minus = params;
  plus.angles[angle_index] += shift;
  minus.angles[angle_index] -= shift;
  const std::size_t d = output_index + 1;
  const double p_plus = run_vqc(x, plus, d).probs[output_index];
  const double p_minus = run_vqc(x, minus, d).probs[output_index];
  return 0.5 * (p_plus - p_minus);
}

ad::Var vqc_node(const ad::Var& x, const ad::Var& angles, std::size_t d_out) {
  if (x.graph() != angles.graph()) {
    throw ContractError("circuit input and angles belong to different graphs");
  }
  const ad::Shape& as = angles.shape();
  if (as.size() != 3 || as[2] != 3) {
    throw DimensionError("circuit angles must be [layers, qubits, 3], got " +
                         ad::shape_string(as));
  }
  if (x.shape().size() != 1) {
    throw DimensionError("circuit input must be a vector, got " +
                         ad::shape_string(x.shape()));
  }
  const std::size_t layers = as[0], n = as[1];
  const VqcParams params(layers, n, angles.value());
  auto out = run_vqc(x.value(), params, d_out);
  const auto ix = x.id(), ia = angles.id();
  return x.graph()->record(
      ad::Tensor::vector(std::move(out.probs)), {ix, ia},
      [ix, ia, layers, n](ad::Graph& g, std::size_t self) {
        const VqcParams p(layers, n, g.value(ia).values);
        const auto grads = vqc_gradients_backprop(g.value(ix).values, p, g.grad(self));
        if (double* gx = g.grad_buffer(ix)) {
          for (std::size_t i = 0; i < grads.input.size(); ++i) gx[i] += grads.input[i];
        }
        if (double* ga = g.grad_buffer(ia)) {
          for (std::size_t i = 0; i < grads.angles.size(); ++i) ga[i] += grads.angles[i];
        }
      });
}

}  // namespace qcvrp::qsim

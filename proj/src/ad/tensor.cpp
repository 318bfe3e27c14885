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

#include "qcvrp/ad/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "qcvrp/common/error.hpp"

namespace qcvrp::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  if (numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " holds " +
                         std::to_string(numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
}

Tensor Tensor::zeros(Shape s) {
  const auto n = numel(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  Shape s{v.size()};
  return Tensor(std::move(s), std::move(v));
}

double Tensor::item() const {
  if (values.size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(shape));
  }
  return values[0];
}

const Tensor& Var::tensor() const { return graph_->value(id_); }

bool Var::requires_grad() const { return graph_->requires_grad(id_); }

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Graph::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::vector<std::size_t> parents,
                  BackwardFn fn) {
  bool needs = false;
  for (auto p : parents) needs = needs || nodes_.at(p).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, std::move(parents),
                        needs ? std::move(fn) : BackwardFn{}, needs});
  return Var(this, nodes_.size() - 1);
}

double* Graph::grad_buffer(std::size_t id) {
  auto& node = nodes_.at(id);
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad.data();
}

void Graph::backward(const Var& loss) {
  if (loss.graph() != this) {
    throw ContractError("backward() on a variable from another graph");
  }
  if (loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(loss.shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  if (!requires_grad(loss.id())) return;
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
    node.backward(*this, i);
  }
}

std::vector<double> Graph::grad(const Var& v) const {
  const auto& node = nodes_.at(v.id());
  if (node.grad.empty()) return std::vector<double>(node.value.size(), 0.0);
  return node.grad;
}

}  // namespace qcvrp::ad

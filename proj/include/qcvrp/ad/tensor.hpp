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
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace qcvrp::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major value buffer. Detached from any graph.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> values);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t extent(std::size_t axis) const { return shape.at(axis); }
  double item() const;
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph
// that produced it is alive.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }

  const Tensor& tensor() const;
  const Shape& shape() const { return tensor().shape; }
  const std::vector<double>& value() const { return tensor().values; }
  std::size_t size() const { return tensor().size(); }
  double item() const { return tensor().item(); }
  bool requires_grad() const;

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order, so backward() is a single reverse sweep.
class Graph {
 public:
  // Called during the reverse sweep with the node's own gradient available
  // through grad(); it accumulates into parents via grad_buffer().
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that never receives a gradient.
  Var constant(Tensor value);
  // Leaf that receives a gradient.
  Var variable(Tensor value);

  // Appends an interior node. The node requires a gradient iff any parent does.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn);

  void backward(const Var& loss);

  // Gradient of the last backward() target with respect to `v`. Zeros if
  // `v` was unreachable.
  std::vector<double> grad(const Var& v) const;

  // Accessors used by op implementations.
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const std::vector<double>& grad(std::size_t id) const {
    return nodes_.at(id).grad;
  }
  // Accumulation buffer for `id`, or nullptr if the node needs no gradient.
  double* grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const {
    return nodes_.at(id).requires_grad;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

}  // namespace qcvrp::ad

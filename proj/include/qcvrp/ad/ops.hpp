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
#include <vector>

#include "qcvrp/ad/tensor.hpp"

// Differentiable primitives. Every op appends one node to the graph of its
// inputs; all inputs must come from the same graph.
namespace qcvrp::ad {

// Row-major feasibility mask, one entry per logit. Nonzero means valid.
using Mask = std::vector<std::uint8_t>;

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var relu(const Var& a);
Var square(const Var& a);

// Sum of every entry, as a scalar.
Var sum(const Var& a);
// Mean over every axis but the last: [..., F] -> [F].
Var mean_rows(const Var& a);

Var reshape(const Var& a, Shape shape);
// Slice `index` along the leading axis: [R, ...] -> [...].
Var row(const Var& a, std::size_t index);
// Stack equally shaped tensors along a new leading axis.
Var stack(const std::vector<Var>& parts);
// Concatenate along the last axis; leading extents must agree.
Var concat_last(const std::vector<Var>& parts);
// out[v, s, :] = a[v, :] ++ b[s, :]; shapes [V, Fa] x [S, Fb] -> [V, S, Fa+Fb].
Var pair_concat(const Var& a, const Var& b);

// result[..., j] = sum_i x[..., i] * weight[i, j] + bias[j].
Var linear(const Var& x, const Var& weight, const Var& bias);

// Batched product [B, M, K] x [B, K, N] -> [B, M, N]. With transpose_b the
// second operand is read as [B, N, K].
Var bmm(const Var& a, const Var& b, bool transpose_b = false);

// [B, T, D] -> [B*heads, T, D/heads] and back.
Var split_heads(const Var& x, std::size_t heads);
Var merge_heads(const Var& x, std::size_t heads);

// Softmax over the last axis.
Var softmax(const Var& logits);
// Masked entries come out as exact zeros. Throws InfeasibleError when a
// slice has no valid entry.
Var masked_softmax(const Var& logits, const Mask& mask);
// Masked entries are -infinity and carry no gradient.
Var masked_log_softmax(const Var& logits, const Mask& mask);
// Entropy of each masked distribution: [..., S] -> [...].
Var masked_entropy(const Var& logits, const Mask& mask);

// out[r] = x[r, index[r]] for x of shape [R, S].
Var pick(const Var& x, const std::vector<std::size_t>& index);

// Normalization over the last axis with learned gain and shift.
Var layer_norm(const Var& x, const Var& gain, const Var& shift,
               double eps = 1e-5);

}  // namespace qcvrp::ad

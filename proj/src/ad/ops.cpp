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

#include "qcvrp/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcvrp/common/error.hpp"

namespace qcvrp::ad {
namespace {

Graph& graph_of(const Var& v) {
  if (!v.valid()) throw ContractError("operation on an empty variable");
  return *v.graph();
}

Graph& same_graph(const Var& a, const Var& b) {
  if (a.graph() != b.graph()) {
    throw ContractError("operands belong to different graphs");
  }
  return graph_of(a);
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

std::size_t last_extent(const Shape& s) { return s.empty() ? 1 : s.back(); }

void check_mask(const char* op, const Var& x, const Mask& mask) {
  if (mask.size() != x.size()) {
    throw DimensionError(std::string(op) + ": mask of length " +
                         std::to_string(mask.size()) + " for logits " +
                         shape_string(x.shape()));
  }
}

// Per-row masked softmax; fills `p` and returns log-normalizers.
std::vector<double> masked_probs(const std::vector<double>& x,
                                 const Mask& mask, std::size_t width,
                                 std::vector<double>& p) {
  const std::size_t rows = width ? x.size() / width : 0;
  p.assign(x.size(), 0.0);
  std::vector<double> log_z(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t off = r * width;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < width; ++s) {
      if (mask[off + s]) mx = std::max(mx, x[off + s]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw InfeasibleError("no valid entry in row " + std::to_string(r) +
                            " of the action mask");
    }
    double z = 0.0;
    for (std::size_t s = 0; s < width; ++s) {
      if (mask[off + s]) {
        p[off + s] = std::exp(x[off + s] - mx);
        z += p[off + s];
      }
    }
    for (std::size_t s = 0; s < width; ++s) p[off + s] /= z;
    log_z[r] = mx + std::log(z);
  }
  return log_z;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  auto& g = same_graph(a, b);
  require_same_shape("add", a, b);
  Tensor out = a.tensor();
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    for (auto id : {ia, ib}) {
      if (double* gx = g.grad_buffer(id)) {
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  auto& g = same_graph(a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.tensor();
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (double* ga = g.grad_buffer(ia)) {
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (double* gb = g.grad_buffer(ib)) {
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  auto& g = same_graph(a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.tensor();
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    const auto& av = g.value(ia).values;
    const auto& bv = g.value(ib).values;
    if (double* ga = g.grad_buffer(ia)) {
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (double* gb = g.grad_buffer(ib)) {
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var scale(const Var& a, double c) {
  auto& g = graph_of(a);
  Tensor out = a.tensor();
  for (auto& v : out.values) v *= c;
  const auto ia = a.id();
  return g.record(std::move(out), {ia}, [ia, c](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (double* gx = g.grad_buffer(ia)) {
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += c * gy[i];
    }
  });
}

Var relu(const Var& a) {
  auto& g = graph_of(a);
  Tensor out = a.tensor();
  for (auto& v : out.values) v = v > 0.0 ? v : 0.0;
  const auto ia = a.id();
  return g.record(std::move(out), {ia}, [ia](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    const auto& xv = g.value(ia).values;
    if (double* gx = g.grad_buffer(ia)) {
      for (std::size_t i = 0; i < gy.size(); ++i) {
        if (xv[i] > 0.0) gx[i] += gy[i];
      }
    }
  });
}

Var square(const Var& a) {
  auto& g = graph_of(a);
  Tensor out = a.tensor();
  for (auto& v : out.values) v = v * v;
  const auto ia = a.id();
  return g.record(std::move(out), {ia}, [ia](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    const auto& xv = g.value(ia).values;
    if (double* gx = g.grad_buffer(ia)) {
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += 2.0 * xv[i] * gy[i];
    }
  });
}

Var sum(const Var& a) {
  auto& g = graph_of(a);
  double total = 0.0;
  for (double v : a.value()) total += v;
  const auto ia = a.id();
  return g.record(Tensor::scalar(total), {ia}, [ia](Graph& g, std::size_t self) {
    const double gy = g.grad(self)[0];
    if (double* gx = g.grad_buffer(ia)) {
      const auto n = g.value(ia).size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += gy;
    }
  });
}

Var mean_rows(const Var& a) {
  auto& g = graph_of(a);
  const std::size_t width = last_extent(a.shape());
  const std::size_t rows = a.size() / width;
  Tensor out = Tensor::zeros({width});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < width; ++j) {
      out.values[j] += a.value()[r * width + j];
    }
  }
  for (auto& v : out.values) v /= static_cast<double>(rows);
  const auto ia = a.id();
  return g.record(std::move(out), {ia}, [ia, rows, width](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (double* gx = g.grad_buffer(ia)) {
      const double inv = 1.0 / static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < width; ++j) gx[r * width + j] += gy[j] * inv;
      }
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  auto& g = graph_of(a);
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape " + shape_string(a.shape()) + " to " +
                         shape_string(shape));
  }
  Tensor out(std::move(shape), a.value());
  const auto ia = a.id();
  return g.record(std::move(out), {ia}, [ia](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (double* gx = g.grad_buffer(ia)) {
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
  });
}

Var row(const Var& a, std::size_t index) {
  auto& g = graph_of(a);
  if (a.shape().empty() || index >= a.shape()[0]) {
    throw ContractError("row " + std::to_string(index) + " of tensor " +
                        shape_string(a.shape()));
  }
  Shape rest(a.shape().begin() + 1, a.shape().end());
  const std::size_t width = numel(rest);
  const std::size_t off = index * width;
  std::vector<double> vals(a.value().begin() + off,
                           a.value().begin() + off + width);
  const auto ia = a.id();
  return g.record(Tensor(std::move(rest), std::move(vals)), {ia},
                  [ia, off](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    if (double* gx = g.grad_buffer(ia)) {
                      for (std::size_t i = 0; i < gy.size(); ++i) gx[off + i] += gy[i];
                    }
                  });
}

Var stack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("stack of zero tensors");
  auto& g = graph_of(parts[0]);
  const Shape inner = parts[0].shape();
  std::vector<std::size_t> ids;
  std::vector<double> vals;
  vals.reserve(parts.size() * numel(inner));
  for (const auto& p : parts) {
    if (p.graph() != &g) throw ContractError("stack across graphs");
    if (p.shape() != inner) {
      throw DimensionError("stack: shape " + shape_string(p.shape()) +
                           " vs " + shape_string(inner));
    }
    ids.push_back(p.id());
    vals.insert(vals.end(), p.value().begin(), p.value().end());
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  const std::size_t width = numel(inner);
  auto parents = ids;
  return g.record(Tensor(std::move(shape), std::move(vals)), std::move(parents),
                  [ids, width](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (double* gx = g.grad_buffer(ids[k])) {
                        for (std::size_t i = 0; i < width; ++i) gx[i] += gy[k * width + i];
                      }
                    }
                  });
}

Var concat_last(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  auto& g = graph_of(parts[0]);
  const Shape& s0 = parts[0].shape();
  if (s0.empty()) throw DimensionError("concat of scalars");
  const Shape lead(s0.begin(), s0.end() - 1);
  const std::size_t rows = numel(lead);
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.graph() != &g) throw ContractError("concat across graphs");
    const Shape& s = p.shape();
    if (s.empty() || Shape(s.begin(), s.end() - 1) != lead) {
      throw DimensionError("concat: shape " + shape_string(s) + " vs " +
                           shape_string(s0));
    }
    ids.push_back(p.id());
    widths.push_back(s.back());
    total += s.back();
  }
  std::vector<double> vals(rows * total);
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pv.begin() + r * widths[k], widths[k],
                  vals.begin() + r * total + col);
    }
    col += widths[k];
  }
  Shape shape = lead;
  shape.push_back(total);
  auto parents = ids;
  return g.record(Tensor(std::move(shape), std::move(vals)), std::move(parents),
                  [ids, widths, rows, total](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    std::size_t col = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (double* gx = g.grad_buffer(ids[k])) {
                        for (std::size_t r = 0; r < rows; ++r) {
                          for (std::size_t j = 0; j < widths[k]; ++j) {
                            gx[r * widths[k] + j] += gy[r * total + col + j];
                          }
                        }
                      }
                      col += widths[k];
                    }
                  });
}

Var pair_concat(const Var& a, const Var& b) {
  auto& g = same_graph(a, b);
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw DimensionError("pair_concat expects rank-2 operands, got " +
                         shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const std::size_t nv = a.shape()[0], fa = a.shape()[1];
  const std::size_t ns = b.shape()[0], fb = b.shape()[1];
  const std::size_t w = fa + fb;
  Tensor out = Tensor::zeros({nv, ns, w});
  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t s = 0; s < ns; ++s) {
      double* dst = out.values.data() + (v * ns + s) * w;
      std::copy_n(a.value().begin() + v * fa, fa, dst);
      std::copy_n(b.value().begin() + s * fb, fb, dst + fa);
    }
  }
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib},
                  [ia, ib, nv, ns, fa, fb, w](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    double* ga = g.grad_buffer(ia);
                    double* gb = g.grad_buffer(ib);
                    for (std::size_t v = 0; v < nv; ++v) {
                      for (std::size_t s = 0; s < ns; ++s) {
                        const double* src = gy.data() + (v * ns + s) * w;
                        if (ga) for (std::size_t j = 0; j < fa; ++j) ga[v * fa + j] += src[j];
                        if (gb) for (std::size_t j = 0; j < fb; ++j) gb[s * fb + j] += src[fa + j];
                      }
                    }
                  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  auto& g = same_graph(x, weight);
  same_graph(x, bias);
  const Shape& ws = weight.shape();
  if (ws.size() != 2 || x.shape().empty() || x.shape().back() != ws[0] ||
      bias.shape() != Shape{ws[1]}) {
    throw DimensionError("linear: input " + shape_string(x.shape()) +
                         " with weight " + shape_string(ws) + " and bias " +
                         shape_string(bias.shape()));
  }
  const std::size_t in = ws[0], out_w = ws[1];
  const std::size_t rows = x.size() / in;
  Shape shape = x.shape();
  shape.back() = out_w;
  Tensor out = Tensor::zeros(shape);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* y = out.values.data() + r * out_w;
    std::copy(bv.begin(), bv.end(), y);
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xv[r * in + i];
      if (xi == 0.0) continue;
      const double* wrow = wv.data() + i * out_w;
      for (std::size_t j = 0; j < out_w; ++j) y[j] += xi * wrow[j];
    }
  }
  const auto ix = x.id(), iw = weight.id(), ib = bias.id();
  return g.record(std::move(out), {ix, iw, ib},
                  [ix, iw, ib, in, out_w, rows](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    const auto& xv = g.value(ix).values;
                    const auto& wv = g.value(iw).values;
                    if (double* gx = g.grad_buffer(ix)) {
                      for (std::size_t r = 0; r < rows; ++r) {
                        const double* gr = gy.data() + r * out_w;
                        for (std::size_t i = 0; i < in; ++i) {
                          const double* wrow = wv.data() + i * out_w;
                          double acc = 0.0;
                          for (std::size_t j = 0; j < out_w; ++j) acc += gr[j] * wrow[j];
                          gx[r * in + i] += acc;
                        }
                      }
                    }
                    if (double* gw = g.grad_buffer(iw)) {
                      for (std::size_t r = 0; r < rows; ++r) {
                        const double* gr = gy.data() + r * out_w;
                        for (std::size_t i = 0; i < in; ++i) {
                          const double xi = xv[r * in + i];
                          if (xi == 0.0) continue;
                          double* gwrow = gw + i * out_w;
                          for (std::size_t j = 0; j < out_w; ++j) gwrow[j] += xi * gr[j];
                        }
                      }
                    }
                    if (double* gb = g.grad_buffer(ib)) {
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t j = 0; j < out_w; ++j) gb[j] += gy[r * out_w + j];
                      }
                    }
                  });
}

Var bmm(const Var& a, const Var& b, bool transpose_b) {
  auto& g = same_graph(a, b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] ||
      as[2] != (transpose_b ? bs[2] : bs[1])) {
    throw DimensionError("bmm: " + shape_string(as) + " x " +
                         shape_string(bs) + (transpose_b ? "^T" : ""));
  }
  const std::size_t nb = as[0], m = as[1], k = as[2];
  const std::size_t n = transpose_b ? bs[1] : bs[2];
  // Element (kk, nn) of the right operand for batch `bb`.
  auto bidx = [=](std::size_t bb, std::size_t kk, std::size_t nn) {
    return transpose_b ? (bb * n + nn) * k + kk : (bb * k + kk) * n + nn;
  };
  Tensor out = Tensor::zeros({nb, m, n});
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t bb = 0; bb < nb; ++bb) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t kk = 0; kk < k; ++kk) {
          acc += av[(bb * m + i) * k + kk] * bv[bidx(bb, kk, j)];
        }
        out.values[(bb * m + i) * n + j] = acc;
      }
    }
  }
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib},
                  [ia, ib, nb, m, k, n, bidx](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    const auto& av = g.value(ia).values;
                    const auto& bv = g.value(ib).values;
                    double* ga = g.grad_buffer(ia);
                    double* gb = g.grad_buffer(ib);
                    for (std::size_t bb = 0; bb < nb; ++bb) {
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < n; ++j) {
                          const double gij = gy[(bb * m + i) * n + j];
                          if (gij == 0.0) continue;
                          for (std::size_t kk = 0; kk < k; ++kk) {
                            if (ga) ga[(bb * m + i) * k + kk] += gij * bv[bidx(bb, kk, j)];
                            if (gb) gb[bidx(bb, kk, j)] += gij * av[(bb * m + i) * k + kk];
                          }
                        }
                      }
                    }
                  });
}

Var split_heads(const Var& x, std::size_t heads) {
  auto& g = graph_of(x);
  const Shape& s = x.shape();
  if (s.size() != 3 || heads == 0 || s[2] % heads != 0) {
    throw ConfigError("split_heads: model width of " + shape_string(s) +
                      " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  const std::size_t nb = s[0], t = s[1], d = s[2], dh = d / heads;
  Tensor out = Tensor::zeros({nb * heads, t, dh});
  // out[(b*H+h), t, e] = x[b, t, h*dh + e]
  auto src = [=](std::size_t b, std::size_t h, std::size_t tt, std::size_t e) {
    return (b * t + tt) * d + h * dh + e;
  };
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t tt = 0; tt < t; ++tt)
        for (std::size_t e = 0; e < dh; ++e)
          out.values[((b * heads + h) * t + tt) * dh + e] = x.value()[src(b, h, tt, e)];
  const auto ix = x.id();
  return g.record(std::move(out), {ix},
                  [ix, nb, heads, t, dh, src](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    if (double* gx = g.grad_buffer(ix)) {
                      for (std::size_t b = 0; b < nb; ++b)
                        for (std::size_t h = 0; h < heads; ++h)
                          for (std::size_t tt = 0; tt < t; ++tt)
                            for (std::size_t e = 0; e < dh; ++e)
                              gx[src(b, h, tt, e)] += gy[((b * heads + h) * t + tt) * dh + e];
                    }
                  });
}

Var merge_heads(const Var& x, std::size_t heads) {
  auto& g = graph_of(x);
  const Shape& s = x.shape();
  if (s.size() != 3 || heads == 0 || s[0] % heads != 0) {
    throw DimensionError("merge_heads: " + shape_string(s) + " with " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t nb = s[0] / heads, t = s[1], dh = s[2], d = dh * heads;
  Tensor out = Tensor::zeros({nb, t, d});
  auto dst = [=](std::size_t b, std::size_t h, std::size_t tt, std::size_t e) {
    return (b * t + tt) * d + h * dh + e;
  };
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t tt = 0; tt < t; ++tt)
        for (std::size_t e = 0; e < dh; ++e)
          out.values[dst(b, h, tt, e)] = x.value()[((b * heads + h) * t + tt) * dh + e];
  const auto ix = x.id();
  return g.record(std::move(out), {ix},
                  [ix, nb, heads, t, dh, dst](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    if (double* gx = g.grad_buffer(ix)) {
                      for (std::size_t b = 0; b < nb; ++b)
                        for (std::size_t h = 0; h < heads; ++h)
                          for (std::size_t tt = 0; tt < t; ++tt)
                            for (std::size_t e = 0; e < dh; ++e)
                              gx[((b * heads + h) * t + tt) * dh + e] += gy[dst(b, h, tt, e)];
                    }
                  });
}

Var masked_softmax(const Var& logits, const Mask& mask) {
  auto& g = graph_of(logits);
  check_mask("masked_softmax", logits, mask);
  const std::size_t width = last_extent(logits.shape());
  std::vector<double> p;
  masked_probs(logits.value(), mask, width, p);
  const auto ix = logits.id();
  Tensor out(logits.shape(), std::move(p));
  return g.record(std::move(out), {ix}, [ix, width](Graph& g, std::size_t self) {
    const auto& gy = g.grad(self);
    const auto& y = g.value(self).values;
    if (double* gx = g.grad_buffer(ix)) {
      for (std::size_t off = 0; off < y.size(); off += width) {
        double dot = 0.0;
        for (std::size_t s = 0; s < width; ++s) dot += gy[off + s] * y[off + s];
        for (std::size_t s = 0; s < width; ++s) {
          gx[off + s] += y[off + s] * (gy[off + s] - dot);
        }
      }
    }
  });
}

Var softmax(const Var& logits) {
  return masked_softmax(logits, Mask(logits.size(), 1));
}

Var masked_log_softmax(const Var& logits, const Mask& mask) {
  auto& g = graph_of(logits);
  check_mask("masked_log_softmax", logits, mask);
  const std::size_t width = last_extent(logits.shape());
  std::vector<double> p;
  const auto log_z = masked_probs(logits.value(), mask, width, p);
  Tensor out = Tensor::zeros(logits.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = mask[i] ? logits.value()[i] - log_z[i / width]
                            : -std::numeric_limits<double>::infinity();
  }
  const auto ix = logits.id();
  return g.record(std::move(out), {ix},
                  [ix, width, mask, p = std::move(p)](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    if (double* gx = g.grad_buffer(ix)) {
                      for (std::size_t off = 0; off < p.size(); off += width) {
                        double total = 0.0;
                        for (std::size_t s = 0; s < width; ++s) {
                          if (mask[off + s]) total += gy[off + s];
                        }
                        for (std::size_t s = 0; s < width; ++s) {
                          if (mask[off + s]) gx[off + s] += gy[off + s] - p[off + s] * total;
                        }
                      }
                    }
                  });
}

Var masked_entropy(const Var& logits, const Mask& mask) {
  auto& g = graph_of(logits);
  check_mask("masked_entropy", logits, mask);
  const std::size_t width = last_extent(logits.shape());
  std::vector<double> p;
  const auto log_z = masked_probs(logits.value(), mask, width, p);
  const std::size_t rows = log_z.size();
  // log p per valid entry, reused by the backward pass.
  std::vector<double> logp(p.size(), 0.0);
  std::vector<double> h(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t s = 0; s < width; ++s) {
      const std::size_t i = r * width + s;
      if (!mask[i]) continue;
      logp[i] = logits.value()[i] - log_z[r];
      h[r] -= p[i] * logp[i];
    }
  }
  Shape shape(logits.shape().begin(), logits.shape().end() - 1);
  const auto ix = logits.id();
  return g.record(Tensor(std::move(shape), h), {ix},
                  [ix, width, mask, p = std::move(p), logp = std::move(logp),
                   h](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    if (double* gx = g.grad_buffer(ix)) {
                      for (std::size_t r = 0; r < h.size(); ++r) {
                        for (std::size_t s = 0; s < width; ++s) {
                          const std::size_t i = r * width + s;
                          if (mask[i]) gx[i] -= gy[r] * p[i] * (logp[i] + h[r]);
                        }
                      }
                    }
                  });
}

Var pick(const Var& x, const std::vector<std::size_t>& index) {
  auto& g = graph_of(x);
  const Shape& s = x.shape();
  if (s.size() != 2 || index.size() != s[0]) {
    throw DimensionError("pick: " + std::to_string(index.size()) +
                         " indices for tensor " + shape_string(s));
  }
  const std::size_t width = s[1];
  std::vector<double> vals(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= width) {
      throw ContractError("pick: index " + std::to_string(index[r]) +
                          " out of range " + std::to_string(width));
    }
    vals[r] = x.value()[r * width + index[r]];
  }
  const auto ix = x.id();
  return g.record(Tensor::vector(std::move(vals)), {ix},
                  [ix, width, index](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    if (double* gx = g.grad_buffer(ix)) {
                      for (std::size_t r = 0; r < index.size(); ++r) {
                        gx[r * width + index[r]] += gy[r];
                      }
                    }
                  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& shift, double eps) {
  auto& g = same_graph(x, gain);
  same_graph(x, shift);
  const std::size_t width = last_extent(x.shape());
  if (gain.shape() != Shape{width} || shift.shape() != Shape{width}) {
    throw DimensionError("layer_norm: input " + shape_string(x.shape()) +
                         " with gain " + shape_string(gain.shape()) +
                         " and shift " + shape_string(shift.shape()));
  }
  const std::size_t rows = x.size() / width;
  std::vector<double> xhat(x.size()), inv_std(rows);
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * width;
    double mean = 0.0;
    for (std::size_t j = 0; j < width; ++j) mean += xr[j];
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(width);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t i = r * width + j;
      xhat[i] = (xr[j] - mean) * inv_std[r];
      out.values[i] = gain.value()[j] * xhat[i] + shift.value()[j];
    }
  }
  const auto ix = x.id(), ig = gain.id(), ib = shift.id();
  return g.record(std::move(out), {ix, ig, ib},
                  [ix, ig, ib, width, rows, xhat = std::move(xhat),
                   inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
                    const auto& gy = g.grad(self);
                    const auto& gv = g.value(ig).values;
                    double* gx = g.grad_buffer(ix);
                    double* gg = g.grad_buffer(ig);
                    double* gb = g.grad_buffer(ib);
                    const double n = static_cast<double>(width);
                    for (std::size_t r = 0; r < rows; ++r) {
                      const std::size_t off = r * width;
                      double mean_g = 0.0, mean_gx = 0.0;
                      for (std::size_t j = 0; j < width; ++j) {
                        const double gh = gy[off + j] * gv[j];
                        mean_g += gh;
                        mean_gx += gh * xhat[off + j];
                        if (gg) gg[j] += gy[off + j] * xhat[off + j];
                        if (gb) gb[j] += gy[off + j];
                      }
                      if (!gx) continue;
                      mean_g /= n;
                      mean_gx /= n;
                      for (std::size_t j = 0; j < width; ++j) {
                        const double gh = gy[off + j] * gv[j];
                        gx[off + j] += inv_std[r] * (gh - mean_g - xhat[off + j] * mean_gx);
                      }
                    }
                  });
}

}  // namespace qcvrp::ad

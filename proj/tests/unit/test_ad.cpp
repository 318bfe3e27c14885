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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "qcvrp/ad/nn.hpp"
#include "qcvrp/ad/ops.hpp"
#include "qcvrp/ad/optim.hpp"
#include "qcvrp/common/error.hpp"

using namespace qcvrp;
using namespace qcvrp::ad;
using qcvrp::testing::finite_difference;
using qcvrp::testing::random_tensor;
using qcvrp::testing::relative_error;

TEST_CASE("linear") {
  Graph g;
  SUBCASE("identity map") {
    auto y = linear(g.constant(Tensor::vector({1, 2})),
                    g.constant(Tensor({2, 2}, {1, 0, 0, 1})),
                    g.constant(Tensor::vector({0, 0})));
    CHECK(y.value() == std::vector<double>{1, 2});
  }
  SUBCASE("hand evaluation") {
    auto y = linear(g.constant(Tensor::vector({1, 1})),
                    g.constant(Tensor({2, 1}, {2, 3})),
                    g.constant(Tensor::vector({1})));
    CHECK(y.value() == std::vector<double>{6});
  }
  SUBCASE("shape mismatch names both shapes") {
    auto x = g.constant(Tensor::zeros({4}));
    auto w = g.constant(Tensor::zeros({3, 2}));
    auto b = g.constant(Tensor::zeros({2}));
    try {
      linear(x, w, b);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[4]") != std::string::npos);
      CHECK(msg.find("[3,2]") != std::string::npos);
    }
  }
}

TEST_CASE("masked_softmax") {
  Graph g;
  SUBCASE("symmetry") {
    auto p = masked_softmax(g.constant(Tensor::vector({0, 0, 0})), {1, 1, 1});
    for (double v : p.value()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("single valid entry") {
    auto p = masked_softmax(g.constant(Tensor::vector({5, 5})), {1, 0});
    CHECK(p.value()[0] == 1.0);
    CHECK(p.value()[1] == 0.0);
  }
  SUBCASE("hand evaluation") {
    auto p = masked_softmax(g.constant(Tensor::vector({std::log(2.0), 0})), {1, 1});
    CHECK(p.value()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(p.value()[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("all masked slice") {
    CHECK_THROWS_AS(masked_softmax(g.constant(Tensor({2, 2}, {1, 2, 3, 4})),
                                   {1, 0, 0, 0}),
                    InfeasibleError);
  }
  SUBCASE("exact zeros and unit sums on random rows") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t rows = 1 + rng.uniform_int(0, 4);
      const std::size_t width = 1 + rng.uniform_int(0, 20);
      auto logits = random_tensor({rows, width}, rng, -30, 30);
      Mask mask(rows * width);
      for (auto& m : mask) m = rng.uniform() < 0.6;
      for (std::size_t r = 0; r < rows; ++r) mask[r * width + rng.uniform_int(0, width - 1)] = 1;
      auto p = masked_softmax(g.constant(logits), mask);
      for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t s = 0; s < width; ++s) {
          const double v = p.value()[r * width + s];
          if (!mask[r * width + s]) CHECK(v == 0.0);
          total += v;
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("masked log-softmax and entropy") {
  Graph g;
  auto logits = g.variable(Tensor({2, 3}, {1.0, 2.0, 3.0, 0.5, 0.5, -1.0}));
  const Mask mask{1, 0, 1, 1, 1, 1};
  auto lp = masked_log_softmax(logits, mask);
  CHECK(std::isinf(lp.value()[1]));
  CHECK(lp.value()[1] < 0);
  const double z = std::log(std::exp(1.0) + std::exp(3.0));
  CHECK(lp.value()[0] == doctest::Approx(1.0 - z));
  auto h = masked_entropy(g.constant(Tensor({1, 4}, {0, 0, 0, 7})), {1, 1, 1, 0});
  CHECK(h.value()[0] == doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("backward basics") {
  SUBCASE("sum has unit gradient") {
    Graph g;
    auto x = g.variable(Tensor::vector({1, 2, 3}));
    g.backward(sum(x));
    CHECK(g.grad(x) == std::vector<double>{1, 1, 1});
  }
  SUBCASE("square") {
    Graph g;
    auto x = g.variable(Tensor::scalar(3));
    g.backward(square(x));
    CHECK(g.grad(x)[0] == 6.0);
  }
  SUBCASE("non-scalar loss is rejected") {
    Graph g;
    auto x = g.variable(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(g.backward(x), ContractError);
  }
  SUBCASE("constants receive no gradient") {
    Graph g;
    auto c = g.constant(Tensor::vector({1, 2}));
    auto x = g.variable(Tensor::vector({3, 4}));
    g.backward(sum(mul(c, x)));
    CHECK(g.grad(x) == std::vector<double>{1, 2});
    CHECK_FALSE(c.requires_grad());
    CHECK(g.grad(c) == std::vector<double>{0, 0});
  }
}

namespace {

// Loss built from every primitive used by the policies.
double fd_probe_loss(Binder& bind, const Tensor& input, const Mask& mask) {
  auto& g = bind.graph();
  Var x = g.constant(input);                               // [1, 5, 8]
  Var h = apply_linear(bind, "in", x);                      // [1, 5, 8]
  h = multi_head_attention(bind, "attn", h, h, h, 2);
  h = apply_layer_norm(bind, "norm", h);
  Var flat = reshape(h, {5, 8});
  Var pairs = pair_concat(reshape(row(h, 0), {5, 8}), flat);  // [5, 5, 16]
  Var hidden = relu(apply_linear(bind, "ff", pairs));          // [5, 5, 6]
  Var logits = reshape(apply_linear(bind, "ptr", hidden), {5, 5});
  Var lp = pick(masked_log_softmax(logits, mask), {0, 1, 2, 3, 4});
  Var ent = masked_entropy(logits, mask);
  Var value = apply_linear(bind, "critic", mean_rows(hidden));
  Var loss = add(sum(mul(lp, lp)), scale(sum(ent), 0.3));
  loss = add(loss, sum(square(value)));
  bind.graph().backward(loss);
  return loss.item();
}

}  // namespace

TEST_CASE("random composed graph matches finite differences") {
  Rng rng(11);
  ParamStore store;
  init_linear(store, "in", 8, 8, rng);
  init_attention(store, "attn", 8, 2, rng);
  init_layer_norm(store, "norm", 8);
  init_linear(store, "ff", 16, 6, rng);
  init_linear(store, "ptr", 6, 1, rng);
  init_linear(store, "critic", 6, 1, rng);
  const auto input = random_tensor({1, 5, 8}, rng);
  Mask mask(25, 1);
  mask[3] = mask[7] = mask[21] = 0;

  Graph g;
  Binder bind(g, store);
  fd_probe_loss(bind, input, mask);
  const auto analytic = bind.gradients();
  const auto numeric = finite_difference(store, [&](const ParamStore& s) {
    Graph gg;
    Binder b(gg, s);
    return fd_probe_loss(b, input, mask);
  });
  CHECK(relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("multi-head attention") {
  Rng rng(3);
  ParamStore store;
  init_attention(store, "mha", 8, 2, rng);

  SUBCASE("single key gives the value path") {
    Graph g;
    Binder bind(g, store);
    auto q = g.constant(random_tensor({1, 1, 8}, rng));
    auto kv = g.constant(random_tensor({1, 1, 8}, rng));
    auto y = multi_head_attention(bind, "mha", q, kv, kv, 2);
    auto expect = apply_linear(bind, "mha.out", apply_linear(bind, "mha.v", kv));
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(y.value()[i] == doctest::Approx(expect.value()[i]).epsilon(1e-13));
    }
  }
  SUBCASE("identical keys give uniform weights") {
    Graph g;
    Binder bind(g, store);
    auto key_row = random_tensor({8}, rng);
    Tensor keys = Tensor::zeros({1, 4, 8});
    for (std::size_t t = 0; t < 4; ++t) {
      std::copy(key_row.values.begin(), key_row.values.end(), keys.values.begin() + t * 8);
    }
    auto values = random_tensor({1, 4, 8}, rng);
    auto q = g.constant(random_tensor({1, 3, 8}, rng));
    auto y = multi_head_attention(bind, "mha", q, g.constant(keys), g.constant(values), 2);
    Tensor mean_value = Tensor::zeros({1, 1, 8});
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t j = 0; j < 8; ++j) mean_value.values[j] += values.values[t * 8 + j] / 4.0;
    auto expect = apply_linear(bind, "mha.out",
                               apply_linear(bind, "mha.v", g.constant(mean_value)));
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t j = 0; j < 8; ++j)
        CHECK(y.value()[t * 8 + j] == doctest::Approx(expect.value()[j]).epsilon(1e-12));
  }
  SUBCASE("equal memory rows give every query the same context") {
    Graph g;
    Binder bind(g, store);
    auto mrow = random_tensor({8}, rng);
    Tensor memory = Tensor::zeros({1, 6, 8});
    for (std::size_t t = 0; t < 6; ++t)
      std::copy(mrow.values.begin(), mrow.values.end(), memory.values.begin() + t * 8);
    auto q = g.constant(random_tensor({1, 4, 8}, rng));
    auto m = g.constant(memory);
    auto y = multi_head_attention(bind, "mha", q, m, m, 2);
    for (std::size_t t = 1; t < 4; ++t)
      for (std::size_t j = 0; j < 8; ++j) CHECK(y.value()[t * 8 + j] == y.value()[j]);
  }
  SUBCASE("default-scale shapes") {
    ParamStore big;
    init_attention(big, "mha", 32, 4, rng);
    Graph g;
    Binder bind(g, big);
    auto q = g.constant(random_tensor({2, 4, 32}, rng));
    auto kv = g.constant(random_tensor({2, 21, 32}, rng));
    CHECK(multi_head_attention(bind, "mha", q, kv, kv, 4).shape() == Shape{2, 4, 32});
  }
  SUBCASE("indivisible width") {
    ParamStore bad;
    CHECK_THROWS_AS(init_attention(bad, "mha", 30, 4, rng), ConfigError);
    Graph g;
    Binder bind(g, store);
    auto q = g.constant(random_tensor({1, 2, 8}, rng));
    CHECK_THROWS_AS(multi_head_attention(bind, "mha", q, q, q, 3), ConfigError);
  }
}

TEST_CASE("transformer encoder") {
  Rng rng(5);
  SUBCASE("zero layers is the identity") {
    ParamStore store;
    Graph g;
    Binder bind(g, store);
    auto x = g.constant(random_tensor({2, 3, 8}, rng));
    auto y = transformer_encoder(bind, "enc", x, {8, 2, 32, 0});
    CHECK(y.value() == x.value());
  }
  SUBCASE("default depth keeps the shape") {
    ParamStore store;
    const TransformerShape shape{32, 4, 128, 7};
    init_transformer_encoder(store, "enc", shape, rng);
    Graph g;
    Binder bind(g, store);
    auto y = transformer_encoder(bind, "enc", g.constant(random_tensor({2, 21, 32}, rng)), shape);
    CHECK(y.shape() == Shape{2, 21, 32});
  }
  SUBCASE("gradients match finite differences") {
    ParamStore store;
    const TransformerShape shape{8, 2, 16, 2};
    init_transformer_encoder(store, "enc", shape, rng);
    const auto input = random_tensor({1, 5, 8}, rng);
    const auto weights = random_tensor({1, 5, 8}, rng);
    auto loss_of = [&](Binder& bind) {
      auto& g = bind.graph();
      auto y = transformer_encoder(bind, "enc", g.constant(input), shape);
      auto loss = sum(mul(y, g.constant(weights)));
      g.backward(loss);
      return loss.item();
    };
    Graph g;
    Binder bind(g, store);
    loss_of(bind);
    const auto numeric = finite_difference(store, [&](const ParamStore& s) {
      Graph gg;
      Binder b(gg, s);
      return loss_of(b);
    });
    CHECK(relative_error(bind.gradients(), numeric) < 1e-4);
  }
}

TEST_CASE("transformer decoder") {
  Rng rng(9);
  SUBCASE("zero layers is the identity on the target") {
    ParamStore store;
    Graph g;
    Binder bind(g, store);
    auto t = g.constant(random_tensor({1, 4, 8}, rng));
    auto m = g.constant(random_tensor({1, 6, 8}, rng));
    CHECK(transformer_decoder(bind, "dec", t, m, {8, 2, 32, 0}).value() == t.value());
  }
  SUBCASE("default shapes") {
    ParamStore store;
    const TransformerShape shape{32, 4, 128, 7};
    init_transformer_decoder(store, "dec", shape, rng);
    Graph g;
    Binder bind(g, store);
    auto y = transformer_decoder(bind, "dec", g.constant(random_tensor({1, 4, 32}, rng)),
                                 g.constant(random_tensor({1, 21, 32}, rng)), shape);
    CHECK(y.shape() == Shape{1, 4, 32});
  }
  SUBCASE("permuting targets permutes outputs") {
    ParamStore store;
    const TransformerShape shape{8, 2, 16, 2};
    init_transformer_decoder(store, "dec", shape, rng);
    auto target = random_tensor({1, 4, 8}, rng);
    auto memory = random_tensor({1, 6, 8}, rng);
    const std::size_t perm[4] = {2, 0, 3, 1};
    Tensor permuted = target;
    for (std::size_t v = 0; v < 4; ++v)
      for (std::size_t j = 0; j < 8; ++j) permuted.values[v * 8 + j] = target.values[perm[v] * 8 + j];
    Graph g;
    Binder bind(g, store);
    auto y = transformer_decoder(bind, "dec", g.constant(target), g.constant(memory), shape);
    auto yp = transformer_decoder(bind, "dec", g.constant(permuted), g.constant(memory), shape);
    for (std::size_t v = 0; v < 4; ++v)
      for (std::size_t j = 0; j < 8; ++j)
        CHECK(yp.value()[v * 8 + j] == doctest::Approx(y.value()[perm[v] * 8 + j]).epsilon(1e-12));
  }
  SUBCASE("gradients match finite differences") {
    ParamStore store;
    const TransformerShape shape{8, 2, 16, 1};
    init_transformer_decoder(store, "dec", shape, rng);
    const auto target = random_tensor({1, 3, 8}, rng);
    const auto memory = random_tensor({1, 5, 8}, rng);
    const auto weights = random_tensor({1, 3, 8}, rng);
    auto loss_of = [&](Binder& bind) {
      auto& g = bind.graph();
      auto y = transformer_decoder(bind, "dec", g.constant(target), g.constant(memory), shape);
      auto loss = sum(mul(y, g.constant(weights)));
      g.backward(loss);
      return loss.item();
    };
    Graph g;
    Binder bind(g, store);
    loss_of(bind);
    const auto numeric = finite_difference(store, [&](const ParamStore& s) {
      Graph gg;
      Binder b(gg, s);
      return loss_of(b);
    });
    CHECK(relative_error(bind.gradients(), numeric) < 1e-4);
  }
}

TEST_CASE("forward passes are bit-identical") {
  Rng rng(21);
  ParamStore store;
  const TransformerShape shape{8, 2, 16, 2};
  init_transformer_encoder(store, "enc", shape, rng);
  const auto input = random_tensor({1, 6, 8}, rng);
  Graph g1, g2;
  Binder b1(g1, store), b2(g2, store);
  auto y1 = transformer_encoder(b1, "enc", g1.constant(input), shape);
  auto y2 = transformer_encoder(b2, "enc", g2.constant(input), shape);
  CHECK(y1.value() == y2.value());
}

TEST_CASE("adamw") {
  SUBCASE("zero gradient without decay is a fixed point") {
    ParamStore store;
    store.add("w", Tensor::vector({0.5, -2.0}));
    adamw_step(store, {{"w", {0.0, 0.0}}}, 1e-3, 0.9, 0.999, 1e-8, 0.0);
    CHECK(store.get("w").values == std::vector<double>{0.5, -2.0});
    CHECK(store.step() == 1);
  }
  SUBCASE("first step with unit gradient moves by lr") {
    ParamStore store;
    store.add("w", Tensor::scalar(1.0));
    adamw_step(store, {{"w", {1.0}}}, 1e-5, 0.9, 0.999, 1e-8, 0.0);
    // m_hat = v_hat = 1, so the step is lr / (1 + eps).
    CHECK(1.0 - store.get("w").values[0] == doctest::Approx(1e-5 / (1.0 + 1e-8)).epsilon(1e-9));
  }
  SUBCASE("decoupled decay with zero gradient") {
    ParamStore store;
    store.add("w", Tensor::scalar(3.0));
    adamw_step(store, {{"w", {0.0}}}, 0.01, 0.9, 0.999, 1e-8, 0.1);
    CHECK(store.get("w").values[0] == doctest::Approx(3.0 - 0.01 * 0.1 * 3.0).epsilon(1e-15));
  }
  SUBCASE("missing gradient key") {
    ParamStore store;
    store.add("w", Tensor::scalar(3.0));
    store.add("u", Tensor::scalar(1.0));
    CHECK_THROWS_AS(adamw_step(store, {{"w", {0.0}}}, 0.01, 0.9, 0.999, 1e-8, 0.0),
                    ContractError);
    CHECK(store.step() == 0);
  }
  SUBCASE("step counter and moment shapes") {
    ParamStore store;
    store.add("w", Tensor::zeros({2, 3}));
    for (int i = 0; i < 5; ++i) {
      adamw_step(store, {{"w", std::vector<double>(6, 0.1)}}, 1e-3, 0.9, 0.999, 1e-8, 0.01);
      CHECK(store.step() == static_cast<std::uint64_t>(i + 1));
    }
    CHECK(store.first_moments().at("w").shape == Shape{2, 3});
    CHECK(store.second_moments().at("w").shape == Shape{2, 3});
  }
}

TEST_CASE("gradient clipping") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    GradMap grads;
    grads["a"] = random_tensor({7}, rng, -5, 5).values;
    grads["b"] = random_tensor({3}, rng, -5, 5).values;
    const double before = global_grad_norm(grads);
    const double reported = clip_grad_norm(grads, 1.0);
    CHECK(reported == before);
    CHECK(global_grad_norm(grads) <= 1.0 + 1e-9);
  }
  GradMap small{{"a", {0.1, 0.2}}};
  clip_grad_norm(small, 1.0);
  CHECK(small.at("a") == std::vector<double>{0.1, 0.2});
}

// Copyright 2026 The dvlcal Authors
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
#include <random>

#include "doctest.h"
#include "dvlcal/errors.hpp"
#include "dvlcal/nn/grad_check.hpp"
#include "dvlcal/nn/ops.hpp"
#include "dvlcal/nn/tensor.hpp"
#include "nn_oracles.hpp"

using namespace dvlcal;
using namespace dvlcal::nn;

namespace {

double max_abs_diff(std::span<const double> a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Tensor random_tensor(Shape shape, std::mt19937_64& gen, bool grad = false) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), testing::random_values(n, gen), grad);
}

Tensor sum_of_squares_weighted(const Tensor& y, std::mt19937_64& gen) {
  // Generic scalar head: random weighted sum of y^2-free terms keeps gradients non-trivial.
  return weighted_sum(y, testing::random_values(y.numel(), gen));
}

}  // namespace

TEST_CASE("tensor construction and shape checks") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DomainError);
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.dim(1) == 3);
  CHECK(t.numel() == 6);
  CHECK_FALSE(t.requires_grad());
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS(t.item());
  CHECK(shape_string({2, 3}) == "[2, 3]");
}

TEST_CASE("affine") {
  const Tensor x({1, 2}, {1, 2});
  const auto z = affine(x, Tensor({1, 2}, {1, 1}), Tensor({1}, {0.5}));
  CHECK(z.shape() == Shape{1, 1});
  CHECK(z.values()[0] == 3.5);
  const Tensor xs({2, 3}, {1, 2, 3, 1, 2, 3});
  const auto id = affine(xs, Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Tensor::zeros({3}));
  CHECK(std::vector<double>(id.values().begin(), id.values().end()) == std::vector<double>{1, 2, 3, 1, 2, 3});
  CHECK_THROWS_AS(affine(xs, Tensor::zeros({2, 2}), Tensor::zeros({2})), DomainError);
  CHECK_THROWS_AS(affine(xs, Tensor::zeros({2, 3}), Tensor::zeros({3})), DomainError);
}

TEST_CASE("conv1d matches the direct loop") {
  const auto y = conv1d(Tensor({1, 1, 3}, {1, 2, 3}), Tensor({1, 1, 2}, {1, 1}), Tensor::zeros({1}));
  CHECK(y.shape() == Shape{1, 1, 2});
  CHECK(y.values()[0] == 3);
  CHECK(y.values()[1] == 5);
  const auto same = conv1d(Tensor({1, 1, 4}, {4, 3, 2, 1}), Tensor({1, 1, 1}, {1}), Tensor::zeros({1}));
  CHECK(std::vector<double>(same.values().begin(), same.values().end()) == std::vector<double>{4, 3, 2, 1});
  CHECK_THROWS_AS(conv1d(Tensor::zeros({1, 1, 1}), Tensor::zeros({1, 1, 2}), Tensor::zeros({1})), DomainError);

  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 1 + trial % 3, c = 1 + trial % 4, l = 3 + trial % 8, o = 1 + trial % 5, k = 1 + trial % 3;
    const auto x = random_tensor({b, c, l}, gen);
    const auto w = random_tensor({o, c, k}, gen);
    const auto bias = random_tensor({o}, gen);
    const auto out = conv1d(x, w, bias);
    CHECK(out.shape() == Shape{b, o, l - k + 1});
    const auto ref = testing::conv1d_reference({x.values().begin(), x.values().end()},
                                               {w.values().begin(), w.values().end()},
                                               {bias.values().begin(), bias.values().end()}, b, c, l, o, k);
    CHECK(max_abs_diff(out.values(), ref) < 1e-12);
  }
}

TEST_CASE("conv2d shapes") {
  const auto a = conv2d(Tensor::zeros({1, 1, 6, 10}), Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1}), {3, 1});
  CHECK(a.shape() == Shape{1, 1, 3, 9});
  const auto b = conv2d(Tensor::zeros({1, 1, 3, 9}), Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1}), {1, 1});
  CHECK(b.shape() == Shape{1, 1, 2, 8});
  const auto ones = conv2d(Tensor({1, 1, 3, 3}, std::vector<double>(9, 2.5)), Tensor({1, 1, 2, 2}, {1, 1, 1, 1}),
                           Tensor({1}, {0.25}));
  for (const double v : ones.values()) CHECK(v == 4 * 2.5 + 0.25);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 1, 3, 10}), Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1}), {3, 1}),
                  DomainError);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 2, 6, 10}), Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1})), DomainError);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 1, 6, 10}), Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1}), {0, 1}),
                  DomainError);
}

TEST_CASE("dilated conv2d matches the direct loop on random cases") {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<std::size_t> pick(1, 4);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t b = pick(gen), c = pick(gen), h = 2 + pick(gen) + pick(gen), w = 3 + 2 * pick(gen), o = pick(gen);
    std::size_t kh = 1 + pick(gen) % 2, kw = 1 + pick(gen) % 3, dh = pick(gen), dw = pick(gen) % 2 + 1;
    if (trial % 3 == 0) {
      b = 2, c = 1, h = 6, w = 10, o = 3, kh = 2, kw = 2, dh = 3, dw = 1;
    }
    if (trial == 1) {
      b = 4, c = 8, h = 8, w = 12;
    }
    if ((kh - 1) * dh + 1 > h) dh = 1;
    if ((kw - 1) * dw + 1 > w) dw = 1;
    const auto x = random_tensor({b, c, h, w}, gen);
    const auto k = random_tensor({o, c, kh, kw}, gen);
    const auto bias = random_tensor({o}, gen);
    const auto out = conv2d(x, k, bias, {dh, dw});
    const auto ref = testing::conv2d_reference({x.values().begin(), x.values().end()},
                                               {k.values().begin(), k.values().end()},
                                               {bias.values().begin(), bias.values().end()}, b, c, h, w, o, kh, kw,
                                               dh, dw);
    CHECK(out.shape() == Shape{b, o, h - (kh - 1) * dh, w - (kw - 1) * dw});
    CHECK(max_abs_diff(out.values(), ref) < 1e-12);
  }
}

TEST_CASE("conv and affine are linear apart from the bias") {
  std::mt19937_64 gen(3);
  const auto x1 = random_tensor({2, 2, 6, 10}, gen);
  const auto x2 = random_tensor({2, 2, 6, 10}, gen);
  const auto w = random_tensor({3, 2, 2, 2}, gen);
  const auto zero_b = Tensor::zeros({3});
  const double a = 0.7, c = -1.3;
  std::vector<double> mix(x1.numel());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x1.values()[i] + c * x2.values()[i];
  const auto lhs = conv2d(Tensor(x1.shape(), mix), w, zero_b, {3, 1});
  const auto y1 = conv2d(x1, w, zero_b, {3, 1});
  const auto y2 = conv2d(x2, w, zero_b, {3, 1});
  for (std::size_t i = 0; i < lhs.numel(); ++i) CHECK(std::abs(lhs.values()[i] - (a * y1.values()[i] + c * y2.values()[i])) < 1e-10);

  const auto f1 = random_tensor({4, 5}, gen), f2 = random_tensor({4, 5}, gen), fw = random_tensor({3, 5}, gen);
  std::vector<double> fmix(f1.numel());
  for (std::size_t i = 0; i < fmix.size(); ++i) fmix[i] = a * f1.values()[i] + c * f2.values()[i];
  const auto fl = affine(Tensor(f1.shape(), fmix), fw, Tensor::zeros({3}));
  const auto g1 = affine(f1, fw, Tensor::zeros({3})), g2 = affine(f2, fw, Tensor::zeros({3}));
  for (std::size_t i = 0; i < fl.numel(); ++i) CHECK(std::abs(fl.values()[i] - (a * g1.values()[i] + c * g2.values()[i])) < 1e-10);

  const auto c1 = random_tensor({1, 3, 9}, gen), c2 = random_tensor({1, 3, 9}, gen), cw = random_tensor({4, 3, 2}, gen);
  std::vector<double> cmix(c1.numel());
  for (std::size_t i = 0; i < cmix.size(); ++i) cmix[i] = a * c1.values()[i] + c * c2.values()[i];
  const auto cl = conv1d(Tensor(c1.shape(), cmix), cw, Tensor::zeros({4}));
  const auto h1 = conv1d(c1, cw, Tensor::zeros({4})), h2 = conv1d(c2, cw, Tensor::zeros({4}));
  for (std::size_t i = 0; i < cl.numel(); ++i) CHECK(std::abs(cl.values()[i] - (a * h1.values()[i] + c * h2.values()[i])) < 1e-10);
}

TEST_CASE("activations") {
  const auto l = leaky_relu(Tensor({3}, {-2, 3, 0}), 0.05);
  CHECK(l.values()[0] == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(l.values()[1] == 3);
  CHECK(l.values()[2] == 0);
  const auto t = nn::tanh(Tensor({3}, {0, 1, -0.4}));
  CHECK(t.values()[0] == 0);
  CHECK(t.values()[1] == doctest::Approx(0.7615941559557649).epsilon(1e-15));
  CHECK(t.values()[2] == -std::tanh(0.4));
}

TEST_CASE("dropout") {
  Rng rng(4);
  const Tensor x({4}, {1, -2, 3, 4});
  const auto p0 = dropout(x, 0.0, Mode::train, rng);
  CHECK(std::vector<double>(p0.values().begin(), p0.values().end()) == std::vector<double>{1, -2, 3, 4});
  const auto ev = dropout(x, 0.5, Mode::eval, rng);
  CHECK(std::vector<double>(ev.values().begin(), ev.values().end()) == std::vector<double>{1, -2, 3, 4});
  CHECK_THROWS_AS(dropout(x, 1.0, Mode::train, rng), DomainError);
  CHECK_THROWS_AS(dropout(x, -0.1, Mode::train, rng), DomainError);

  const std::size_t n = 100000;
  const Tensor ones({n}, std::vector<double>(n, 1.0));
  const auto dropped = dropout(ones, 0.3, Mode::train, rng);
  double sum = 0.0;
  for (const double v : dropped.values()) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.7) < 1e-15));
    sum += v;
  }
  CHECK(sum / static_cast<double>(n) == doctest::Approx(1.0).epsilon(0.01));

  Rng r1(5), r2(5);
  const auto d1 = dropout(x, 0.3, Mode::train, r1);
  const auto d2 = dropout(x, 0.3, Mode::train, r2);
  CHECK(std::vector<double>(d1.values().begin(), d1.values().end()) ==
        std::vector<double>(d2.values().begin(), d2.values().end()));
}

TEST_CASE("mse, flatten and concat") {
  CHECK(mse(Tensor({2}, {1, 1}), Tensor({2}, {1, 1})).item() == 0.0);
  CHECK(mse(Tensor({2}, {1, 1}), Tensor({2}, {0, 0})).item() == 1.0);
  CHECK(mse(Tensor({3}, {1, 2, 3}), Tensor({3}, {1, 1, 1})).item() == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(mse(Tensor::zeros({2}), Tensor::zeros({3})), DomainError);
  const auto f = flatten(Tensor::zeros({2, 3, 4}));
  CHECK(f.shape() == Shape{2, 12});
  const auto c = concat(Tensor({2, 1}, {1, 2}), Tensor({2, 2}, {3, 4, 5, 6}));
  CHECK(c.shape() == Shape{2, 3});
  CHECK(std::vector<double>(c.values().begin(), c.values().end()) == std::vector<double>{1, 3, 4, 2, 5, 6});
  CHECK_THROWS_AS(concat(Tensor::zeros({2, 1}), Tensor::zeros({3, 1})), DomainError);
}

TEST_CASE("backward on small graphs") {
  const double x = 1.7, y = 0.4, w0 = -0.3;
  Tensor w({1, 1}, {w0}, true);
  const auto loss = mse(affine(Tensor({1, 1}, {x}), w, Tensor::zeros({1})), Tensor({1, 1}, {y}));
  backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(2 * x * (w0 * x - y)).epsilon(1e-14));
  CHECK_THROWS_AS(backward(loss), ContractError);

  Tensor z({1}, {0.0}, true);
  backward(weighted_sum(nn::tanh(z), {1.0}));
  CHECK(z.grad()[0] == 1.0);

  CHECK_THROWS_AS(backward(mse(Tensor({1}, {1.0}), Tensor({1}, {0.0}))), ContractError);
  Tensor v({2}, {1, 2}, true);
  CHECK_THROWS_AS(backward(leaky_relu(v, 0.1)), ContractError);
}

TEST_CASE("gradients accumulate across backward passes and reset with zero_grad") {
  Tensor w({1}, {2.0}, true);
  backward(weighted_sum(w, {3.0}));
  backward(weighted_sum(w, {3.0}));
  CHECK(w.grad()[0] == 6.0);
  w.zero_grad();
  CHECK(w.grad()[0] == 0.0);
}

TEST_CASE("every operator passes the finite-difference check") {
  std::mt19937_64 gen(6);
  GradCheckOptions opt;
  opt.tolerance = 1e-5;

  SUBCASE("affine") {
    auto x = random_tensor({3, 4}, gen, true), w = random_tensor({2, 4}, gen, true), b = random_tensor({2}, gen, true);
    const auto head = testing::random_values(6, gen);
    const auto r = grad_check([&] { return weighted_sum(affine(x, w, b), head); }, {{"x", x}, {"w", w}, {"b", b}}, opt);
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-8);
  }
  SUBCASE("conv1d") {
    auto x = random_tensor({2, 3, 6}, gen, true), w = random_tensor({4, 3, 2}, gen, true), b = random_tensor({4}, gen, true);
    const auto head = testing::random_values(2 * 4 * 5, gen);
    CHECK(grad_check([&] { return weighted_sum(conv1d(x, w, b), head); }, {{"x", x}, {"w", w}, {"b", b}}, opt).passed);
  }
  SUBCASE("dilated conv2d") {
    auto x = random_tensor({2, 2, 6, 10}, gen, true), w = random_tensor({3, 2, 2, 2}, gen, true),
         b = random_tensor({3}, gen, true);
    const auto head = testing::random_values(2 * 3 * 3 * 9, gen);
    CHECK(grad_check([&] { return weighted_sum(conv2d(x, w, b, {3, 1}), head); }, {{"x", x}, {"w", w}, {"b", b}}, opt)
              .passed);
  }
  SUBCASE("leaky relu and tanh") {
    auto x = random_tensor({12}, gen, true);
    const auto head = testing::random_values(12, gen);
    CHECK(grad_check([&] { return weighted_sum(leaky_relu(x, 0.05), head); }, {{"x", x}}, opt).passed);
    CHECK(grad_check([&] { return weighted_sum(nn::tanh(x), head); }, {{"x", x}}, opt).passed);
  }
  SUBCASE("frozen dropout mask, flatten, concat and mse") {
    auto a = random_tensor({2, 3, 2}, gen, true), c = random_tensor({2, 4}, gen, true);
    const auto target = random_tensor({2, 10}, gen);
    Rng rng(7);
    const auto mask_source = dropout(Tensor({2, 10}, std::vector<double>(20, 1.0)), 0.3, Mode::train, rng);
    const std::vector<double> mask(mask_source.values().begin(), mask_source.values().end());
    const auto r = grad_check([&] { return mse(multiply_constant(concat(flatten(a), c), mask), target); },
                              {{"a", a}, {"c", c}}, opt);
    CHECK(r.passed);
  }
  SUBCASE("mse") {
    auto p = random_tensor({5}, gen, true);
    const auto t = random_tensor({5}, gen);
    CHECK(grad_check([&] { return mse(p, t); }, {{"p", p}}, opt).passed);
  }
}

TEST_CASE("grad_check reports a wrong gradient") {
  Tensor x({3}, {0.5, -1.0, 2.0}, true);
  // Forward is x * 2 but the backward pretends the slope is 3.
  auto bad = [&] {
    std::vector<double> values;
    for (const double v : x.values()) values.push_back(2.0 * v);
    auto y = Tensor::from_op({3}, values, {x}, [xn = x.node()](const detail::Node& self) {
      auto& g = xn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 3.0 * self.grad[i];
    });
    return weighted_sum(y, {1, 1, 1});
  };
  const auto r = grad_check(bad, {{"x", x}});
  CHECK_FALSE(r.passed);
  CHECK(r.max_rel_error > 0.1);
  CHECK(r.worst.find("x[") == 0);
}

TEST_CASE("grad_check keeps stencils on one side of activation kinks") {
  // 1e-5 sits inside the default starting step, so the stencil has to shrink.
  Tensor near({2}, {1e-5, -0.7}, true);
  const auto r = grad_check([&] { return weighted_sum(leaky_relu(near, 0.1), {1.0, 2.0}); }, {{"x", near}});
  CHECK(r.passed);
  CHECK(r.step_reductions >= 1);
  CHECK(r.kinked == 0);

  Tensor at({1}, {0.0}, true);
  const auto k = grad_check([&] { return weighted_sum(leaky_relu(at, 0.1), {1.0}); }, {{"x", at}});
  CHECK(k.kinked == 1);
  CHECK(k.checked == 0);
  CHECK_FALSE(k.passed);
}

TEST_CASE("activation patterns nest and tell branches apart") {
  const Tensor pos({2}, {0.5, 1.0}), mixed({2}, {0.5, -1.0});
  ActivationPattern outer;
  std::uint64_t a = 0, b = 0, a_again = 0;
  {
    ActivationPattern inner;
    (void)leaky_relu(pos, 0.1);
    a = inner.fingerprint();
  }
  {
    ActivationPattern inner;
    (void)leaky_relu(mixed, 0.1);
    b = inner.fingerprint();
  }
  {
    ActivationPattern inner;
    (void)leaky_relu(pos, 0.1);
    a_again = inner.fingerprint();
  }
  CHECK(a != b);
  CHECK(a == a_again);
  const auto untouched = outer.fingerprint();
  (void)leaky_relu(pos, 0.1);
  CHECK(outer.fingerprint() != untouched);
}

TEST_CASE("forward operators are deterministic") {
  std::mt19937_64 gen(8);
  const auto x = random_tensor({2, 1, 6, 10}, gen), w = random_tensor({4, 1, 2, 2}, gen), b = random_tensor({4}, gen);
  const auto y1 = conv2d(x, w, b, {3, 1}), y2 = conv2d(x, w, b, {3, 1});
  CHECK(std::vector<double>(y1.values().begin(), y1.values().end()) ==
        std::vector<double>(y2.values().begin(), y2.values().end()));
}

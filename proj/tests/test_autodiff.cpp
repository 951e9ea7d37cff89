// Copyright 2026 The mnerv contributors. All Rights Reserved.
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

#include "doctest.h"
#include "mnerv/error.h"
#include "mnerv/grad_check.h"
#include "mnerv/ops.h"
#include "test_util.h"

using namespace mnerv;
using namespace mnerv::testing;

namespace {

GradCheckOptions strict() {
  GradCheckOptions o;
  o.tolerance = 1e-4;
  return o;
}

void require_grad_ok(const GradCheckFn& fn, const std::vector<Shape>& shapes,
                     GradCheckOptions opts = strict()) {
  const auto report = grad_check(fn, shapes, opts);
  INFO(report.worst);
  CHECK(report.max_error < 1e-4);
  CHECK(report.passed);
}

}  // namespace

TEST_CASE("tensor construction validates shape and data") {
  CHECK_THROWS_AS(Tensor({2, 0}, {}), ConfigError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ConfigError);
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.dim(1) == 3);
  CHECK_THROWS_AS(t.item(), UsageError);
  CHECK(Tensor::scalar(Real(2.5)).item() == Real(2.5));
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor t({2}, {1, 2}, true);
  CHECK_THROWS_AS(backward(ops::mul_scalar(t, 2)), UsageError);
}

TEST_CASE("gradients accumulate until zeroed") {
  Tensor x({3}, {1, -2, 3}, true);
  backward(ops::sum(ops::mul_scalar(x, 2)));
  backward(ops::sum(ops::mul_scalar(x, 2)));
  for (auto g : x.grad()) CHECK(g == Real(4));
  x.zero_grad();
  for (auto g : x.grad()) CHECK(g == Real(0));
}

TEST_CASE("no-grad mode records nothing") {
  Tensor x({2}, {1, 2}, true);
  Tensor y;
  {
    NoGradGuard guard;
    y = ops::square(x);
  }
  CHECK_FALSE(y.requires_grad());
  CHECK(grad_enabled());
}

TEST_CASE("backward of a sum equals the sum of separate backwards") {
  Rng rng(3);
  auto x1 = random_tensor({2, 5, 5}, rng, -1, 1, true);
  auto x2 = Tensor(x1.shape(), {x1.data().begin(), x1.data().end()}, true);
  auto w = random_tensor({3, 2, 3, 3}, rng);
  auto f = [&](const Tensor& x) { return ops::mean(ops::gelu(ops::conv2d(x, w, Tensor(), 1, 1))); };
  auto g = [&](const Tensor& x) { return ops::sum(ops::square(ops::sigmoid(x))); };

  backward(ops::add(f(x1), g(x1)));
  backward(f(x2));
  backward(g(x2));
  CHECK(max_abs_diff(x1.grad(), x2.grad()) < 1e-14);
}

TEST_CASE("shared subexpressions receive gradient from every use") {
  Tensor x({1}, {3}, true);
  auto y = ops::mul(x, x);                  // x^2
  backward(ops::sum(ops::add(y, ops::mul(y, x))));  // x^2 + x^3
  CHECK(x.grad()[0] == doctest::Approx(2 * 3 + 3 * 9));
}

TEST_CASE("elementwise gradients pass central differences") {
  const Shape s{3, 4, 5};
  require_grad_ok([](auto& in) { return ops::add(in[0], in[1]); }, {s, s});
  require_grad_ok([](auto& in) { return ops::sub(in[0], in[1]); }, {s, s});
  require_grad_ok([](auto& in) { return ops::mul(in[0], in[1]); }, {s, s});
  require_grad_ok([](auto& in) { return ops::div(in[0], ops::add_scalar(ops::square(in[1]), 1)); }, {s, s});
  require_grad_ok([](auto& in) { return ops::mul_scalar(ops::add_scalar(in[0], 2), -3); }, {s});
  require_grad_ok([](auto& in) { return ops::pow_scalar(ops::add_scalar(ops::square(in[0]), 0.5), 1.7); }, {s});
  require_grad_ok([](auto& in) { return ops::gelu(in[0]); }, {s});
  require_grad_ok([](auto& in) { return ops::sigmoid(in[0]); }, {s});
  require_grad_ok([](auto& in) { return ops::mean(in[0]); }, {s});
  require_grad_ok([](auto& in) { return ops::channel_mean(in[0]); }, {s});
}

TEST_CASE("kinked ops pass central differences away from the kink") {
  GradCheckOptions o = strict();
  o.low = 0.1;
  o.high = 1.0;
  require_grad_ok([](auto& in) { return ops::abs(ops::mul_scalar(in[0], -1)); }, {{2, 3, 4}}, o);
  require_grad_ok([](auto& in) { return ops::relu(in[0]); }, {{2, 3, 4}}, o);
}

TEST_CASE("convolution gradients pass central differences") {
  for (int k : {1, 3, 5, 7}) {
    for (int stride : {1, 2, 5}) {
      CAPTURE(k);
      CAPTURE(stride);
      const int pad = k / 2;
      require_grad_ok(
          [&](auto& in) { return ops::conv2d(in[0], in[1], in[2], stride, pad); },
          {{2, 8, 8}, {3, 2, k, k}, {3}});
    }
  }
  require_grad_ok([](auto& in) { return ops::conv2d(in[0], in[1], Tensor(), 2, 0); },
                  {{3, 8, 8}, {2, 3, 2, 2}});
  require_grad_ok([](auto& in) { return ops::depthwise_conv2d(in[0], in[1], in[2], 1, 3); },
                  {{3, 8, 8}, {3, 1, 7, 7}, {3}});
}

TEST_CASE("pixel shuffle, pooling, norm and filter gradients pass central differences") {
  require_grad_ok([](auto& in) { return ops::pixel_shuffle(in[0], 2); }, {{8, 3, 3}});
  require_grad_ok([](auto& in) { return ops::pixel_unshuffle(in[0], 2); }, {{2, 4, 6}});
  require_grad_ok([](auto& in) { return ops::avg_pool2(in[0]); }, {{2, 5, 7}});
  require_grad_ok([](auto& in) { return ops::layer_norm_channels(in[0], in[1], in[2], Real(1e-6)); },
                  {{4, 3, 5}, {4}, {4}});
  const std::vector<double> taps{0.25, 0.5, 0.25};
  require_grad_ok([&](auto& in) { return ops::separable_filter_valid(in[0], taps); }, {{2, 6, 7}});
}

TEST_CASE("conv2d matches the naive loop oracle for every architecture stride and kernel") {
  Rng rng(11);
  for (int k : {1, 3, 5, 7}) {
    for (int stride : {1, 2, 5}) {
      for (int pad : {0, k / 2}) {
        auto x = random_tensor({3, 11, 13}, rng);
        auto w = random_tensor({4, 3, k, k}, rng);
        auto b = random_tensor({4}, rng);
        auto y = ops::conv2d(x, w, b, stride, pad);
        int ho = 0, wo = 0;
        auto ref = naive_conv(x, w, &b, stride, pad, &ho, &wo);
        REQUIRE(y.shape() == Shape{4, ho, wo});
        double err = 0;
        for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(ref[i] - y.data()[i]));
        CAPTURE(k);
        CAPTURE(stride);
        CAPTURE(pad);
        CHECK(err <= 1e-12);
      }
    }
  }
}

TEST_CASE("depthwise conv matches a per-channel naive oracle") {
  Rng rng(12);
  auto x = random_tensor({3, 9, 10}, rng);
  auto w = random_tensor({3, 1, 7, 7}, rng);
  auto y = ops::depthwise_conv2d(x, w, Tensor(), 1, 3);
  for (int c = 0; c < 3; ++c) {
    Tensor xc({1, 9, 10}, {x.data().begin() + c * 90, x.data().begin() + (c + 1) * 90});
    Tensor wc({1, 1, 7, 7}, {w.data().begin() + c * 49, w.data().begin() + (c + 1) * 49});
    int ho = 0, wo = 0;
    auto ref = naive_conv(xc, wc, nullptr, 1, 3, &ho, &wo);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(ref[i] - y.data()[c * 90 + i]) <= 1e-12);
  }
}

TEST_CASE("pixel shuffle places channels by the sub-pixel layout and round trips exactly") {
  Rng rng(5);
  for (int s : {1, 2, 3, 5}) {
    auto x = random_tensor({2 * s * s, 3, 4}, rng);
    auto y = ops::pixel_shuffle(x, s);
    REQUIRE(y.shape() == Shape{2, 3 * s, 4 * s});
    for (int c = 0; c < 2; ++c)
      for (int yy = 0; yy < 3 * s; ++yy)
        for (int xx = 0; xx < 4 * s; ++xx) {
          const int a = yy % s, b = xx % s;
          const int src = ((c * s * s + a * s + b) * 3 + yy / s) * 4 + xx / s;
          CHECK(y.data()[(c * 3 * s + yy) * 4 * s + xx] == x.data()[src]);
        }
    CHECK(bit_equal(ops::pixel_unshuffle(y, s).data(), x.data()));
  }
  CHECK_THROWS_AS(ops::pixel_shuffle(Tensor::zeros({3, 2, 2}), 2), ConfigError);
}

TEST_CASE("gelu uses the tanh approximation") {
  Tensor x({3}, {-1, 0, 2});
  auto y = ops::gelu(x);
  for (int i = 0; i < 3; ++i) {
    const double v = x.data()[i];
    const double ref = 0.5 * v * (1 + std::tanh(std::sqrt(2 / M_PI) * (v + 0.044715 * v * v * v)));
    CHECK(y.data()[i] == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("channel layer norm has zero mean and unit variance across channels") {
  Rng rng(9);
  auto x = random_tensor({6, 2, 3}, rng);
  auto y = ops::layer_norm_channels(x, Tensor::full({6}, 1), Tensor::zeros({6}), Real(1e-12));
  for (int p = 0; p < 6; ++p) {
    double m = 0, v = 0;
    for (int c = 0; c < 6; ++c) m += y.data()[c * 6 + p];
    m /= 6;
    for (int c = 0; c < 6; ++c) v += std::pow(y.data()[c * 6 + p] - m, 2);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 6 == doctest::Approx(1).epsilon(1e-9));
  }
}

TEST_CASE("identical inputs replay to bit-identical forward and backward results") {
  auto run = [] {
    Rng rng(21);
    auto x = random_tensor({2, 8, 8}, rng, -1, 1, true);
    auto w = random_tensor({8, 2, 3, 3}, rng, -1, 1, true);
    auto y = ops::gelu(ops::pixel_shuffle(ops::conv2d(x, w, Tensor(), 1, 1), 2));
    auto l = ops::mean(ops::square(y));
    backward(l);
    std::vector<Real> out{l.item()};
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("grad_check reports a broken gradient") {
  // The squared term reads a detached copy, so its gradient goes missing.
  auto report = grad_check([](auto& in) { return ops::add(in[0], ops::square(in[0].detach())); },
                           std::vector<Shape>{{4}}, strict());
  CHECK_FALSE(report.passed);
}

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
#include "mnerv/ops.h"
#include "mnerv/trainer.h"
#include "test_util.h"

using namespace mnerv;
using namespace mnerv::testing;

TEST_CASE("first Adam step moves each weight by about lr against its gradient") {
  Tensor w({4}, {0, 0, 0, 0}, true);
  Tensor g({4}, {1e-3, -2.0, 50.0, -1e-2});
  backward(ops::sum(ops::mul(w, g)));
  AdamState state;
  adam_step({w}, state, 0.01, AdamConfig{});
  for (std::size_t i = 0; i < 4; ++i) {
    const double step = -w.data()[i];
    const double sign = g.data()[i] > 0 ? 1 : -1;
    CHECK(step * sign >= 0.999 * 0.01);
    CHECK(step * sign <= 0.01);
  }
}

TEST_CASE("zero gradient leaves a fresh parameter alone and decays the moments") {
  Tensor w({2}, {0.5, -0.5}, true);
  AdamState state;
  adam_step({w}, state, 0.1, AdamConfig{});
  CHECK(w.data()[0] == Real(0.5));
  CHECK(w.data()[1] == Real(-0.5));

  backward(ops::sum(ops::mul_scalar(w, 3)));
  adam_step({w}, state, 0.1, AdamConfig{});
  const Real m = state.m[0][0], v = state.v[0][0];
  w.zero_grad();
  adam_step({w}, state, 0.1, AdamConfig{});
  CHECK(state.m[0][0] == doctest::Approx(0.9 * m).epsilon(1e-15));
  CHECK(state.v[0][0] == doctest::Approx(0.999 * v).epsilon(1e-15));
}

TEST_CASE("ten Adam steps on x^2 follow a scalar reference trace") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double x = 1, m = 0, v = 0, p1 = 1, p2 = 1;
  Tensor w({1}, {1}, true);
  AdamState state;
  for (int t = 1; t <= 10; ++t) {
    const double g = 2 * x;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    p1 *= b1;
    p2 *= b2;
    x -= lr * (m / (1 - p1)) / (std::sqrt(v / (1 - p2)) + eps);

    w.zero_grad();
    backward(ops::sum(ops::square(w)));
    adam_step({w}, state, lr, AdamConfig{b1, b2, eps});
    CAPTURE(t);
    CHECK(std::abs(w.data()[0] - x) <= 1e-12);
  }
  CHECK(state.step == 10);
}

TEST_CASE("learning rate ramps up, peaks and decays to one percent") {
  TrainConfig c;
  const long long total = 800;
  const double warm = 0.05 * total;
  CHECK(lr_at(0, total, c) == doctest::Approx(c.lr / warm).epsilon(1e-12));
  CHECK(lr_at(static_cast<long long>(warm), total, c) == c.lr);
  CHECK(std::abs(lr_at(total - 1, total, c) - 0.01 * c.lr) <= 1e-9);
  double prev = INFINITY;
  for (long long s = static_cast<long long>(warm); s < total; ++s) {
    const double lr = lr_at(s, total, c);
    CHECK(lr <= prev);
    prev = lr;
  }
  c.cosine = false;
  CHECK(lr_at(0, total, c) == c.lr);
  CHECK(lr_at(total - 1, total, c) == c.lr);
}

TEST_CASE("training defaults match the reference recipe") {
  TrainConfig c;
  CHECK(c.epochs == 100);
  CHECK(c.batch_size == 2);
  CHECK(c.lr == 0.001);
  CHECK(c.adam.beta1 == 0.9);
  CHECK(c.adam.beta2 == 0.999);
  CHECK(c.adam.eps == 1e-8);
  CHECK(c.loss.alpha == 0.7);
  CHECK(c.loss.first == LossKind::kL1);
  CHECK(c.loss.second == LossKind::kMsSsim);
  c.lr = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.adam.beta2 = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("video dataset validates shapes and counts reads") {
  Rng rng(1);
  std::vector<Tensor> frames{random_tensor({3, 4, 4}, rng, 0, 1), random_tensor({3, 4, 4}, rng, 0, 1)};
  CHECK_THROWS_AS(VideoDataset({}), ConfigError);
  CHECK_THROWS_AS(VideoDataset({frames[0], random_tensor({3, 4, 5}, rng)}), ConfigError);
  CHECK_THROWS_AS(VideoDataset(frames, {Tensor::zeros({3, 4, 4})}), ConfigError);
  VideoDataset d(frames);
  d.frame(1);
  d.frame(1);
  CHECK(d.access_count(0) == 0);
  CHECK(d.access_count(1) == 2);
  auto sub = d.subset({1});
  CHECK(sub.size() == 1);
  CHECK(d.access_count(1) == 3);
  d.reset_access_counts();
  CHECK(d.access_count(1) == 0);
}

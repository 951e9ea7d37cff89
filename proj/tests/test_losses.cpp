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
#include <sstream>

#include "doctest.h"
#include "mnerv/error.h"
#include "mnerv/grad_check.h"
#include "mnerv/losses.h"
#include "mnerv/ops.h"
#include "oracles.h"

using namespace mnerv;
using namespace mnerv::testing;

TEST_CASE("pixel losses follow their closed forms") {
  Tensor p({1, 1, 2}, {0, 3});
  Tensor t({1, 1, 2}, {0, 1});
  CHECK(l1_loss(p, t).item() == doctest::Approx(1.0));
  CHECK(l2_loss(p, t).item() == doctest::Approx(2.0));
  // d = 0 contributes 0, d = 2 contributes 1.5
  CHECK(smooth_l1(p, t).item() == doctest::Approx(0.75));
  Tensor q({1, 1, 1}, {0.5});
  Tensor z({1, 1, 1}, {0.0});
  CHECK(smooth_l1(q, z).item() == doctest::Approx(0.125));
}

TEST_CASE("smooth L1 gradient is continuous at the transition") {
  GradCheckOptions o;
  o.tolerance = 1e-4;
  for (double d : {0.999, 1.0, 1.001, -1.0}) {
    Tensor p({1, 1, 1}, {static_cast<Real>(d)});
    auto r = grad_check([](auto& in) { return smooth_l1(in[0], Tensor::zeros({1, 1, 1})); }, {p}, o);
    CAPTURE(d);
    CHECK(r.max_error < 1e-4);
  }
}

TEST_CASE("SSIM matches the direct windowed reference") {
  Rng rng(1);
  auto [p, t] = correlated_pair({3, 17, 23}, rng);
  CHECK(std::abs(ssim(p, t).item() - ssim_oracle(p, t)) <= 1e-9);
  CHECK(ssim(t, t).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-scale MS-SSIM reduces to SSIM") {
  Rng rng(2);
  auto [p, t] = correlated_pair({3, 16, 20}, rng);
  CHECK(std::abs(ms_ssim(p, t, 1).item() - ssim_oracle(p, t)) <= 1e-9);
}

TEST_CASE("MS-SSIM scale count follows the frame size") {
  CHECK(max_ms_ssim_scales(10, 100) == 0);
  CHECK(max_ms_ssim_scales(11, 11) == 1);
  CHECK(max_ms_ssim_scales(40, 80) == 2);
  CHECK(max_ms_ssim_scales(44, 80) == 3);
  CHECK(max_ms_ssim_scales(640, 1280) == 5);
  Rng rng(3);
  auto [p, t] = correlated_pair({3, 40, 80}, rng);
  try {
    ms_ssim(p, t, 3);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("at most 2") != std::string::npos);
  }
  const double v = ms_ssim(p, t, 2).item();
  CHECK(v > 0);
  CHECK(v < 1);
  CHECK(ms_ssim_value(p, t) == v);
}

TEST_CASE("three-scale MS-SSIM matches the weighted product of per-channel terms") {
  Rng rng(4);
  auto [p, t] = correlated_pair({3, 44, 50}, rng);
  const double w[3] = {0.0448, 0.2856, 0.3001};
  const double wsum = w[0] + w[1] + w[2];
  std::vector<double> prod(3, 1.0);
  Tensor x = p, y = t;
  for (int s = 0; s < 3; ++s) {
    auto terms = ssim_terms(x, y);
    for (int c = 0; c < 3; ++c) {
      const double v = s == 2 ? terms[c].ssim : terms[c].cs;
      prod[c] *= std::pow(std::max(v, 0.0), w[s] / wsum);
    }
    x = pool_oracle(x);
    y = pool_oracle(y);
  }
  const double oracle = (prod[0] + prod[1] + prod[2]) / 3;
  CHECK(std::abs(ms_ssim(p, t, 3).item() - oracle) <= 1e-9);
  CHECK(ms_ssim(t, t, 3).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("every loss is non-negative and vanishes only at the target") {
  Rng rng(5);
  auto [p, t] = correlated_pair({3, 24, 24}, rng);
  for (const auto& [label, cfg] : loss_ablation_grid()) {
    CAPTURE(label);
    CHECK(loss(p, t, cfg).item() > 0);
    CHECK(std::abs(loss(t, t, cfg).item()) < 1e-12);
  }
}

TEST_CASE("loss ablation grid has sixteen variants") {
  auto grid = loss_ablation_grid();
  REQUIRE(grid.size() == 16);
  CHECK(grid.front().first == "0.7*L1+0.3*SSIM");
  CHECK(grid.back().first == "0.7*L1+0.3*MS");
  for (const auto& [label, cfg] : grid) CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("every ablation loss passes central differences") {
  Rng rng(6);
  GradCheckOptions o;
  o.tolerance = 1e-4;
  auto [p, t] = correlated_pair({3, 22, 22}, rng);
  for (const auto& [label, cfg] : loss_ablation_grid()) {
    CAPTURE(label);
    const LossConfig c = cfg;
    const Tensor target = t;
    auto r = grad_check([&](auto& in) { return loss(in[0], target, c); }, {p}, o);
    INFO(r.worst);
    CHECK(r.max_error < 1e-4);
  }
}

TEST_CASE("weighted pair endpoints equal the plain terms bit for bit") {
  Rng rng(7);
  auto [p, t] = correlated_pair({3, 24, 24}, rng);
  CHECK(loss(p, t, LossConfig::pair(LossKind::kL1, LossKind::kMsSsim, 1.0)).item() == l1_loss(p, t).item());
  const Real ms_term = Real(1) - ms_ssim(p, t, 2).item();
  CHECK(loss(p, t, LossConfig::pair(LossKind::kL1, LossKind::kMsSsim, 0.0)).item() == ms_term);
}

TEST_CASE("weighted pair is linear in alpha") {
  Rng rng(8);
  auto [p, t] = correlated_pair({3, 24, 24}, rng);
  const double a = l1_loss(p, t).item();
  const double b = 1.0 - ms_ssim(p, t, 2).item();
  for (double alpha : {0.2, 0.5, 0.7}) {
    const double v = loss(p, t, LossConfig::pair(LossKind::kL1, LossKind::kMsSsim, alpha)).item();
    CHECK(std::abs(v - (alpha * a + (1 - alpha) * b)) < 1e-14);
  }
}

TEST_CASE("loss parsing accepts names, pairs and explicit weights") {
  auto c = parse_loss("l1+ms_ssim", 0.7);
  CHECK(c.kind == LossKind::kWeightedPair);
  CHECK(c.first == LossKind::kL1);
  CHECK(c.second == LossKind::kMsSsim);
  CHECK(c.alpha == 0.7);
  CHECK(parse_loss("0.6*l2+0.4*ms", 0.7).alpha == doctest::Approx(0.6));
  CHECK(parse_loss("sml1", 0.7).kind == LossKind::kSmoothL1);
  CHECK_THROWS(parse_loss("l1+l1", 0.5));
  CHECK_THROWS(parse_loss("0.6*l2+0.6*ms", 0.5));
  CHECK_THROWS(parse_loss("hinge", 0.5));
  CHECK_THROWS(LossConfig::pair(LossKind::kL1, LossKind::kL2, 1.5).validate());
}

TEST_CASE("masked loss ignores unmasked pixels and averages over the mask") {
  Rng rng(9);
  auto [p, t] = correlated_pair({3, 12, 12}, rng);
  std::vector<Real> m(p.numel(), 1);
  for (std::size_t i = 0; i < m.size(); i += 3) m[i] = 0;
  Tensor mask(p.shape(), m);
  std::vector<Real> t2(t.data().begin(), t.data().end());
  double oracle = 0, count = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) {
      t2[i] = 0.123;
      continue;
    }
    oracle += std::abs(p.data()[i] - t.data()[i]);
    ++count;
  }
  const auto l1 = LossConfig::single(LossKind::kL1);
  const auto a = loss(p, t, l1, &mask).item();
  const auto b = loss(p, Tensor(t.shape(), t2), l1, &mask).item();
  CHECK(a == b);
  CHECK(a == doctest::Approx(oracle / count).epsilon(1e-12));
  const Tensor empty = Tensor::zeros(p.shape());
  CHECK_THROWS_AS(loss(p, t, l1, &empty), UsageError);
}

TEST_CASE("PSNR is capped, decreasing in MSE and masked correctly") {
  CHECK(psnr_from_mse(0) == kPsnrCap);
  CHECK(psnr_from_mse(0.01) == doctest::Approx(20.0));
  double prev = INFINITY;
  for (double mse = 1e-8; mse < 1; mse *= 3) {
    CHECK(psnr_from_mse(mse) < prev);
    prev = psnr_from_mse(mse);
  }
  Tensor a({1, 1, 4}, {0, 0, 0, 0});
  Tensor b({1, 1, 4}, {0.1, 0.1, 0.5, 0.5});
  Tensor mask({1, 1, 4}, {1, 1, 0, 0});
  CHECK(masked_psnr(a, b, mask, 1) == doctest::Approx(20.0));
  CHECK(masked_psnr(a, b, mask, 0) == doctest::Approx(-10 * std::log10(0.25)));
  CHECK(psnr(a, a) == kPsnrCap);
}

TEST_CASE("metric report means are arithmetic and CSV is well formed") {
  MetricReport r;
  r.add(30, 0.9);
  r.add(40, 1.2);
  CHECK(r.mean_psnr == 35);
  CHECK(r.ms_ssim[1] == 1.0);
  CHECK(r.mean_ms_ssim == doctest::Approx(0.95));
  std::istringstream csv(r.csv());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "frame,psnr,ms_ssim");
  std::getline(csv, line);
  CHECK(line == "0,30,0.9");
  std::getline(csv, line);
  std::getline(csv, line);
  CHECK(line.rfind("mean,35,", 0) == 0);
}

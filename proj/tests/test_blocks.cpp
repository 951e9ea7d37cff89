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
#include "mnerv/blocks.h"
#include "mnerv/error.h"
#include "mnerv/grad_check.h"
#include "mnerv/ops.h"
#include "oracles.h"

using namespace mnerv;
using namespace mnerv::testing;

namespace {

GradCheckOptions strict() {
  GradCheckOptions o;
  o.tolerance = 1e-4;
  return o;
}

long long stored_elements(const std::vector<NamedParam>& params) {
  long long n = 0;
  for (const auto& p : params) n += static_cast<long long>(p.tensor.numel());
  return n;
}

}  // namespace

TEST_CASE("GRN matches the two-pass oracle") {
  Rng rng(1);
  auto x = random_tensor({5, 6, 7}, rng);
  GrnParams p{random_tensor({5}, rng), random_tensor({5}, rng)};
  auto y = grn(x, p);
  auto ref = grn_oracle(x, {p.gamma.data().begin(), p.gamma.data().end()},
                        {p.beta.data().begin(), p.beta.data().end()}, 1e-6);
  double err = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(ref[i] - y.data()[i]));
  CHECK(err <= 1e-12);
}

TEST_CASE("GRN with zero affine parameters is the identity") {
  Rng rng(2);
  auto x = random_tensor({4, 5, 5}, rng);
  CHECK(bit_equal(grn(x, GrnParams::identity(4)).data(), x.data()));
}

TEST_CASE("block gradients pass central differences") {
  auto check = [](const GradCheckFn& fn, std::vector<Shape> shapes) {
    auto r = grad_check(fn, shapes, strict());
    INFO(r.worst);
    CHECK(r.max_error < 1e-4);
  };
  check([](auto& in) { return grn(in[0], GrnParams{in[1], in[2]}); }, {{4, 5, 6}, {4}, {4}});

  for (int upscale : {1, 2, 3}) {
    for (int k : {1, 3, 5}) {
      CAPTURE(upscale);
      CAPTURE(k);
      check(
          [&](auto& in) {
            MNeRVBlockParams p{in[1], in[2], upscale, k};
            return mnerv_block(in[0], p);
          },
          {{3, 4, 4}, {2 * upscale * upscale, 3, k, k}, {2 * upscale * upscale}});
    }
  }

  Rng rng(4);
  for (bool with_grn : {false, true}) {
    CAPTURE(with_grn);
    auto base = ConvNeXtBlockParams::init(3, with_grn, rng);
    // Non-trivial GRN and norm affine so every branch carries gradient.
    check(
        [&](auto& in) {
          ConvNeXtBlockParams p = base;
          p.dw_weight = in[1];
          p.ln_gamma = in[2];
          p.expand_weight = in[3];
          p.project_weight = in[4];
          if (with_grn) p.grn = GrnParams{in[5], in[6]};
          return convnext_block(in[0], p);
        },
        with_grn ? std::vector<Shape>{{3, 8, 8}, {3, 1, 7, 7}, {3}, {12, 3, 1, 1}, {3, 12, 1, 1}, {12}, {12}}
                 : std::vector<Shape>{{3, 8, 8}, {3, 1, 7, 7}, {3}, {12, 3, 1, 1}, {3, 12, 1, 1}});
  }

  check([](auto& in) { return output_head(in[0], OutputHeadParams{in[1], in[2]}); },
        {{4, 5, 5}, {3, 4, 1, 1}, {3}});
}

TEST_CASE("MNeRV block upsamples by its stride") {
  Rng rng(3);
  for (int s : {1, 2, 4, 5}) {
    auto p = MNeRVBlockParams::init(6, 4, 3, s, rng);
    auto y = mnerv_block(random_tensor({6, 3, 5}, rng), p);
    CHECK(y.shape() == Shape{4, 3 * s, 5 * s});
    CHECK(p.in_channels() == 6);
    CHECK(p.out_channels() == 4);
  }
  CHECK_THROWS_AS(MNeRVBlockParams::init(6, 4, 2, 2, rng), ConfigError);
}

TEST_CASE("ConvNeXt block preserves shape") {
  Rng rng(5);
  for (int c : {3, 16, 64}) {
    auto p = ConvNeXtBlockParams::init(c, true, rng);
    auto y = convnext_block(random_tensor({c, 6, 9}, rng), p);
    CHECK(y.shape() == Shape{c, 6, 9});
  }
}

TEST_CASE("block parameter counts match the closed form and the stored elements") {
  Rng rng(6);
  auto m = MNeRVBlockParams::init(10, 7, 5, 2, rng);
  const long long conv = 10LL * 28 * 25 + 28;
  CHECK(m.param_count() == conv);
  CHECK(conv_param_count(10, 28, 5) == conv);
  std::vector<NamedParam> mp;
  m.collect("b", mp);
  CHECK(stored_elements(mp) == conv);

  for (bool with_grn : {false, true}) {
    auto c = ConvNeXtBlockParams::init(8, with_grn, rng);
    const long long expect = (8 * 49 + 8) + 2 * 8 + (8 * 32 + 32) + (32 * 8 + 8) + (with_grn ? 64 : 0);
    CHECK(c.param_count() == expect);
    std::vector<NamedParam> cp;
    c.collect("c", cp);
    CHECK(stored_elements(cp) == expect);
  }

  auto h = OutputHeadParams::init(9, rng);
  CHECK(h.param_count() == 9 * 3 + 3);
}

TEST_CASE("initialization follows the fan-in rule") {
  Rng rng(7);
  auto w = init_conv_weight(8, 5, 3, rng);
  const double bound = 1.0 / std::sqrt(5.0 * 9.0);
  for (auto v : w.data()) CHECK(std::abs(v) <= bound);
  auto c = ConvNeXtBlockParams::init(4, true, rng);
  for (auto v : c.grn->gamma.data()) CHECK(v == 0);
  for (auto v : c.ln_gamma.data()) CHECK(v == 1);
  for (auto v : c.expand_bias.data()) CHECK(v == 0);
}

TEST_CASE("output head maps zero parameters to one half and stays in (0,1)") {
  OutputHeadParams zero{Tensor::zeros({3, 4, 1, 1}), Tensor::zeros({3})};
  Rng rng(8);
  auto half = output_head(random_tensor({4, 3, 3}, rng), zero);
  for (auto v : half.data()) CHECK(v == Real(0.5));
  auto h = OutputHeadParams::init(4, rng);
  auto y = output_head(random_tensor({4, 3, 3}, rng, -50, 50), h);
  for (auto v : y.data()) {
    CHECK(v > 0);
    CHECK(v < 1);
  }
}

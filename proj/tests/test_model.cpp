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
#include "mnerv/model.h"
#include "oracles.h"

using namespace mnerv;
using namespace mnerv::testing;

namespace {

ArchConfig small_embedding(ArchConfig c) {
  c.embed_height = 1;
  c.embed_width = 1;
  return c;
}

}  // namespace

TEST_CASE("defaults are the 640x1280 seven-layer configuration") {
  ArchConfig c;
  CHECK(c.strides == std::vector<int>{5, 2, 2, 2, 2, 2, 2});
  CHECK(c.kernels == std::vector<int>{1, 5, 5, 3, 3, 3, 3});
  CHECK(c.attenuation == 1.2);
  CHECK(c.embed_channels == 16);
  CHECK(c.scale() == 320);
  CHECK(c.frame_height() == 640);
  CHECK(c.frame_width() == 1280);
  CHECK(c.toggles == ArchToggles{true, true, true});
}

TEST_CASE("config validation rejects inconsistent plans") {
  ArchConfig c;
  c.kernels.pop_back();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ArchConfig{};
  c.kernels[2] = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ArchConfig{};
  c.attenuation = 0.9;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("channel widths round half up and floor at the minimum") {
  ArchConfig c;
  CHECK(attenuated_widths(c, 90) == std::vector<int>{90, 75, 63, 52, 43, 36, 30});
  // 30 / 1.2 = 25 exactly; 25 / 1.2 = 20.83
  CHECK(attenuated_widths(c, 30) == std::vector<int>{30, 25, 21, 17, 14, 12, 12});
  CHECK(attenuated_widths(c, 12) == std::vector<int>{12, 12, 12, 12, 12, 12, 12});
}

TEST_CASE("default configuration plans to roughly 1.5M parameters") {
  ArchConfig c;
  auto plan = plan_channels(c);
  CHECK(plan.widths.front() == 90);
  CHECK(plan.realized_size <= c.target_size);
  CHECK(plan.realized_size >= 0.98 * c.target_size);
  for (std::size_t i = 1; i < plan.widths.size(); ++i) {
    CHECK(plan.widths[i] <= plan.widths[i - 1]);
    CHECK(plan.widths[i] >= c.min_width);
  }
}

TEST_CASE("steep attenuation pins every later layer at the minimum width") {
  for (ArchConfig c : {ArchConfig{}, ArchConfig::tiny()}) {
    c.attenuation = 1e9;
    const auto plan = plan_channels(c);
    CAPTURE(plan.widths.front());
    for (std::size_t i = 1; i < plan.widths.size(); ++i) CHECK(plan.widths[i] == c.min_width);
  }
}

TEST_CASE("realized size lands within 2% below the target and matches enumeration") {
  std::vector<ArchConfig> archs{small_embedding(ArchConfig{}), ArchConfig::tiny()};
  ArchConfig hnerv = archs[0];
  hnerv.toggles.multilayer = false;
  archs.push_back(hnerv);
  for (const auto& arch : archs) {
    for (long long target : {100'000LL, 137'000LL, 250'000LL, 600'000LL, 1'500'000LL, 3'000'000LL}) {
      ArchConfig c = arch;
      c.target_size = target;
      CAPTURE(target);
      CAPTURE(c.strides.size());
      CAPTURE(c.toggles.multilayer);
      ChannelPlan plan;
      try {
        plan = plan_channels(c);
      } catch (const PlanningError& e) {
        CHECK(e.minimum_size() > target);
        continue;
      }
      CHECK(plan.realized_size <= target);
      CHECK(plan.realized_size >= 0.98 * static_cast<double>(target));
      auto m = build_model(c, plan, 0);
      CHECK(enumerate(m.decoder_parameters()) == plan.realized_size);
      CHECK(m.decoder_size() == plan.realized_size);
    }
  }
}

TEST_CASE("planner is monotone in the target and names the minimum on failure") {
  ArchConfig c;
  int prev = 0;
  for (long long t = 60'000; t <= 3'000'000; t += 97'000) {
    c.target_size = t;
    const int c0 = plan_channels(c).widths.front();
    CHECK(c0 >= prev);
    prev = c0;
  }
  c.target_size = 1000;
  try {
    plan_channels(c);
    FAIL("expected PlanningError");
  } catch (const PlanningError& e) {
    CHECK(e.minimum_size() == decoder_param_count(c, attenuated_widths(c, c.min_width)));
  }
}

TEST_CASE("fit_strides keeps the list length and hits the requested scale") {
  CHECK(fit_strides({5, 4, 2, 2, 2}, 160) == std::vector<int>{5, 4, 2, 2, 2});
  CHECK(fit_strides({5, 4, 2, 2, 2}, 320) == std::vector<int>{5, 4, 4, 2, 2});
  CHECK(fit_strides({5, 4, 2, 2, 2}, 20) == std::vector<int>{5, 4, 1, 1, 1});
  for (long long s : {20LL, 40LL, 80LL, 160LL, 320LL, 640LL}) {
    for (auto base : {std::vector<int>{5, 4, 2, 2, 2}, std::vector<int>{5, 2, 2, 2, 2, 2, 2}}) {
      auto out = fit_strides(base, s);
      long long p = 1;
      for (int v : out) p *= v;
      CHECK(p == s);
      CHECK(out.size() == base.size());
    }
  }
}

TEST_CASE("toggles change the model structure") {
  ArchConfig base = ArchConfig::tiny();
  auto describe = [](const ArchConfig& c) {
    auto m = build_model(c, plan_channels(c), 0);
    return std::make_pair(m.decoder.size() + (m.stem ? 100 : 0), enumerate(m.parameters()));
  };
  const auto ref = describe(base);
  for (int which = 0; which < 3; ++which) {
    ArchConfig c = base;
    if (which == 0) c.toggles.grn = false;
    if (which == 1) c.toggles.multilayer = false;
    if (which == 2) c.toggles.header_layer = false;
    CAPTURE(which);
    CHECK(describe(c) != ref);
  }
}

TEST_CASE("encoder mirrors the decoder and produces the embedding shape") {
  ArchConfig c = ArchConfig::tiny();
  auto m = build_model(c, plan_channels(c), 0);
  CHECK(m.encoder.size() == m.decoder.size());
  CHECK(m.decoder.size() == c.strides.size());
  Rng rng(1);
  auto frame = random_tensor({3, c.frame_height(), c.frame_width()}, rng, 0, 1);
  auto emb = encode(m, frame);
  CHECK(emb.shape() == m.embedding_shape());
  CHECK(emb.shape() == Shape{16, 2, 4});
  auto out = decode(m, emb);
  CHECK(out.shape() == Shape{3, 40, 80});
  CHECK_THROWS_AS(encode(m, random_tensor({3, 41, 80}, rng)), ConfigError);
}

TEST_CASE("build_model is reproducible for a fixed seed") {
  ArchConfig c = ArchConfig::tiny();
  auto plan = plan_channels(c);
  auto a = build_model(c, plan, 42).parameters();
  auto b = build_model(c, plan, 42).parameters();
  auto d = build_model(c, plan, 43).parameters();
  REQUIRE(a.size() == b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(bit_equal(a[i].tensor.data(), b[i].tensor.data()));
    differs = differs || !bit_equal(a[i].tensor.data(), d[i].tensor.data());
  }
  CHECK(differs);
}

TEST_CASE("parameter analysis partitions the model") {
  ArchConfig c = small_embedding(ArchConfig{});
  auto m = build_model(c, plan_channels(c), 0);
  auto rows = analyze_params(m);
  REQUIRE(rows.size() == c.strides.size() + 2);
  CHECK(rows.front().label == "encoder");
  CHECK(rows[1].label == "dec1");
  CHECK(rows.back().label == "head");
  long long total = 0;
  double frac = 0;
  for (const auto& r : rows) {
    total += r.params;
    frac += r.fraction;
  }
  CHECK(total == m.plan.realized_size + m.encoder_size());
  CHECK(frac == doctest::Approx(1.0));

  auto plan_rows = analyze_plan(c, m.plan);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(plan_rows[i].params == rows[i].params);

  std::istringstream csv(params_csv(rows));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "layer,params,fraction");
  int n = 0;
  while (std::getline(csv, line)) ++n;
  CHECK(n == static_cast<int>(c.strides.size()) + 2);

  std::vector<double> dec;
  for (const auto& r : rows)
    if (r.label.rfind("dec", 0) == 0) dec.push_back(static_cast<double>(r.params));
  CHECK(decoder_layer_cv(rows) == doctest::Approx(cv_oracle(dec)).epsilon(1e-12));
}

TEST_CASE("disabling the header layer adds a stem counted in the decoder") {
  ArchConfig c = ArchConfig::tiny();
  c.toggles.header_layer = false;
  auto plan = plan_channels(c);
  auto m = build_model(c, plan, 0);
  REQUIRE(m.stem.has_value());
  CHECK(m.decoder_size() == plan.realized_size);
  auto rows = analyze_params(m);
  CHECK(rows[1].label == "stem");
}

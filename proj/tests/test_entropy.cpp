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
#include <map>

#include "doctest.h"
#include "mnerv/entropy.h"
#include "mnerv/error.h"
#include "mnerv/random.h"

using namespace mnerv;

namespace {

// Shannon bound of the empirical distribution, in bytes.
double entropy_bytes(const std::vector<std::uint32_t>& s) {
  std::map<std::uint32_t, double> counts;
  for (auto x : s) counts[x] += 1;
  double bits = 0;
  for (auto [k, c] : counts) bits -= c * std::log2(c / static_cast<double>(s.size()));
  return bits / 8;
}

std::vector<std::uint32_t> uniform_symbols(Rng& rng, std::size_t n, int bits) {
  std::vector<std::uint32_t> s(n);
  for (auto& x : s) x = static_cast<std::uint32_t>(uniform_index(rng, 1ULL << bits));
  return s;
}

}  // namespace

TEST_CASE("round trip is lossless across lengths and widths") {
  Rng rng(1);
  for (int bits = 4; bits <= 16; ++bits) {
    for (std::size_t n : {0UL, 1UL, 2UL, 17UL, 1000UL, 10000UL}) {
      auto s = uniform_symbols(rng, n, bits);
      CAPTURE(bits);
      CAPTURE(n);
      CHECK(entropy::decode(entropy::encode(s, bits)) == s);
    }
  }
}

TEST_CASE("round trip is lossless on skewed random sources") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int bits = 4 + static_cast<int>(uniform_index(rng, 13));
    const std::size_t n = uniform_index(rng, 10001);
    // Geometric-like symbols concentrate mass on a few values.
    std::vector<std::uint32_t> s(n);
    const double p = uniform(rng, 0.05, 0.95);
    for (auto& x : s) {
      std::uint32_t v = 0;
      while (uniform01(rng) > p && v + 1 < (1u << bits)) ++v;
      x = v;
    }
    CAPTURE(trial);
    CHECK(entropy::decode(entropy::encode(s, bits)) == s);
  }
}

TEST_CASE("frequency totals above the coder limit are rescaled losslessly") {
  Rng rng(3);
  auto s = uniform_symbols(rng, 200'000, 16);
  s.insert(s.end(), 100'000, 7);
  CHECK(entropy::decode(entropy::encode(s, 16)) == s);
}

TEST_CASE("a constant source costs almost nothing") {
  std::vector<std::uint32_t> s(1000, 42);
  const auto payload = entropy::encode(s, 8);
  CHECK(payload.size() <= entropy::kFixedHeaderBytes + 16);
  CHECK(entropy::decode(payload) == s);
}

TEST_CASE("a skewed binary source codes near its entropy") {
  Rng rng(4);
  std::vector<std::uint32_t> s(20000);
  for (auto& x : s) x = uniform01(rng) < 0.9 ? 0u : 1u;
  const auto payload = entropy::encode(s, 8);
  // Header: 6 fixed + 4 alphabet size + 2 x 6 table entries + 4 coded length.
  const double header = entropy::kFixedHeaderBytes + 4 + 12 + 4;
  const double bound = static_cast<double>(s.size()) * 0.469 / 8;
  CHECK(payload.size() <= 1.05 * bound + header);
  CHECK(payload.size() <= 1.05 * entropy_bytes(s) + header);
}

TEST_CASE("payload never exceeds the packed size plus the header") {
  Rng rng(5);
  for (int bits : {4, 8, 12, 16}) {
    auto s = uniform_symbols(rng, 3000, bits);
    const auto payload = entropy::encode(s, bits);
    CHECK(payload.size() <= (s.size() * bits + 7) / 8 + entropy::kFixedHeaderBytes);
  }
}

TEST_CASE("invalid input is rejected") {
  CHECK_THROWS_AS(entropy::encode(std::vector<std::uint32_t>{16}, 4), UsageError);
  CHECK_THROWS_AS(entropy::encode(std::vector<std::uint32_t>{1}, 0), UsageError);
  CHECK_THROWS_AS(entropy::decode(std::vector<std::uint8_t>{0, 8}), LoadError);
  CHECK_THROWS_AS(entropy::decode(std::vector<std::uint8_t>{9, 8, 0, 0, 0, 0}), LoadError);
}

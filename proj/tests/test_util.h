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

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mnerv/random.h"
#include "mnerv/tensor.h"

namespace mnerv::testing {

using mnerv::Real;
using mnerv::Shape;
using mnerv::Tensor;

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1, double hi = 1,
                            bool requires_grad = false) {
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(uniform(rng, lo, hi));
  return Tensor(shape, std::move(v), requires_grad);
}

inline double max_abs_diff(std::span<const Real> a, std::span<const Real> b) {
  double m = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return a.size() == b.size() ? m : INFINITY;
}

inline bool bit_equal(std::span<const Real> a, std::span<const Real> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

// Direct six-loop cross-correlation with explicit bounds tests.
inline std::vector<double> naive_conv(const Tensor& in, const Tensor& w, const Tensor* bias,
                                      int stride, int pad, int* out_h, int* out_w) {
  const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const int O = w.dim(0), k = w.dim(2);
  const int Ho = (H + 2 * pad - k) / stride + 1, Wo = (W + 2 * pad - k) / stride + 1;
  *out_h = Ho;
  *out_w = Wo;
  std::vector<double> out(static_cast<std::size_t>(O) * Ho * Wo, 0.0);
  auto x = in.data();
  auto f = w.data();
  for (int o = 0; o < O; ++o) {
    for (int y = 0; y < Ho; ++y) {
      for (int xo = 0; xo < Wo; ++xo) {
        double acc = bias ? static_cast<double>(bias->data()[o]) : 0.0;
        for (int c = 0; c < C; ++c) {
          for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
              const int yy = y * stride + i - pad, xx = xo * stride + j - pad;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              acc += static_cast<double>(x[(c * H + yy) * W + xx]) *
                     static_cast<double>(f[((o * C + c) * k + i) * k + j]);
            }
          }
        }
        out[(static_cast<std::size_t>(o) * Ho + y) * Wo + xo] = acc;
      }
    }
  }
  return out;
}

}  // namespace mnerv::testing

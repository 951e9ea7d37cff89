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

// Independent reference implementations shared by the unit tests and the
// acceptance suite. Everything here is computed in double from first
// principles, without the library's kernels.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mnerv/blocks.h"
#include "test_util.h"

namespace mnerv::testing {

// Target plus bounded noise, so similarity terms stay well inside (0,1).
inline std::pair<Tensor, Tensor> correlated_pair(const Shape& shape, Rng& rng, double noise = 0.15) {
  auto target = random_tensor(shape, rng, 0, 1);
  std::vector<Real> p(target.numel());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = static_cast<Real>(std::clamp(target.data()[i] + uniform(rng, -noise, noise), 0.0, 1.0));
  }
  return {Tensor(shape, std::move(p)), target};
}

struct ChannelTerms {
  double ssim = 0;
  double cs = 0;
};

// SSIM and contrast-structure means per channel, with an explicit 2-D
// Gaussian window evaluated at every valid position.
inline std::vector<ChannelTerms> ssim_terms(const Tensor& a, const Tensor& b) {
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2), K = 11;
  double w2[11][11];
  double total = 0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      const double di = i - 5, dj = j - 5;
      w2[i][j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += w2[i][j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  std::vector<ChannelTerms> out(C);
  for (int c = 0; c < C; ++c) {
    double chan = 0, chan_cs = 0;
    for (int y = 0; y + K <= H; ++y)
      for (int x = 0; x + K <= W; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < K; ++j) {
            const double w = w2[i][j] / total;
            const double va = a.data()[(c * H + y + i) * W + x + j];
            const double vb = b.data()[(c * H + y + i) * W + x + j];
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        const double cs = (2 * cov + c2) / (va + vb + c2);
        chan += cs * (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        chan_cs += cs;
      }
    const double n = (H - K + 1) * (W - K + 1);
    out[c] = {chan / n, chan_cs / n};
  }
  return out;
}

inline double ssim_oracle(const Tensor& a, const Tensor& b) {
  double sum = 0;
  auto terms = ssim_terms(a, b);
  for (const auto& t : terms) sum += t.ssim;
  return sum / static_cast<double>(terms.size());
}

inline Tensor pool_oracle(const Tensor& x) {
  const int C = x.dim(0), H = x.dim(1) / 2, W = x.dim(2) / 2;
  std::vector<Real> v;
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y)
      for (int z = 0; z < W; ++z) {
        auto at = [&](int dy, int dx) { return x.data()[(c * x.dim(1) + 2 * y + dy) * x.dim(2) + 2 * z + dx]; };
        v.push_back((at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / 4);
      }
  return Tensor({C, H, W}, v);
}

// Two passes: channel norms first, then the normalized residual update.
inline std::vector<double> grn_oracle(const Tensor& x, const std::vector<double>& gamma,
                               const std::vector<double>& beta, double eps) {
  const int C = x.dim(0);
  const std::size_t plane = x.numel() / C;
  std::vector<double> norm(C);
  for (int c = 0; c < C; ++c) {
    double s = 0;
    for (std::size_t p = 0; p < plane; ++p) s += std::pow(x.data()[c * plane + p], 2);
    norm[c] = std::sqrt(s + eps);
  }
  double mean = 0;
  for (double g : norm) mean += g;
  mean /= C;
  std::vector<double> out(x.numel());
  for (int c = 0; c < C; ++c) {
    const double n = norm[c] / (mean + eps);
    for (std::size_t p = 0; p < plane; ++p) {
      const double v = x.data()[c * plane + p];
      out[c * plane + p] = gamma[c] * (v * n) + beta[c] + v;
    }
  }
  return out;
}

inline long long enumerate(const std::vector<NamedParam>& params) {
  long long n = 0;
  for (const auto& p : params) n += static_cast<long long>(p.tensor.numel());
  return n;
}

// Population coefficient of variation, computed directly.
inline double cv_oracle(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size())) / m;
}

}  // namespace mnerv::testing

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

#include <optional>
#include <string>
#include <vector>

#include "mnerv/random.h"
#include "mnerv/tensor.h"

namespace mnerv::inline MNERV_PRECISION_NS {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

// C_in * C_out * k^2 weights plus C_out biases.
long long conv_param_count(long long c_in, long long c_out, long long k);

// Conv weight (c_out, c_in, k, k) uniform in +-1/sqrt(c_in*k*k), zero bias.
Tensor init_conv_weight(int c_out, int c_in, int k, Rng& rng);

/// Global Response Normalization on (C,H,W) features.
struct GrnParams {
  Tensor gamma;  // (C)
  Tensor beta;   // (C)
  Real eps = static_cast<Real>(1e-6);

  // gamma = beta = 0, so a fresh layer is the identity.
  static GrnParams identity(int channels);
};

// G[c] = sqrt(sum_hw x^2 + eps), N[c] = G[c] / (mean_c G + eps),
// out = gamma * (x * N) + beta + x.
Tensor grn(const Tensor& input, const GrnParams& params);

/// conv(k, stride 1, pad k/2) -> pixel_shuffle(s) -> gelu.
struct MNeRVBlockParams {
  Tensor weight;  // (c_out * s^2, c_in, k, k)
  Tensor bias;    // (c_out * s^2)
  int upscale = 1;
  int kernel = 1;

  static MNeRVBlockParams init(int c_in, int c_out, int kernel, int upscale, Rng& rng);
  int in_channels() const { return weight.dim(1); }
  int out_channels() const { return weight.dim(0) / (upscale * upscale); }
  long long param_count() const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

Tensor mnerv_block(const Tensor& input, const MNeRVBlockParams& params);

/// Residual block: depthwise k_dw conv, channel layer norm, 1x1 expansion to
/// 4C, GELU, optional GRN, 1x1 projection back to C.
struct ConvNeXtBlockParams {
  static constexpr int kDepthwiseKernel = 7;
  static constexpr int kExpansion = 4;

  Tensor dw_weight;  // (C,1,7,7)
  Tensor dw_bias;
  Tensor ln_gamma;
  Tensor ln_beta;
  Tensor expand_weight;  // (4C,C,1,1)
  Tensor expand_bias;
  std::optional<GrnParams> grn;
  Tensor project_weight;  // (C,4C,1,1)
  Tensor project_bias;

  static ConvNeXtBlockParams init(int channels, bool with_grn, Rng& rng);
  int channels() const { return dw_weight.dim(0); }
  long long param_count() const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

Tensor convnext_block(const Tensor& input, const ConvNeXtBlockParams& params);

/// 1x1 conv to RGB followed by a sigmoid.
struct OutputHeadParams {
  Tensor weight;  // (3,C,1,1)
  Tensor bias;    // (3)

  static OutputHeadParams init(int channels, Rng& rng);
  long long param_count() const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

Tensor output_head(const Tensor& input, const OutputHeadParams& params);

}  // namespace mnerv::inline MNERV_PRECISION_NS

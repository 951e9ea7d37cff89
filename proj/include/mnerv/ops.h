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

#include <span>

#include "mnerv/tensor.h"

// Differentiable operations over Tensor. Image-like tensors are (C,H,W);
// binary elementwise ops require identical shapes (no broadcasting).

namespace mnerv::inline MNERV_PRECISION_NS::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, Real s);
Tensor mul_scalar(const Tensor& a, Real s);
// x^p elementwise; the derivative at x == 0 is taken as 0.
Tensor pow_scalar(const Tensor& a, Real p);

Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor gelu(const Tensor& a);

// Reductions to shape (1).
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// (C,H,W) -> (C): spatial mean of each channel.
Tensor channel_mean(const Tensor& a);

/// Cross-correlation with zero padding.
/// input (C_in,H,W), weight (C_out,C_in,k,k), bias (C_out) or undefined.
/// Output spatial size is floor((H + 2*padding - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding);

// Per-channel convolution: weight (C,1,k,k), bias (C) or undefined.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride, int padding);

// (C*s*s,H,W) -> (C,H*s,W*s) with out[c, y*s+a, x*s+b] = in[c*s*s + a*s + b, y, x].
Tensor pixel_shuffle(const Tensor& input, int s);
// Inverse of pixel_shuffle.
Tensor pixel_unshuffle(const Tensor& input, int s);

// Normalizes across the channel axis at every spatial location, then applies
// the per-channel affine transform.
Tensor layer_norm_channels(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                           Real eps);

// 2x2 average pooling, odd trailing rows/columns dropped.
Tensor avg_pool2(const Tensor& input);

// Separable filter with the same 1-D taps along both axes, no padding.
// (C,H,W) -> (C, H-K+1, W-K+1).
Tensor separable_filter_valid(const Tensor& input, std::span<const double> taps);

}  // namespace mnerv::inline MNERV_PRECISION_NS::ops

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

#include <string>
#include <utility>
#include <vector>

#include "mnerv/tensor.h"

namespace mnerv::inline MNERV_PRECISION_NS {

enum class LossKind { kL1, kL2, kSmoothL1, kSsim, kMsSsim, kWeightedPair };

std::string loss_kind_name(LossKind kind);

/// A single loss term, or alpha * first + (1 - alpha) * second.
/// Similarity terms enter as (1 - similarity).
struct LossConfig {
  LossKind kind = LossKind::kWeightedPair;
  double alpha = 0.7;
  LossKind first = LossKind::kL1;
  LossKind second = LossKind::kMsSsim;

  static LossConfig single(LossKind kind);
  static LossConfig pair(LossKind first, LossKind second, double alpha);

  void validate() const;
  // e.g. "0.7*L1+0.3*MS", "SML1"
  std::string label() const;
};

/// Parses "l1", "l2", "sml1", "ssim", "ms_ssim" (aliases: s, ms), a pair
/// "l1+ms_ssim" weighted by `alpha`, or an explicitly weighted pair
/// "0.7*l1+0.3*ms" whose weights must sum to one.
LossConfig parse_loss(const std::string& text, double alpha);

// The sixteen loss variants of the loss ablation grid, labelled.
std::vector<std::pair<std::string, LossConfig>> loss_ablation_grid();

// Scalar losses on (3,H,W) tensors; gradients flow to `pred`.
// When `mask` is given (same shape, values in {0,1}) both images are
// multiplied by it and pixel terms are averaged over mask == 1 entries.
Tensor loss(const Tensor& pred, const Tensor& target, const LossConfig& config,
            const Tensor* mask = nullptr);

Tensor l1_loss(const Tensor& pred, const Tensor& target);
Tensor l2_loss(const Tensor& pred, const Tensor& target);
// 0.5 d^2 / beta for |d| < beta, |d| - 0.5 beta otherwise; mean-reduced.
Tensor smooth_l1(const Tensor& pred, const Tensor& target, Real beta = Real(1));

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Largest scale count (<= 5) such that min(H,W) >= 11 * 2^(scales-1); 0 if
// the image cannot hold a single window.
int max_ms_ssim_scales(int height, int width);

// Mean SSIM over channels (11x11 Gaussian window, valid region).
Tensor ssim(const Tensor& pred, const Tensor& target);

/// Multi-scale SSIM with 2x2 average pooling between scales. Contrast-
/// structure terms at every scale but the coarsest, full SSIM there; each
/// term is clamped at zero and raised to the canonical weight, truncated and
/// renormalized for fewer than five scales. Averaged over channels.
Tensor ms_ssim(const Tensor& pred, const Tensor& target, int scales);

// ms_ssim at the largest feasible scale count, as a plain number in [0,1].
double ms_ssim_value(const Tensor& pred, const Tensor& target);

inline constexpr double kPsnrCap = 100.0;

// -10 log10(MSE) on [0,1] images; kPsnrCap when MSE == 0.
double psnr(const Tensor& pred, const Tensor& target);
double psnr_from_mse(double mse);

// PSNR restricted to elements where mask == `select` (mask is (3,H,W) or (1,H,W)).
double masked_psnr(const Tensor& pred, const Tensor& target, const Tensor& mask, Real select);

// Mean single-scale SSIM-map value over windows centred where mask == select.
double masked_ssim(const Tensor& pred, const Tensor& target, const Tensor& mask, Real select);

struct MetricReport {
  std::vector<double> psnr;
  std::vector<double> ms_ssim;
  double mean_psnr = 0;
  double mean_ms_ssim = 0;

  void add(double frame_psnr, double frame_ms_ssim);
  // "frame,psnr,ms_ssim" rows plus a "mean" summary row.
  std::string csv() const;
};

MetricReport evaluate_frames(const std::vector<Tensor>& pred, const std::vector<Tensor>& target);

}  // namespace mnerv::inline MNERV_PRECISION_NS

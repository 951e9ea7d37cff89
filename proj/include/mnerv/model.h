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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mnerv/blocks.h"
#include "mnerv/tensor.h"

namespace mnerv::inline MNERV_PRECISION_NS {

struct ArchToggles {
  bool grn = true;           // GRN inside encoder ConvNeXt blocks
  bool multilayer = true;    // false swaps in the 5-layer HNeRV-shaped plan
  bool header_layer = true;  // false adds a stem conv on the embedding

  bool operator==(const ArchToggles&) const = default;
};

/// Architecture hyperparameters. Defaults are the 640x1280 seven-layer setup.
struct ArchConfig {
  std::vector<int> strides{5, 2, 2, 2, 2, 2, 2};
  std::vector<int> kernels{1, 5, 5, 3, 3, 3, 3};
  double attenuation = 1.2;
  int embed_channels = 16;
  int embed_height = 2;
  int embed_width = 4;
  long long target_size = 1'500'000;
  int min_width = 12;
  int encoder_width = 64;
  ArchToggles toggles;

  // Throws ConfigError on any violated invariant.
  void validate() const;
  long long scale() const;  // product(strides)
  int frame_height() const;
  int frame_width() const;

  // strides {5,2,2}, kernels {1,3,3}, 80k budget: fits 40x80 frames.
  static ArchConfig tiny();

  bool operator==(const ArchConfig&) const = default;
};

// Strides and kernels of the decoder actually built.
struct LayerPlan {
  std::vector<int> strides;
  std::vector<int> kernels;
};

inline const std::vector<int> kHNeRVStrides{5, 4, 2, 2, 2};
inline const std::vector<int> kHNeRVKernels{1, 3, 5, 5, 5};

/// Rescales a stride list so its product equals `total_scale`, keeping the
/// layer count. Leading strides are kept while they divide the remaining
/// factor; any leftover factor is multiplied onto the smallest non-unit
/// stride after the first layer.
std::vector<int> fit_strides(const std::vector<int>& strides, long long total_scale);

// The decoder layer plan, honouring the multilayer toggle.
LayerPlan effective_layers(const ArchConfig& config);

struct ChannelPlan {
  std::vector<int> widths;  // output width of each decoder layer
  long long realized_size = 0;

  bool operator==(const ChannelPlan&) const = default;
};

// Decoder parameter count (stem + blocks + head) for explicit widths.
long long decoder_param_count(const ArchConfig& config, const std::vector<int>& widths);

// Widths before residual fill: widths[0] = c0, then max(round(c0 / r^i), min_width).
std::vector<int> attenuated_widths(const ArchConfig& config, int c0);

/// Chooses decoder widths for the parameter budget. C0 is the largest width
/// whose attenuated plan fits; remaining budget is then spent one channel at
/// a time on any layer (last layer first), keeping the widths non-increasing. Throws PlanningError if even min_width everywhere
/// exceeds the budget.
ChannelPlan plan_channels(const ArchConfig& config);

struct EncoderStage {
  int stride = 1;
  Tensor down_weight;  // (C, C_prev, stride, stride)
  Tensor down_bias;
  ConvNeXtBlockParams block;
};

// 3x3 conv + GELU on the embedding, present only without the header layer.
struct StemParams {
  Tensor weight;
  Tensor bias;
};

struct Model {
  ArchConfig config;
  ChannelPlan plan;
  LayerPlan layers;

  std::vector<EncoderStage> encoder;
  Tensor embed_weight;  // (embed_channels, encoder_width, 1, 1)
  Tensor embed_bias;

  std::optional<StemParams> stem;
  std::vector<MNeRVBlockParams> decoder;
  OutputHeadParams head;

  std::vector<NamedParam> encoder_parameters() const;
  std::vector<NamedParam> decoder_parameters() const;  // stem, blocks, head
  std::vector<NamedParam> parameters() const;          // encoder then decoder
  long long encoder_size() const;
  long long decoder_size() const;
  Shape embedding_shape() const;
};

/// Assembles the encoder/decoder for a plan. Same seed, same weights.
Model build_model(const ArchConfig& config, const ChannelPlan& plan, std::uint64_t seed);

// (3,H,W) frame with H, W divisible by the decoder scale -> (C_e, H/scale, W/scale).
Tensor encode(const Model& model, const Tensor& frame);

// Embedding -> (3, h*scale, w*scale) with values in (0,1).
Tensor decode(const Model& model, const Tensor& embedding);

struct LayerParams {
  std::string label;
  long long params = 0;
  double fraction = 0;
};

// One row per decoder layer (stem included) plus "encoder" and "head".
std::vector<LayerParams> analyze_params(const Model& model);

// Same table from the plan alone, without allocating weights.
std::vector<LayerParams> analyze_plan(const ArchConfig& config, const ChannelPlan& plan);

// `layer,params,fraction` with a header row.
std::string params_csv(const std::vector<LayerParams>& rows);

// Population coefficient of variation of the per-decoder-layer counts
// (rows labelled decN).
double decoder_layer_cv(const std::vector<LayerParams>& rows);

}  // namespace mnerv::inline MNERV_PRECISION_NS

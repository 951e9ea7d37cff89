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
#include <string>
#include <utility>
#include <vector>

#include "mnerv/codec.h"
#include "mnerv/model.h"
#include "mnerv/trainer.h"

namespace mnerv::inline MNERV_PRECISION_NS {

/// Synthetic video: two colours blended by a sinusoidal ramp that moves
/// `shift` pixels to the right per frame.
VideoDataset make_fixture(int frames = 4, int height = 40, int width = 80, int shift = 4);

// decode((1 - w) * left + w * right)
Tensor interpolate_frame(const Model& model, const Tensor& left, const Tensor& right, double w);

struct InterpolationSplit {
  std::vector<std::size_t> seen;      // even indices
  std::vector<std::size_t> held_out;  // odd indices
  // Held-out frames with a seen frame on both sides, with those neighbours.
  std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> evaluated;

  static InterpolationSplit every_other(std::size_t frames);
};

struct InterpolationResult {
  MetricReport interpolated;  // held-out frames decoded from blended embeddings
  MetricReport repeated;      // baseline: the left neighbour shown again
  TrainResult training;
  std::vector<std::size_t> held_out_reads_during_training;
};

/// Trains `model` on the seen frames only, then scores every evaluable
/// held-out frame at w = 0.5 against the frame-repeat baseline.
InterpolationResult eval_interpolation(Model& model, const VideoDataset& data,
                                       const InterpolationSplit& split, const TrainConfig& config);

enum class MaskKind { kCentralBox, kRandomBoxes };

struct InpaintSpec {
  MaskKind kind = MaskKind::kCentralBox;
  double fraction = 0.1;  // share of the frame area hidden from training
  std::uint64_t seed = 0;
  int boxes = 3;  // random-box mode only
};

// One (3,H,W) mask per frame, 0 inside the hidden area.
std::vector<Tensor> build_masks(const InpaintSpec& spec, std::size_t frames, int height, int width);

struct InpaintResult {
  MetricReport full;            // whole frame
  double restored_psnr = 0;     // mask == 0 pixels
  double restored_ssim = 0;
  double kept_psnr = 0;         // mask == 1 pixels
  double kept_ssim = 0;
  std::vector<Tensor> reconstructions;
  TrainResult training;
};

/// Trains with the masked loss and scores the reconstructions on the full
/// frame and separately on the hidden and visible regions.
InpaintResult eval_inpainting(Model& model, const VideoDataset& data, const InpaintSpec& spec,
                              const TrainConfig& config);

struct CompressResult {
  Model model;
  TrainResult training;
  RateReport rate;
  std::vector<std::uint8_t> container;
  std::vector<Tensor> decoded;  // frames decoded from the container
};

// plan, build, train, quantize, serialize, reload, decode, score.
CompressResult compress_pipeline(const VideoDataset& data, const ArchConfig& arch,
                                 const TrainConfig& config, int bits, std::uint64_t model_seed);

}  // namespace mnerv::inline MNERV_PRECISION_NS

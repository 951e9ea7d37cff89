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
#include <filesystem>
#include <string>
#include <vector>

#include "mnerv/losses.h"
#include "mnerv/model.h"
#include "mnerv/optim.h"
#include "mnerv/random.h"

namespace mnerv::inline MNERV_PRECISION_NS {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 2;
  double lr = 1e-3;
  AdamConfig adam;
  LossConfig loss;  // 0.7 * L1 + 0.3 * (1 - MS-SSIM)
  std::uint64_t seed = 0;
  double warmup = 0.05;  // fraction of all steps spent ramping up
  bool cosine = true;    // false keeps lr constant
  bool evaluate_epochs = true;

  void validate() const;
};

/// Linear warmup to `lr` over warmup * total_steps steps, then cosine decay
/// reaching 0.01 * lr at the final step.
double lr_at(long long step, long long total_steps, const TrainConfig& config);

/// Frames (3,H,W) in [0,1] with optional per-frame loss masks of the same
/// shape. Every frame read through frame() is counted, so callers can audit
/// which frames a procedure touched.
class VideoDataset {
 public:
  explicit VideoDataset(std::vector<Tensor> frames, std::vector<Tensor> masks = {});

  std::size_t size() const { return frames_.size(); }
  const Shape& frame_shape() const { return frames_.front().shape(); }
  int height() const { return frames_.front().dim(1); }
  int width() const { return frames_.front().dim(2); }

  const Tensor& frame(std::size_t i) const;
  bool has_masks() const { return !masks_.empty(); }
  const Tensor& mask(std::size_t i) const;

  std::size_t access_count(std::size_t i) const { return reads_.at(i); }
  void reset_access_counts() const;

  // New dataset holding the listed frames (each read is counted here).
  VideoDataset subset(const std::vector<std::size_t>& indices) const;
  VideoDataset with_masks(std::vector<Tensor> masks) const;

 private:
  std::vector<Tensor> frames_;
  std::vector<Tensor> masks_;
  mutable std::vector<std::size_t> reads_;
};

struct EpochRecord {
  int epoch = 0;
  long long step = 0;  // steps completed at the end of the epoch
  double loss = 0;     // mean batch loss over the epoch
  MetricReport report;
};

// "epoch,step,loss,psnr,ms_ssim"
std::string history_csv(const std::vector<EpochRecord>& history);

/// Fits encoder and decoder jointly. Each step takes one shuffled batch,
/// backpropagates loss / batch for every frame and applies one Adam update.
/// With masks, the encoder input and both loss operands are masked so
/// mask == 0 pixels never reach the gradient.
class Trainer {
 public:
  Trainer(Model& model, const VideoDataset& data, TrainConfig config);

  long long total_steps() const { return total_steps_; }
  long long steps_done() const { return step_; }
  bool finished() const { return step_ >= total_steps_; }

  // One optimizer step. Returns the batch loss. Throws TrainingError on a
  // non-finite loss.
  double step();
  // Steps until training ends or `stop_at` steps are done (-1: no limit).
  void run(long long stop_at = -1);

  MetricReport evaluate() const;
  const std::vector<EpochRecord>& history() const { return history_; }

  // Checkpoints are containers holding raw parameters plus optimizer state.
  std::vector<std::uint8_t> checkpoint_bytes() const;
  void restore(std::span<const std::uint8_t> bytes);
  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

 private:
  void begin_epoch();
  std::vector<std::uint8_t> state_bytes() const;
  void load_state(std::span<const std::uint8_t> bytes);

  Model& model_;
  const VideoDataset& data_;
  TrainConfig config_;
  std::vector<Tensor> params_;
  AdamState adam_;
  Rng rng_;
  long long step_ = 0;
  long long total_steps_ = 0;
  long long steps_per_epoch_ = 0;
  std::vector<std::uint32_t> order_;
  std::size_t cursor_ = 0;
  double epoch_loss_ = 0;
  std::vector<EpochRecord> history_;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  MetricReport final_report;
  long long steps = 0;
};

TrainResult train(Model& model, const VideoDataset& data, const TrainConfig& config);

}  // namespace mnerv::inline MNERV_PRECISION_NS

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

#include "mnerv/trainer.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "mnerv/bytes.h"
#include "mnerv/codec.h"
#include "mnerv/error.h"
#include "mnerv/ops.h"

namespace mnerv::inline MNERV_PRECISION_NS {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive, got " + std::to_string(epochs));
  if (batch_size < 1) throw ConfigError("batch_size must be positive, got " + std::to_string(batch_size));
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (!(warmup >= 0 && warmup < 1)) throw ConfigError("warmup must lie in [0,1)");
  adam.validate();
  loss.validate();
}

double lr_at(long long step, long long total_steps, const TrainConfig& config) {
  if (!config.cosine) return config.lr;
  const double warmup = config.warmup * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  if (s < warmup) return config.lr * std::min(1.0, (s + 1) / warmup);
  const double span = static_cast<double>(total_steps - 1) - warmup;
  if (span <= 0) return config.lr;
  const double progress = std::clamp((s - warmup) / span, 0.0, 1.0);
  const double floor = 0.01 * config.lr;
  return floor + 0.5 * (config.lr - floor) * (1 + std::cos(std::numbers::pi * progress));
}

VideoDataset::VideoDataset(std::vector<Tensor> frames, std::vector<Tensor> masks)
    : frames_(std::move(frames)), masks_(std::move(masks)), reads_(frames_.size(), 0) {
  if (frames_.empty()) throw ConfigError("video dataset needs at least one frame");
  const Shape& s = frames_.front().shape();
  if (s.size() != 3 || s[0] != 3) throw ConfigError("frames must be (3,H,W), got " + shape_str(s));
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i].shape() != s) {
      throw ConfigError("frame " + std::to_string(i) + " has shape " + shape_str(frames_[i].shape()) +
                        ", expected " + shape_str(s));
    }
  }
  if (!masks_.empty()) {
    if (masks_.size() != frames_.size()) throw ConfigError("one mask per frame is required");
    for (const auto& m : masks_) {
      if (m.shape() != s) throw ConfigError("mask shape " + shape_str(m.shape()) + " differs from frames");
    }
  }
}

const Tensor& VideoDataset::frame(std::size_t i) const {
  if (i >= frames_.size()) throw UsageError("frame index " + std::to_string(i) + " out of range");
  ++reads_[i];
  return frames_[i];
}

const Tensor& VideoDataset::mask(std::size_t i) const {
  if (masks_.empty()) throw UsageError("dataset has no masks");
  return masks_.at(i);
}

void VideoDataset::reset_access_counts() const { std::fill(reads_.begin(), reads_.end(), 0); }

VideoDataset VideoDataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Tensor> f, m;
  for (auto i : indices) {
    f.push_back(frame(i));
    if (has_masks()) m.push_back(masks_.at(i));
  }
  return VideoDataset(std::move(f), std::move(m));
}

VideoDataset VideoDataset::with_masks(std::vector<Tensor> masks) const {
  return VideoDataset(frames_, std::move(masks));
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,step,loss,psnr,ms_ssim\n" << std::setprecision(10);
  for (const auto& r : history) {
    os << r.epoch << ',' << r.step << ',' << r.loss << ',' << r.report.mean_psnr << ','
       << r.report.mean_ms_ssim << '\n';
  }
  return os.str();
}

Trainer::Trainer(Model& model, const VideoDataset& data, TrainConfig config)
    : model_(model), data_(data), config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (data_.frame_shape()[1] % model_.config.scale() != 0 ||
      data_.frame_shape()[2] % model_.config.scale() != 0) {
    throw ConfigError("frames " + shape_str(data_.frame_shape()) + " are not divisible by the model scale " +
                      std::to_string(model_.config.scale()));
  }
  for (const auto& p : model_.parameters()) params_.push_back(p.tensor);
  const auto n = static_cast<long long>(data_.size());
  steps_per_epoch_ = (n + config_.batch_size - 1) / config_.batch_size;
  total_steps_ = steps_per_epoch_ * config_.epochs;
}

void Trainer::begin_epoch() {
  order_.resize(data_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = order_.size(); i > 1; --i) {
    std::swap(order_[i - 1], order_[uniform_index(rng_, i)]);
  }
  cursor_ = 0;
  epoch_loss_ = 0;
}

double Trainer::step() {
  if (finished()) throw UsageError("training already finished");
  if (cursor_ == 0) begin_epoch();
  for (auto& p : params_) p.zero_grad();

  const std::size_t end = std::min(order_.size(), cursor_ + static_cast<std::size_t>(config_.batch_size));
  const Real share = Real(1) / static_cast<Real>(end - cursor_);
  double batch_loss = 0;
  for (std::size_t k = cursor_; k < end; ++k) {
    const std::size_t idx = order_[k];
    Tensor frame = data_.frame(idx);
    const Tensor* mask = data_.has_masks() ? &data_.mask(idx) : nullptr;
    Tensor input = mask ? ops::mul(frame, *mask) : frame;
    Tensor pred = decode(model_, encode(model_, input));
    Tensor l = ops::mul_scalar(loss(pred, frame, config_.loss, mask), share);
    const double value = l.item();
    if (!std::isfinite(value)) {
      throw TrainingError("non-finite loss at step " + std::to_string(step_) + " (frame " +
                              std::to_string(idx) + ")",
                          step_);
    }
    backward(l);
    batch_loss += value;
  }
  adam_step(params_, adam_, lr_at(step_, total_steps_, config_), config_.adam);
  ++step_;
  cursor_ = end;
  epoch_loss_ += batch_loss;

  if (cursor_ >= order_.size()) {
    EpochRecord rec;
    rec.epoch = static_cast<int>(step_ / steps_per_epoch_);
    rec.step = step_;
    rec.loss = epoch_loss_ / static_cast<double>(steps_per_epoch_);
    if (config_.evaluate_epochs) rec.report = evaluate();
    history_.push_back(std::move(rec));
    cursor_ = 0;
  }
  return batch_loss;
}

void Trainer::run(long long stop_at) {
  while (!finished() && (stop_at < 0 || step_ < stop_at)) step();
}

MetricReport Trainer::evaluate() const {
  NoGradGuard no_grad;
  MetricReport report;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const Tensor& frame = data_.frame(i);
    Tensor input = data_.has_masks() ? ops::mul(frame, data_.mask(i)) : frame;
    Tensor pred = decode(model_, encode(model_, input));
    report.add(psnr(pred, frame), ms_ssim_value(pred, frame));
  }
  return report;
}

std::vector<std::uint8_t> Trainer::state_bytes() const {
  ByteWriter w;
  w.u64(static_cast<std::uint64_t>(step_));
  w.u64(cursor_);
  w.f64(epoch_loss_);
  w.u32(static_cast<std::uint32_t>(order_.size()));
  for (auto i : order_) w.u32(i);
  std::ostringstream rng;
  rng << rng_;
  w.str(rng.str());
  w.u64(static_cast<std::uint64_t>(adam_.step));
  w.u32(static_cast<std::uint32_t>(adam_.m.size()));
  for (std::size_t k = 0; k < adam_.m.size(); ++k) {
    w.u32(static_cast<std::uint32_t>(adam_.m[k].size()));
    for (Real x : adam_.m[k]) w.f64(x);
    for (Real x : adam_.v[k]) w.f64(x);
  }
  return w.take();
}

void Trainer::load_state(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  step_ = static_cast<long long>(r.u64());
  cursor_ = r.u64();
  epoch_loss_ = r.f64();
  order_.assign(r.u32(), 0);
  for (auto& i : order_) i = r.u32();
  std::istringstream rng(r.str());
  rng >> rng_;
  if (!rng) throw LoadError(LoadErrorKind::kMalformed, "checkpoint: bad random state");
  adam_.step = static_cast<long long>(r.u64());
  const std::uint32_t n = r.u32();
  if (n != 0 && n != params_.size()) {
    throw LoadError(LoadErrorKind::kMalformed, "checkpoint: optimizer tensor count mismatch");
  }
  adam_.m.assign(n, {});
  adam_.v.assign(n, {});
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t len = r.u32();
    if (len != params_[k].numel()) throw LoadError(LoadErrorKind::kMalformed, "checkpoint: moment size mismatch");
    adam_.m[k].resize(len);
    adam_.v[k].resize(len);
    for (auto& x : adam_.m[k]) x = static_cast<Real>(r.f64());
    for (auto& x : adam_.v[k]) x = static_cast<Real>(r.f64());
  }
  if (cursor_ > order_.size() || step_ > total_steps_) {
    throw LoadError(LoadErrorKind::kMalformed, "checkpoint: inconsistent progress counters");
  }
}

std::vector<std::uint8_t> Trainer::checkpoint_bytes() const {
  ContainerOptions opts;
  opts.bits = 0;
  opts.include_encoder = true;
  opts.extra = state_bytes();
  return save_container(model_, {}, opts);
}

void Trainer::restore(std::span<const std::uint8_t> bytes) {
  LoadedContainer c = load_container(bytes);
  if (!(c.model.config == model_.config) || !(c.model.plan == model_.plan)) {
    throw LoadError(LoadErrorKind::kMalformed, "checkpoint was written for a different architecture");
  }
  if (!c.has_encoder || c.bits != 0 || c.extra.empty()) {
    throw LoadError(LoadErrorKind::kMalformed, "container is not a training checkpoint");
  }
  copy_parameters(c.model.parameters(), model_.parameters());
  load_state(c.extra);
  history_.clear();
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const { write_file(path, checkpoint_bytes()); }

void Trainer::load_checkpoint(const std::filesystem::path& path) { restore(read_file(path)); }

TrainResult train(Model& model, const VideoDataset& data, const TrainConfig& config) {
  Trainer trainer(model, data, config);
  trainer.run();
  TrainResult result;
  result.history = trainer.history();
  result.steps = trainer.steps_done();
  result.final_report = config.evaluate_epochs && !result.history.empty() ? result.history.back().report
                                                                         : trainer.evaluate();
  return result;
}

}  // namespace mnerv::inline MNERV_PRECISION_NS

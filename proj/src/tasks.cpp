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

#include "mnerv/tasks.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mnerv/error.h"
#include "mnerv/ops.h"
#include "mnerv/random.h"

namespace mnerv::inline MNERV_PRECISION_NS {

VideoDataset make_fixture(int frames, int height, int width, int shift) {
  if (frames < 1 || height < 1 || width < 1) throw ConfigError("fixture dimensions must be positive");
  constexpr double kFirst[3] = {0.9, 0.25, 0.1};
  constexpr double kSecond[3] = {0.1, 0.45, 0.85};
  const double pi = std::numbers::pi;
  std::vector<Tensor> out;
  for (int t = 0; t < frames; ++t) {
    std::vector<Real> v(static_cast<std::size_t>(3) * height * width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double g = 0.5 + 0.5 * std::sin(2 * pi * (x + shift * t) / width + pi * y / height);
        for (int c = 0; c < 3; ++c) {
          v[(static_cast<std::size_t>(c) * height + y) * width + x] =
              static_cast<Real>(g * kFirst[c] + (1 - g) * kSecond[c]);
        }
      }
    }
    out.emplace_back(Shape{3, height, width}, std::move(v));
  }
  return VideoDataset(std::move(out));
}

Tensor interpolate_frame(const Model& model, const Tensor& left, const Tensor& right, double w) {
  if (!(w >= 0 && w <= 1)) throw UsageError("interpolation weight must lie in [0,1]");
  NoGradGuard no_grad;
  if (w == 0) return decode(model, left);
  if (w == 1) return decode(model, right);
  const Tensor mixed = ops::add(ops::mul_scalar(left, static_cast<Real>(1 - w)),
                                ops::mul_scalar(right, static_cast<Real>(w)));
  return decode(model, mixed);
}

InterpolationSplit InterpolationSplit::every_other(std::size_t frames) {
  if (frames < 3) throw SpecError("interpolation needs at least three frames");
  InterpolationSplit s;
  for (std::size_t i = 0; i < frames; ++i) (i % 2 == 0 ? s.seen : s.held_out).push_back(i);
  for (auto i : s.held_out) {
    if (i + 1 < frames) s.evaluated.push_back({i, {i - 1, i + 1}});
  }
  return s;
}

InterpolationResult eval_interpolation(Model& model, const VideoDataset& data,
                                       const InterpolationSplit& split, const TrainConfig& config) {
  for (auto i : split.held_out) {
    if (std::find(split.seen.begin(), split.seen.end(), i) != split.seen.end()) {
      throw SpecError("frame " + std::to_string(i) + " is both seen and held out");
    }
  }
  data.reset_access_counts();
  const VideoDataset seen = data.subset(split.seen);
  InterpolationResult result;
  result.training = train(model, seen, config);
  for (auto i : split.held_out) result.held_out_reads_during_training.push_back(data.access_count(i));

  // Embeddings of the seen frames, indexed by their position in the video.
  std::vector<Tensor> emb(data.size());
  {
    NoGradGuard no_grad;
    for (std::size_t k = 0; k < split.seen.size(); ++k) emb[split.seen[k]] = encode(model, seen.frame(k));
  }
  for (const auto& [mid, around] : split.evaluated) {
    const Tensor pred = interpolate_frame(model, emb[around.first], emb[around.second], 0.5);
    const Tensor& truth = data.frame(mid);
    const Tensor& left = data.frame(around.first);
    result.interpolated.add(psnr(pred, truth), ms_ssim_value(pred, truth));
    result.repeated.add(psnr(left, truth), ms_ssim_value(left, truth));
  }
  return result;
}

std::vector<Tensor> build_masks(const InpaintSpec& spec, std::size_t frames, int height, int width) {
  if (!(spec.fraction > 0 && spec.fraction < 1)) {
    throw SpecError("mask fraction must lie in (0,1), got " + std::to_string(spec.fraction));
  }
  auto box_mask = [&](std::vector<Real>& plane, int y0, int x0, int h, int w) {
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) plane[static_cast<std::size_t>(y) * width + x] = 0;
  };
  Rng rng(spec.seed);
  std::vector<Tensor> out;
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<Real> plane(static_cast<std::size_t>(height) * width, Real(1));
    if (spec.kind == MaskKind::kCentralBox) {
      const int h = std::clamp(static_cast<int>(std::lround(height * std::sqrt(spec.fraction))), 1, height);
      const int w = std::clamp(static_cast<int>(std::lround(width * std::sqrt(spec.fraction))), 1, width);
      box_mask(plane, (height - h) / 2, (width - w) / 2, h, w);
    } else {
      if (spec.boxes < 1) throw SpecError("random-box masks need at least one box");
      const double each = spec.fraction / spec.boxes;
      const int h = std::clamp(static_cast<int>(std::lround(height * std::sqrt(each))), 1, height);
      const int w = std::clamp(static_cast<int>(std::lround(width * std::sqrt(each))), 1, width);
      for (int b = 0; b < spec.boxes; ++b) {
        const int y0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(height - h + 1)));
        const int x0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(width - w + 1)));
        box_mask(plane, y0, x0, h, w);
      }
    }
    const auto hidden = std::count(plane.begin(), plane.end(), Real(0));
    if (hidden == 0 || hidden == static_cast<std::ptrdiff_t>(plane.size())) {
      throw SpecError("mask for frame " + std::to_string(t) + " hides " +
                      (hidden == 0 ? std::string("nothing") : std::string("the whole frame")));
    }
    std::vector<Real> v;
    v.reserve(plane.size() * 3);
    for (int c = 0; c < 3; ++c) v.insert(v.end(), plane.begin(), plane.end());
    out.emplace_back(Shape{3, height, width}, std::move(v));
  }
  return out;
}

InpaintResult eval_inpainting(Model& model, const VideoDataset& data, const InpaintSpec& spec,
                              const TrainConfig& config) {
  auto masks = build_masks(spec, data.size(), data.height(), data.width());
  const VideoDataset masked = data.with_masks(masks);
  InpaintResult result;
  result.training = train(model, masked, config);

  NoGradGuard no_grad;
  double restored_p = 0, restored_s = 0, kept_p = 0, kept_s = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor& truth = data.frame(i);
    const Tensor pred = decode(model, encode(model, ops::mul(truth, masks[i])));
    result.full.add(psnr(pred, truth), ms_ssim_value(pred, truth));
    restored_p += masked_psnr(pred, truth, masks[i], Real(0));
    restored_s += masked_ssim(pred, truth, masks[i], Real(0));
    kept_p += masked_psnr(pred, truth, masks[i], Real(1));
    kept_s += masked_ssim(pred, truth, masks[i], Real(1));
    result.reconstructions.push_back(pred);
  }
  const double n = static_cast<double>(data.size());
  result.restored_psnr = restored_p / n;
  result.restored_ssim = restored_s / n;
  result.kept_psnr = kept_p / n;
  result.kept_ssim = kept_s / n;
  return result;
}

CompressResult compress_pipeline(const VideoDataset& data, const ArchConfig& arch,
                                 const TrainConfig& config, int bits, std::uint64_t model_seed) {
  arch.validate();
  if (data.height() != arch.frame_height() || data.width() != arch.frame_width()) {
    throw ConfigError("frames are " + std::to_string(data.height()) + "x" + std::to_string(data.width()) +
                      " but the architecture decodes " + std::to_string(arch.frame_height()) + "x" +
                      std::to_string(arch.frame_width()));
  }
  CompressResult r;
  r.model = build_model(arch, plan_channels(arch), model_seed);
  r.training = train(r.model, data, config);
  const auto embeddings = compute_embeddings(r.model, data);
  ContainerOptions opts;
  opts.bits = bits;
  r.container = save_container(r.model, embeddings, opts);
  r.rate = measure_rate(r.model, embeddings, data, bits, &r.decoded);
  return r;
}

}  // namespace mnerv::inline MNERV_PRECISION_NS

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

#include <filesystem>
#include <vector>

#include "mnerv/trainer.h"

namespace mnerv::inline MNERV_PRECISION_NS {

enum class FrameFormat { kPpm, kRaw };

// Raw video: "MNVF", then T, H, W as little-endian u32, then per frame the
// R, G and B planes as 8-bit samples.
inline constexpr char kRawFrameMagic[4] = {'M', 'N', 'V', 'F'};

/// Loads a raw video file, or a directory of binary PPM images named by
/// their frame index (0.ppm, 1.ppm, ... with optional zero padding).
/// Samples are divided by 255. Missing indices and size mismatches raise
/// LoadError naming the offending file.
VideoDataset load_frames(const std::filesystem::path& path);

/// Writes frames rounded to 8 bits. kRaw writes a single file at `path`;
/// kPpm creates `path` as a directory of 00000.ppm, 00001.ppm, ...
void save_frames(const std::vector<Tensor>& frames, const std::filesystem::path& path, FrameFormat format);

std::vector<Tensor> dataset_frames(const VideoDataset& data);

}  // namespace mnerv::inline MNERV_PRECISION_NS

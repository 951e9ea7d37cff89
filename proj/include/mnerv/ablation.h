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
#include <vector>

#include "mnerv/model.h"
#include "mnerv/trainer.h"

namespace mnerv::inline MNERV_PRECISION_NS {

struct AblationCell {
  std::string grid;   // "kernels" or "components"
  std::string label;  // e.g. "7layers k1-3-5-5-3-3-3" or "GRN+ML"
  ArchConfig arch;
};

/// Stride/kernel grid: four 5-layer and seven 7-layer decoders. Strides are
/// refitted to `base`'s total scale so every row decodes the same frame
/// size; all other settings come from `base`.
std::vector<AblationCell> stride_kernel_grid(const ArchConfig& base);

// Component grid: HNeRV-shaped baseline, +GRN, +GRN+ML, +GRN+ML+HL.
std::vector<AblationCell> component_grid(const ArchConfig& base);

struct AblationRow {
  AblationCell cell;
  std::vector<int> strides;  // as built
  std::vector<int> kernels;
  long long decoder_size = 0;
  long long encoder_size = 0;
  long long steps = 0;
  double psnr = 0;
  double ms_ssim = 0;
};

/// Plans, builds, trains and evaluates every cell with `config`, using up to
/// `threads` workers. Rows come back in grid order and do not depend on the
/// thread count.
std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& cells, const VideoDataset& data,
                                      const TrainConfig& config, int threads = 1);

// "grid,label,strides,kernels,grn,multilayer,header_layer,decoder_size,encoder_size,steps,psnr,ms_ssim"
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace mnerv::inline MNERV_PRECISION_NS

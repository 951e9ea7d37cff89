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

#include "mnerv/ablation.h"

#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <thread>

#include "mnerv/error.h"

namespace mnerv::inline MNERV_PRECISION_NS {
namespace {

std::string join(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

AblationCell stride_kernel_cell(const ArchConfig& base, const std::vector<int>& strides,
                                const std::vector<int>& kernels) {
  AblationCell c{"kernels", std::to_string(strides.size()) + "layers k" + join(kernels, '-'), base};
  c.arch.strides = fit_strides(strides, base.scale());
  c.arch.kernels = kernels;
  c.arch.toggles = ArchToggles{};
  return c;
}

}  // namespace

std::vector<AblationCell> stride_kernel_grid(const ArchConfig& base) {
  base.validate();
  const std::vector<int> five{5, 4, 2, 2, 2, 2};
  const std::vector<int> seven{5, 2, 2, 2, 2, 2, 2};
  const std::vector<std::vector<int>> five_kernels{
      {1, 3, 5, 5, 5, 5}, {1, 3, 5, 7, 5, 3}, {1, 3, 5, 5, 3, 3}, {1, 3, 5, 5, 5, 3}};
  const std::vector<std::vector<int>> seven_kernels{
      {1, 3, 5, 5, 5, 5, 5}, {1, 3, 5, 5, 5, 3, 3}, {1, 3, 5, 5, 3, 3, 3}, {1, 3, 5, 7, 5, 3, 3},
      {1, 3, 5, 3, 3, 3, 3}, {1, 3, 3, 3, 3, 3, 3}, {1, 5, 5, 3, 3, 3, 3}};
  std::vector<AblationCell> out;
  for (const auto& k : five_kernels) out.push_back(stride_kernel_cell(base, five, k));
  for (const auto& k : seven_kernels) out.push_back(stride_kernel_cell(base, seven, k));
  return out;
}

std::vector<AblationCell> component_grid(const ArchConfig& base) {
  base.validate();
  struct Variant {
    const char* label;
    ArchToggles toggles;
  };
  const Variant variants[] = {
      {"HNeRV", {false, false, false}},
      {"GRN", {true, false, false}},
      {"GRN+ML", {true, true, false}},
      {"GRN+ML+HL", {true, true, true}},
  };
  std::vector<AblationCell> out;
  for (const auto& v : variants) {
    AblationCell c{"components", v.label, base};
    c.arch.toggles = v.toggles;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& cells, const VideoDataset& data,
                                      const TrainConfig& config, int threads) {
  config.validate();
  for (const auto& c : cells) {
    if (c.arch.frame_height() != data.height() || c.arch.frame_width() != data.width()) {
      throw ConfigError("ablation cell '" + c.label + "' decodes " + std::to_string(c.arch.frame_height()) + "x" +
                        std::to_string(c.arch.frame_width()) + " frames, video is " +
                        std::to_string(data.height()) + "x" + std::to_string(data.width()));
    }
  }
  std::vector<AblationRow> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};

  // Frame reads bump per-dataset counters, so every worker gets its own copy.
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  std::vector<std::size_t> all(data.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  std::vector<VideoDataset> copies;
  for (int t = 0; t < n; ++t) copies.push_back(data.subset(all));

  auto worker = [&](const VideoDataset& local) {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const AblationCell& cell = cells[i];
        Model model = build_model(cell.arch, plan_channels(cell.arch), config.seed);
        TrainConfig tc = config;
        tc.evaluate_epochs = false;
        const TrainResult r = train(model, local, tc);
        AblationRow& row = rows[i];
        row.cell = cell;
        row.strides = model.layers.strides;
        row.kernels = model.layers.kernels;
        row.decoder_size = model.decoder_size();
        row.encoder_size = model.encoder_size();
        row.steps = r.steps;
        row.psnr = r.final_report.mean_psnr;
        row.ms_ssim = r.final_report.mean_ms_ssim;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (n == 1) {
    worker(copies.front());
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker, std::cref(copies[t]));
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "grid,label,strides,kernels,grn,multilayer,header_layer,decoder_size,encoder_size,steps,psnr,ms_ssim\n";
  char buf[64];
  for (const auto& r : rows) {
    const ArchToggles& t = r.cell.arch.toggles;
    out += r.cell.grid + "," + r.cell.label + "," + join(r.strides, ' ') + "," + join(r.kernels, ' ') + "," +
           (t.grn ? "1" : "0") + "," + (t.multilayer ? "1" : "0") + "," + (t.header_layer ? "1" : "0") + "," +
           std::to_string(r.decoder_size) + "," + std::to_string(r.encoder_size) + "," + std::to_string(r.steps);
    std::snprintf(buf, sizeof(buf), ",%.4f,%.6f\n", r.psnr, r.ms_ssim);
    out += buf;
  }
  return out;
}

}  // namespace mnerv::inline MNERV_PRECISION_NS

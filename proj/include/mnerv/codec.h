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
#include <span>
#include <string>
#include <vector>

#include "mnerv/model.h"
#include "mnerv/trainer.h"

namespace mnerv::inline MNERV_PRECISION_NS {

/// Per-tensor affine quantization: value = scale * (symbol - zero_point).
/// A constant tensor has scale 0 and dequantizes to `constant`.
struct QuantizedTensor {
  Shape shape;
  int bits = 8;
  double scale = 0;
  std::int32_t zero_point = 0;
  double constant = 0;
  std::vector<std::uint32_t> symbols;
};

QuantizedTensor quantize(const Tensor& t, int bits);
std::vector<Real> dequantize_values(const QuantizedTensor& q);
Tensor dequantize(const QuantizedTensor& q);

inline constexpr std::uint32_t kContainerVersion = 1;

struct ContainerOptions {
  int bits = 8;  // 0 stores exact parameter values
  bool include_encoder = false;
  std::vector<std::uint8_t> extra;  // opaque trailing section (optimizer state)
};

// Byte counts of each part of a serialized container.
struct ContainerLayout {
  std::size_t decoder_bytes = 0;    // decoder weights, length prefix included
  std::size_t embedding_bytes = 0;  // per-frame embeddings, length prefix included
  std::size_t encoder_bytes = 0;
  std::size_t extra_bytes = 0;
  std::size_t total_bytes = 0;

  // Everything that is not decoder, embedding, encoder or extra payload.
  std::size_t header_bytes() const {
    return total_bytes - decoder_bytes - embedding_bytes - encoder_bytes - extra_bytes;
  }
};

/// Layout (little-endian): "MNRV", u32 version, u64 total length, u8 flags,
/// u8 bits, u8 raw value width, architecture, channel plan, then the
/// length-prefixed decoder, embedding, optional encoder and optional extra
/// sections, and a trailing CRC-32 of all preceding bytes.
/// Embeddings are stacked into one (T,C,h,w) tensor before quantization.
std::vector<std::uint8_t> save_container(const Model& model, const std::vector<Tensor>& embeddings,
                                         const ContainerOptions& options,
                                         ContainerLayout* layout = nullptr);

struct LoadedContainer {
  Model model;  // encoder weights are freshly initialized unless has_encoder
  std::vector<Tensor> embeddings;
  bool has_encoder = false;
  int bits = 0;
  std::vector<std::uint8_t> extra;
  ContainerLayout layout;
};

/// Checks, in order: magic, version, length (truncation), checksum; each
/// failure raises LoadError with its own kind.
LoadedContainer load_container(std::span<const std::uint8_t> bytes);

// Copies every parameter value of `from` into the matching tensor of `to`.
void copy_parameters(const std::vector<NamedParam>& from, const std::vector<NamedParam>& to);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

struct RateReport {
  int bits = 0;
  long long total_bits = 0;
  long long decoder_bits = 0;
  long long embedding_bits = 0;
  long long header_bits = 0;
  double bpp = 0;
  double psnr = 0;
  double ms_ssim = 0;
};

// "bits,bpp,psnr,ms_ssim"
std::string rate_csv(const std::vector<RateReport>& reports);

std::vector<Tensor> compute_embeddings(const Model& model, const VideoDataset& data);

// Decodes every embedding without recording a graph.
std::vector<Tensor> decode_all(const Model& model, const std::vector<Tensor>& embeddings);

/// Serializes at `bits`, reloads, decodes every frame from the container
/// and scores it against `data`. `decoded` receives the reconstructions.
RateReport measure_rate(const Model& model, const std::vector<Tensor>& embeddings,
                        const VideoDataset& data, int bits, std::vector<Tensor>* decoded = nullptr);

std::vector<RateReport> rate_distortion(const Model& model, const VideoDataset& data,
                                        const std::vector<int>& bit_widths);

}  // namespace mnerv::inline MNERV_PRECISION_NS

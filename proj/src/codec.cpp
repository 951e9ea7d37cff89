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

#include "mnerv/codec.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mnerv/bytes.h"
#include "mnerv/entropy.h"
#include "mnerv/error.h"

namespace mnerv::inline MNERV_PRECISION_NS {

QuantizedTensor quantize(const Tensor& t, int bits) {
  if (bits < 1 || bits > 16) throw ConfigError("quantization bits must be in [1,16], got " + std::to_string(bits));
  QuantizedTensor q;
  q.shape = t.shape();
  q.bits = bits;
  auto values = t.data();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw UsageError("cannot quantize non-finite values");
  q.symbols.assign(values.size(), 0);
  if (hi == lo) {
    q.constant = lo;
    return q;
  }
  const double levels = static_cast<double>((1u << bits) - 1);
  q.scale = (hi - lo) / levels;
  q.zero_point = static_cast<std::int32_t>(std::nearbyint(-lo / q.scale));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double s = std::nearbyint(static_cast<double>(values[i]) / q.scale + q.zero_point);
    q.symbols[i] = static_cast<std::uint32_t>(std::clamp(s, 0.0, levels));
  }
  return q;
}

std::vector<Real> dequantize_values(const QuantizedTensor& q) {
  std::vector<Real> out(q.symbols.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = q.scale == 0
                 ? static_cast<Real>(q.constant)
                 : static_cast<Real>(q.scale * (static_cast<double>(q.symbols[i]) - q.zero_point));
  }
  return out;
}

Tensor dequantize(const QuantizedTensor& q) { return Tensor(q.shape, dequantize_values(q)); }

namespace {

constexpr char kMagic[4] = {'M', 'N', 'R', 'V'};
constexpr std::uint8_t kFlagEncoder = 1;
constexpr std::uint8_t kFlagExtra = 2;
constexpr std::uint8_t kQuantized = 0;
constexpr std::uint8_t kRawF32 = 1;
constexpr std::uint8_t kRawF64 = 2;
// magic + version + total length
constexpr std::size_t kPreambleBytes = 16;

[[noreturn]] void malformed(const std::string& what) { throw LoadError(LoadErrorKind::kMalformed, what); }

void write_ints(ByteWriter& w, const std::vector<int>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (int x : v) w.i32(x);
}

std::vector<int> read_ints(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (n > 64) malformed("implausible list length " + std::to_string(n));
  std::vector<int> v(n);
  for (auto& x : v) x = r.i32();
  return v;
}

void write_config(ByteWriter& w, const ArchConfig& c) {
  write_ints(w, c.strides);
  write_ints(w, c.kernels);
  w.f64(c.attenuation);
  w.i32(c.embed_channels);
  w.i32(c.embed_height);
  w.i32(c.embed_width);
  w.u64(static_cast<std::uint64_t>(c.target_size));
  w.i32(c.min_width);
  w.i32(c.encoder_width);
  w.u8(static_cast<std::uint8_t>((c.toggles.grn ? 1 : 0) | (c.toggles.multilayer ? 2 : 0) |
                                 (c.toggles.header_layer ? 4 : 0)));
}

ArchConfig read_config(ByteReader& r) {
  ArchConfig c;
  c.strides = read_ints(r);
  c.kernels = read_ints(r);
  c.attenuation = r.f64();
  c.embed_channels = r.i32();
  c.embed_height = r.i32();
  c.embed_width = r.i32();
  c.target_size = static_cast<long long>(r.u64());
  c.min_width = r.i32();
  c.encoder_width = r.i32();
  const std::uint8_t t = r.u8();
  c.toggles = ArchToggles{(t & 1) != 0, (t & 2) != 0, (t & 4) != 0};
  return c;
}

void write_tensor(ByteWriter& w, const Tensor& t, int bits) {
  if (bits == 0) {
    w.u8(sizeof(Real) == 8 ? kRawF64 : kRawF32);
  } else {
    w.u8(kQuantized);
  }
  write_ints(w, t.shape());
  if (bits == 0) {
    for (Real x : t.data()) {
      if constexpr (sizeof(Real) == 8) {
        w.f64(x);
      } else {
        w.f32(x);
      }
    }
    return;
  }
  const QuantizedTensor q = quantize(t, bits);
  w.u8(static_cast<std::uint8_t>(bits));
  w.f64(q.scale);
  w.i32(q.zero_point);
  w.f64(q.constant);
  const auto payload = entropy::encode(q.symbols, bits);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload);
}

Tensor read_tensor(ByteReader& r) {
  const std::uint8_t enc = r.u8();
  Shape shape = read_ints(r);
  if (shape.empty()) malformed("tensor without dimensions");
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0 || d > (1 << 24)) malformed("bad tensor dimension " + std::to_string(d));
    n *= static_cast<std::size_t>(d);
  }
  if (enc == kRawF32 || enc == kRawF64) {
    const std::size_t width = enc == kRawF32 ? 4 : 8;
    if (n * width > r.remaining()) {
      throw LoadError(LoadErrorKind::kTruncated, "tensor data runs past the end of the container");
    }
    std::vector<Real> v(n);
    for (auto& x : v) x = static_cast<Real>(enc == kRawF32 ? static_cast<double>(r.f32()) : r.f64());
    return Tensor(std::move(shape), std::move(v));
  }
  if (enc != kQuantized) malformed("unknown tensor encoding " + std::to_string(enc));
  QuantizedTensor q;
  q.shape = shape;
  q.bits = r.u8();
  q.scale = r.f64();
  q.zero_point = r.i32();
  q.constant = r.f64();
  const std::uint32_t len = r.u32();
  q.symbols = entropy::decode(r.bytes(len));
  if (q.symbols.size() != n) malformed("symbol count does not match tensor shape " + shape_str(shape));
  return dequantize(q);
}

// Writes a u32 length prefix followed by the section body; returns the
// section size including its prefix.
template <typename Body>
std::size_t write_section(ByteWriter& w, Body&& body) {
  const std::size_t start = w.size();
  w.u32(0);
  body();
  w.patch_u32(start, static_cast<std::uint32_t>(w.size() - start - 4));
  return w.size() - start;
}

void write_params(ByteWriter& w, const std::vector<NamedParam>& params, int bits) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) write_tensor(w, p.tensor, bits);
}

void read_params(ByteReader& r, const std::vector<NamedParam>& into) {
  const std::uint32_t n = r.u32();
  if (n != into.size()) {
    malformed("section holds " + std::to_string(n) + " tensors, architecture expects " +
              std::to_string(into.size()));
  }
  for (const auto& p : into) {
    Tensor t = read_tensor(r);
    if (t.shape() != p.tensor.shape()) {
      malformed(p.name + ": stored shape " + shape_str(t.shape()) + " expected " + shape_str(p.tensor.shape()));
    }
    auto dst = Tensor(p.tensor).mutable_data();
    std::copy(t.data().begin(), t.data().end(), dst.begin());
  }
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> save_container(const Model& model, const std::vector<Tensor>& embeddings,
                                         const ContainerOptions& options, ContainerLayout* layout) {
  if (options.bits != 0 && (options.bits < 1 || options.bits > 16)) {
    throw ConfigError("container bits must be 0 (raw) or in [1,16], got " + std::to_string(options.bits));
  }
  const Shape emb_shape = model.embedding_shape();
  for (const auto& e : embeddings) {
    if (e.shape() != emb_shape) {
      throw UsageError("embedding shape " + shape_str(e.shape()) + " does not match " + shape_str(emb_shape));
    }
  }

  ContainerLayout lay;
  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kContainerVersion);
  w.u64(0);  // total length, patched below
  std::uint8_t flags = 0;
  if (options.include_encoder) flags |= kFlagEncoder;
  if (!options.extra.empty()) flags |= kFlagExtra;
  w.u8(flags);
  w.u8(static_cast<std::uint8_t>(options.bits));
  w.u8(sizeof(Real));
  write_config(w, model.config);
  write_ints(w, model.plan.widths);
  w.u64(static_cast<std::uint64_t>(model.plan.realized_size));

  lay.decoder_bytes = write_section(w, [&] { write_params(w, model.decoder_parameters(), options.bits); });
  lay.embedding_bytes = write_section(w, [&] {
    w.u32(static_cast<std::uint32_t>(embeddings.size()));
    if (embeddings.empty()) return;
    std::vector<Real> stacked;
    stacked.reserve(embeddings.size() * embeddings.front().numel());
    for (const auto& e : embeddings) stacked.insert(stacked.end(), e.data().begin(), e.data().end());
    Shape s{static_cast<int>(embeddings.size())};
    s.insert(s.end(), emb_shape.begin(), emb_shape.end());
    write_tensor(w, Tensor(s, std::move(stacked)), options.bits);
  });
  if (options.include_encoder) {
    lay.encoder_bytes = write_section(w, [&] { write_params(w, model.encoder_parameters(), options.bits); });
  }
  if (!options.extra.empty()) {
    lay.extra_bytes = write_section(w, [&] { w.bytes(options.extra); });
  }

  const std::size_t total = w.size() + 4;
  std::vector<std::uint8_t> out = w.take();
  for (int i = 0; i < 8; ++i) out[8 + i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(total) >> (8 * i));
  const std::uint32_t crc = crc32_of(out);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));

  lay.total_bytes = out.size();
  if (layout) *layout = lay;
  return out;
}

LoadedContainer load_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw LoadError(LoadErrorKind::kTruncated, "container shorter than its magic");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw LoadError(LoadErrorKind::kBadMagic, "not an MNRV container");
  }
  ByteReader pre(bytes.subspan(4));
  const std::uint32_t version = pre.u32();
  if (version != kContainerVersion) {
    throw LoadError(LoadErrorKind::kUnknownVersion,
                    "container version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kContainerVersion) + ")");
  }
  const std::uint64_t total = pre.u64();
  if (bytes.size() < total) {
    throw LoadError(LoadErrorKind::kTruncated, "container holds " + std::to_string(bytes.size()) +
                                                   " of " + std::to_string(total) + " bytes");
  }
  if (bytes.size() != total || total < kPreambleBytes + 4) malformed("container length field is inconsistent");
  const auto body = bytes.first(total - 4);
  ByteReader tail(bytes.subspan(total - 4));
  if (crc32_of(body) != tail.u32()) throw LoadError(LoadErrorKind::kChecksum, "container checksum mismatch");

  LoadedContainer out;
  ByteReader r(body.subspan(kPreambleBytes));
  const std::uint8_t flags = r.u8();
  out.bits = r.u8();
  r.u8();  // writer's value width; raw tensors carry their own encoding
  out.has_encoder = (flags & kFlagEncoder) != 0;
  ArchConfig config = read_config(r);
  ChannelPlan plan;
  plan.widths = read_ints(r);
  plan.realized_size = static_cast<long long>(r.u64());
  try {
    config.validate();
    out.model = build_model(config, plan, 0);
  } catch (const ConfigError& e) {
    malformed(std::string("stored architecture is invalid: ") + e.what());
  }
  out.layout.total_bytes = bytes.size();

  auto section = [&](std::size_t& size_out) {
    const std::uint32_t len = r.u32();
    size_out = len + 4;
    return ByteReader(r.bytes(len));
  };
  {
    ByteReader s = section(out.layout.decoder_bytes);
    read_params(s, out.model.decoder_parameters());
  }
  {
    ByteReader s = section(out.layout.embedding_bytes);
    const std::uint32_t count = s.u32();
    if (count > 0) {
      Tensor stacked = read_tensor(s);
      Shape expect{static_cast<int>(count)};
      const Shape emb = out.model.embedding_shape();
      expect.insert(expect.end(), emb.begin(), emb.end());
      if (stacked.shape() != expect) malformed("embedding block has shape " + shape_str(stacked.shape()));
      const std::size_t each = shape_numel(emb);
      for (std::uint32_t i = 0; i < count; ++i) {
        auto first = stacked.data().begin() + static_cast<std::ptrdiff_t>(i * each);
        out.embeddings.emplace_back(emb, std::vector<Real>(first, first + static_cast<std::ptrdiff_t>(each)));
      }
    }
  }
  if (out.has_encoder) {
    ByteReader s = section(out.layout.encoder_bytes);
    read_params(s, out.model.encoder_parameters());
  }
  if (flags & kFlagExtra) {
    ByteReader s = section(out.layout.extra_bytes);
    auto b = s.bytes(s.remaining());
    out.extra.assign(b.begin(), b.end());
  }
  if (r.remaining() != 0) malformed("trailing bytes after the last section");
  return out;
}

void copy_parameters(const std::vector<NamedParam>& from, const std::vector<NamedParam>& to) {
  if (from.size() != to.size()) throw UsageError("copy_parameters: parameter lists differ in length");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i].tensor.shape() != to[i].tensor.shape()) {
      throw UsageError("copy_parameters: shape mismatch at " + to[i].name);
    }
    auto dst = Tensor(to[i].tensor).mutable_data();
    std::copy(from[i].tensor.data().begin(), from[i].tensor.data().end(), dst.begin());
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::string rate_csv(const std::vector<RateReport>& reports) {
  std::ostringstream os;
  os << "bits,bpp,psnr,ms_ssim\n" << std::setprecision(10);
  for (const auto& r : reports) os << r.bits << ',' << r.bpp << ',' << r.psnr << ',' << r.ms_ssim << '\n';
  return os.str();
}

std::vector<Tensor> compute_embeddings(const Model& model, const VideoDataset& data) {
  NoGradGuard no_grad;
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(encode(model, data.frame(i)));
  return out;
}

std::vector<Tensor> decode_all(const Model& model, const std::vector<Tensor>& embeddings) {
  NoGradGuard no_grad;
  std::vector<Tensor> out;
  for (const auto& e : embeddings) out.push_back(decode(model, e));
  return out;
}

RateReport measure_rate(const Model& model, const std::vector<Tensor>& embeddings,
                        const VideoDataset& data, int bits, std::vector<Tensor>* decoded) {
  if (embeddings.size() != data.size()) throw UsageError("measure_rate: one embedding per frame is required");
  ContainerLayout layout;
  ContainerOptions opts;
  opts.bits = bits;
  const auto bytes = save_container(model, embeddings, opts, &layout);
  const LoadedContainer loaded = load_container(bytes);
  std::vector<Tensor> frames = decode_all(loaded.model, loaded.embeddings);

  RateReport r;
  r.bits = bits;
  r.total_bits = static_cast<long long>(bytes.size()) * 8;
  r.decoder_bits = static_cast<long long>(layout.decoder_bytes) * 8;
  r.embedding_bits = static_cast<long long>(layout.embedding_bytes) * 8;
  r.header_bits = static_cast<long long>(layout.header_bytes()) * 8;
  r.bpp = static_cast<double>(r.total_bits) /
          (static_cast<double>(data.size()) * data.height() * data.width());
  MetricReport m;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Tensor& target = data.frame(i);
    m.add(psnr(frames[i], target), ms_ssim_value(frames[i], target));
  }
  r.psnr = m.mean_psnr;
  r.ms_ssim = m.mean_ms_ssim;
  if (decoded) *decoded = std::move(frames);
  return r;
}

std::vector<RateReport> rate_distortion(const Model& model, const VideoDataset& data,
                                        const std::vector<int>& bit_widths) {
  const auto embeddings = compute_embeddings(model, data);
  std::vector<RateReport> out;
  for (int b : bit_widths) out.push_back(measure_rate(model, embeddings, data, b));
  return out;
}

}  // namespace mnerv::inline MNERV_PRECISION_NS

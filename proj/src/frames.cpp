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

#include "mnerv/frames.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mnerv/bytes.h"
#include "mnerv/codec.h"
#include "mnerv/error.h"

namespace mnerv::inline MNERV_PRECISION_NS {
namespace {

[[noreturn]] void fail(LoadErrorKind kind, const std::filesystem::path& file, const std::string& what) {
  throw LoadError(kind, file.string() + ": " + what);
}

std::uint8_t to_byte(Real v) {
  const double s = std::nearbyint(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(s);
}

void check_frame(const Tensor& f) {
  if (f.rank() != 3 || f.dim(0) != 3) throw UsageError("frames must be (3,H,W), got " + shape_str(f.shape()));
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  int c = 0;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

Tensor read_ppm(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(LoadErrorKind::kMalformed, file, "cannot open");
  if (ppm_token(in) != "P6") fail(LoadErrorKind::kBadMagic, file, "not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(ppm_token(in));
    h = std::stoi(ppm_token(in));
    maxval = std::stoi(ppm_token(in));
  } catch (const std::exception&) {
    fail(LoadErrorKind::kMalformed, file, "bad PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) fail(LoadErrorKind::kMalformed, file, "only 8-bit PPM is supported");
  std::vector<unsigned char> px(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) fail(LoadErrorKind::kTruncated, file, "pixel data ends early");
  std::vector<Real> v(px.size());
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c) v[c * plane + p] = static_cast<Real>(px[p * 3 + c]) / Real(255);
  return Tensor({3, h, w}, std::move(v));
}

void write_ppm(const Tensor& f, const std::filesystem::path& file) {
  const int h = f.dim(1), w = f.dim(2);
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  std::ostringstream head;
  head << "P6\n" << w << ' ' << h << "\n255\n";
  const std::string hs = head.str();
  std::vector<std::uint8_t> out(hs.begin(), hs.end());
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c) out.push_back(to_byte(f.data()[c * plane + p]));
  write_file(file, out);
}

VideoDataset read_raw(const std::filesystem::path& file) {
  const auto bytes = read_file(file);
  if (bytes.size() < 16) fail(LoadErrorKind::kTruncated, file, "shorter than the 16-byte header");
  if (!std::equal(kRawFrameMagic, kRawFrameMagic + 4, bytes.begin())) {
    fail(LoadErrorKind::kBadMagic, file, "not a raw MNVF video");
  }
  ByteReader r(std::span<const std::uint8_t>(bytes).subspan(4));
  const std::uint32_t t = r.u32(), h = r.u32(), w = r.u32();
  if (t == 0 || h == 0 || w == 0) fail(LoadErrorKind::kMalformed, file, "empty video");
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t need = 16 + static_cast<std::size_t>(t) * 3 * plane;
  if (bytes.size() < need) {
    fail(LoadErrorKind::kTruncated, file, "holds " + std::to_string(bytes.size()) + " of " + std::to_string(need) + " bytes");
  }
  if (bytes.size() != need) fail(LoadErrorKind::kMalformed, file, "trailing bytes after the last frame");
  std::vector<Tensor> frames;
  for (std::uint32_t i = 0; i < t; ++i) {
    std::vector<Real> v(3 * plane);
    const std::uint8_t* src = bytes.data() + 16 + static_cast<std::size_t>(i) * 3 * plane;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<Real>(src[k]) / Real(255);
    frames.emplace_back(Shape{3, static_cast<int>(h), static_cast<int>(w)}, std::move(v));
  }
  return VideoDataset(std::move(frames));
}

// Frame index encoded in a file stem made only of digits, else -1.
long long stem_index(const std::filesystem::path& p) {
  const std::string s = p.stem().string();
  if (s.empty() || s.size() > 12 || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return -1;
  }
  return std::stoll(s);
}

}  // namespace

VideoDataset load_frames(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw LoadError(LoadErrorKind::kMalformed, path.string() + ": no such file or directory");
  if (!std::filesystem::is_directory(path)) return read_raw(path);

  std::map<long long, std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ppm") continue;
    const long long idx = stem_index(entry.path());
    if (idx < 0) continue;
    if (!files.emplace(idx, entry.path()).second) {
      fail(LoadErrorKind::kMalformed, entry.path(), "duplicates frame index " + std::to_string(idx));
    }
  }
  if (files.empty()) throw LoadError(LoadErrorKind::kMalformed, path.string() + ": no numbered .ppm frames");
  std::vector<Tensor> frames;
  long long expect = 0;
  for (const auto& [idx, file] : files) {
    if (idx != expect) {
      fail(LoadErrorKind::kMalformed, path / (std::to_string(expect) + ".ppm"), "missing frame in sequence");
    }
    Tensor f = read_ppm(file);
    if (!frames.empty() && f.shape() != frames.front().shape()) {
      fail(LoadErrorKind::kMalformed, file,
           "size " + shape_str(f.shape()) + " differs from frame 0 " + shape_str(frames.front().shape()));
    }
    frames.push_back(std::move(f));
    ++expect;
  }
  return VideoDataset(std::move(frames));
}

void save_frames(const std::vector<Tensor>& frames, const std::filesystem::path& path, FrameFormat format) {
  if (frames.empty()) throw UsageError("no frames to save");
  for (const auto& f : frames) {
    check_frame(f);
    if (f.shape() != frames.front().shape()) throw UsageError("frames differ in size");
  }
  if (format == FrameFormat::kPpm) {
    std::filesystem::create_directories(path);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "%05zu.ppm", i);
      write_ppm(frames[i], path / name);
    }
    return;
  }
  ByteWriter w;
  for (char c : kRawFrameMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(static_cast<std::uint32_t>(frames.size()));
  w.u32(static_cast<std::uint32_t>(frames.front().dim(1)));
  w.u32(static_cast<std::uint32_t>(frames.front().dim(2)));
  for (const auto& f : frames)
    for (Real v : f.data()) w.u8(to_byte(v));
  write_file(path, w.buffer());
}

std::vector<Tensor> dataset_frames(const VideoDataset& data) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data.frame(i));
  return out;
}

}  // namespace mnerv::inline MNERV_PRECISION_NS

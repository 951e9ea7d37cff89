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

#include "mnerv/entropy.h"

#include <algorithm>
#include <map>
#include <string>

#include "mnerv/bytes.h"
#include "mnerv/error.h"

namespace mnerv::entropy {
namespace {

constexpr std::uint8_t kModeRange = 0;
constexpr std::uint8_t kModePacked = 1;
constexpr std::uint32_t kTop = 1u << 24;

struct Model {
  std::vector<std::uint16_t> symbols;
  std::vector<std::uint32_t> freq;
  std::vector<std::uint32_t> cum;  // cum[i] = sum of freq[0..i)
  std::uint32_t total = 0;

  void finish() {
    cum.assign(freq.size() + 1, 0);
    for (std::size_t i = 0; i < freq.size(); ++i) cum[i + 1] = cum[i] + freq[i];
    total = cum.back();
  }
};

Model build_model(std::span<const std::uint32_t> symbols) {
  std::map<std::uint32_t, std::uint64_t> counts;
  for (auto s : symbols) ++counts[s];
  Model m;
  std::uint64_t n = symbols.size();
  for (auto [s, c] : counts) {
    m.symbols.push_back(static_cast<std::uint16_t>(s));
    m.freq.push_back(static_cast<std::uint32_t>(c));
  }
  if (n > kMaxTotalFrequency) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < m.freq.size(); ++i) {
      std::uint64_t scaled = static_cast<std::uint64_t>(counts[m.symbols[i]]) * kMaxTotalFrequency / n;
      m.freq[i] = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, scaled));
      sum += m.freq[i];
    }
    while (sum > kMaxTotalFrequency) {
      auto it = std::max_element(m.freq.begin(), m.freq.end());
      --*it;
      --sum;
    }
  }
  m.finish();
  return m;
}

class RangeEncoder {
 public:
  void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
    range_ /= total;
    low_ += static_cast<std::uint64_t>(cum) * range_;
    range_ *= freq;
    while (range_ < kTop) {
      range_ <<= 8;
      shift_low();
    }
  }

  std::vector<std::uint8_t> finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
  }

 private:
  void shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const auto carry = static_cast<std::uint8_t>(low_ >> 32);
      if (!first_) out_.push_back(static_cast<std::uint8_t>(cache_ + carry));
      first_ = false;
      for (; pending_ > 0; --pending_) out_.push_back(static_cast<std::uint8_t>(0xFF + carry));
      cache_ = static_cast<std::uint8_t>(low_ >> 24);
    } else {
      ++pending_;
    }
    low_ = (low_ & 0x00FFFFFFu) << 8;
  }

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 0;
  bool first_ = true;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> data) : data_(data) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
  }

  std::uint32_t peek(std::uint32_t total) {
    range_ /= total;
    return std::min(code_ / range_, total - 1);
  }

  void consume(std::uint32_t cum, std::uint32_t freq) {
    code_ -= cum * range_;
    range_ *= freq;
    while (range_ < kTop) {
      code_ = (code_ << 8) | next();
      range_ <<= 8;
    }
  }

 private:
  std::uint32_t next() { return pos_ < data_.size() ? data_[pos_++] : 0u; }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

std::size_t packed_bytes(std::size_t count, int bits) {
  return (count * static_cast<std::size_t>(bits) + 7) / 8;
}

void write_packed(ByteWriter& w, std::span<const std::uint32_t> symbols, int bits) {
  std::vector<std::uint8_t> out(packed_bytes(symbols.size(), bits), 0);
  std::size_t bit = 0;
  for (auto s : symbols) {
    for (int b = 0; b < bits; ++b, ++bit) {
      if ((s >> b) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  }
  w.bytes(out);
}

std::vector<std::uint32_t> read_packed(ByteReader& r, std::size_t count, int bits) {
  auto in = r.bytes(packed_bytes(count, bits));
  std::vector<std::uint32_t> out(count, 0);
  std::size_t bit = 0;
  for (auto& s : out) {
    for (int b = 0; b < bits; ++b, ++bit) {
      if ((in[bit / 8] >> (bit % 8)) & 1u) s |= 1u << b;
    }
  }
  return out;
}

[[noreturn]] void malformed(const std::string& what) {
  throw LoadError(LoadErrorKind::kMalformed, "entropy payload: " + what);
}

}  // namespace

std::vector<std::uint8_t> encode(std::span<const std::uint32_t> symbols, int bits) {
  if (bits < 1 || bits > 16) throw UsageError("symbol width must be in [1,16], got " + std::to_string(bits));
  const std::uint32_t limit = 1u << bits;
  for (auto s : symbols) {
    if (s >= limit) {
      throw UsageError("symbol " + std::to_string(s) + " does not fit in " + std::to_string(bits) + " bits");
    }
  }

  ByteWriter packed;
  packed.u8(kModePacked);
  packed.u8(static_cast<std::uint8_t>(bits));
  packed.u32(static_cast<std::uint32_t>(symbols.size()));
  write_packed(packed, symbols, bits);
  if (symbols.empty()) return packed.take();

  const Model m = build_model(symbols);
  // Symbol -> model index, dense over the alphabet.
  std::vector<std::uint32_t> index(limit, 0);
  for (std::size_t i = 0; i < m.symbols.size(); ++i) index[m.symbols[i]] = static_cast<std::uint32_t>(i);

  std::vector<std::uint8_t> coded;
  if (m.symbols.size() > 1) {
    RangeEncoder enc;
    for (auto s : symbols) {
      const auto i = index[s];
      enc.encode(m.cum[i], m.freq[i], m.total);
    }
    coded = enc.finish();
  }

  ByteWriter ranged;
  ranged.u8(kModeRange);
  ranged.u8(static_cast<std::uint8_t>(bits));
  ranged.u32(static_cast<std::uint32_t>(symbols.size()));
  ranged.u32(static_cast<std::uint32_t>(m.symbols.size()));
  for (std::size_t i = 0; i < m.symbols.size(); ++i) {
    ranged.u16(m.symbols[i]);
    ranged.u32(m.freq[i]);
  }
  ranged.u32(static_cast<std::uint32_t>(coded.size()));
  ranged.bytes(coded);

  return ranged.size() < packed.size() ? ranged.take() : packed.take();
}

std::vector<std::uint32_t> decode(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const std::uint8_t mode = r.u8();
  const int bits = r.u8();
  const std::uint32_t count = r.u32();
  if (bits < 1 || bits > 16) malformed("bad symbol width " + std::to_string(bits));

  if (mode == kModePacked) return read_packed(r, count, bits);
  if (mode != kModeRange) malformed("unknown mode " + std::to_string(mode));

  const std::uint32_t distinct = r.u32();
  if (distinct == 0 || distinct > (1u << bits)) malformed("bad alphabet size");
  Model m;
  for (std::uint32_t i = 0; i < distinct; ++i) {
    m.symbols.push_back(r.u16());
    m.freq.push_back(r.u32());
    if (m.freq.back() == 0) malformed("zero frequency");
  }
  std::uint64_t total = 0;
  for (auto f : m.freq) total += f;
  if (total > kMaxTotalFrequency) malformed("frequency total exceeds 2^16");
  m.finish();
  const std::uint32_t coded_len = r.u32();
  auto coded = r.bytes(coded_len);

  std::vector<std::uint32_t> out(count, m.symbols[0]);
  if (distinct == 1) return out;

  std::vector<std::uint32_t> slot(m.total);
  for (std::uint32_t i = 0; i < distinct; ++i) {
    std::fill(slot.begin() + m.cum[i], slot.begin() + m.cum[i + 1], i);
  }
  RangeDecoder dec(coded);
  for (auto& s : out) {
    const auto i = slot[dec.peek(m.total)];
    dec.consume(m.cum[i], m.freq[i]);
    s = m.symbols[i];
  }
  return out;
}

}  // namespace mnerv::entropy

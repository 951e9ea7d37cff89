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
#include <span>
#include <vector>

namespace mnerv::entropy {

/// Static range coder over the empirical symbol distribution.
///
/// Payload layout (little-endian):
///   u8  mode        0 = range coded, 1 = bit-packed
///   u8  bits        symbol width, 1..16
///   u32 count       number of symbols
///   mode 0: u32 distinct, distinct x (u16 symbol, u32 frequency),
///           u32 coded_length, coded bytes
///   mode 1: ceil(count * bits / 8) bytes, LSB-first
///
/// Frequencies are the symbol counts, rescaled to a total of at most 2^16
/// when needed. The encoder emits whichever mode is shorter, so a payload
/// never exceeds the packed size by more than the fixed header.
std::vector<std::uint8_t> encode(std::span<const std::uint32_t> symbols, int bits);

// Inverse of encode. Throws LoadError on malformed payloads.
std::vector<std::uint32_t> decode(std::span<const std::uint8_t> payload);

inline constexpr std::uint32_t kMaxTotalFrequency = 1u << 16;

// Header bytes shared by both modes.
inline constexpr std::size_t kFixedHeaderBytes = 6;

}  // namespace mnerv::entropy

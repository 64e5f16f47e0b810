// Copyright 2026 The YASGD Authors. All Rights Reserved.
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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace yasgd::comm {

enum class DType : std::uint8_t { kF32 = 0, kF16 = 1 };

std::size_t DTypeWidth(DType dtype);
const char* DTypeName(DType dtype);

class CommError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Frame layout, all fields little-endian:
//
//   offset  size  field
//        0     4  magic "YASG"
//        4     1  version (1)
//        5     8  iteration id
//       13     4  group id
//       17     4  chunk index
//       21     1  dtype (0 = f32, 1 = f16)
//       22     8  element count
//       30     -  payload, element count * dtype width bytes
struct WireHeader {
  static constexpr std::array<char, 4> kMagic = {'Y', 'A', 'S', 'G'};
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kSize = 30;

  std::uint64_t iteration = 0;
  std::uint32_t group = 0;
  std::uint32_t chunk = 0;
  DType dtype = DType::kF32;
  std::uint64_t count = 0;

  std::size_t payload_bytes() const { return count * DTypeWidth(dtype); }

  void EncodeTo(std::span<std::byte, kSize> out) const;
  // Throws CommError on bad magic, unknown version or unknown dtype.
  static WireHeader Decode(std::span<const std::byte> bytes);
};

struct WireMessage {
  WireHeader header;
  std::vector<std::byte> payload;

  std::vector<std::byte> Encode() const;
  // Throws CommError when the frame is malformed or the payload length does
  // not match the header.
  static WireMessage Decode(std::span<const std::byte> frame);

  std::size_t wire_size() const { return WireHeader::kSize + payload.size(); }
};

// Little-endian payload packing.
std::vector<std::byte> PackF32(std::span<const float> values);
void UnpackF32(std::span<const std::byte> payload, std::span<float> out);
// Quantizes to binary16 with round-to-nearest-even while packing.
std::vector<std::byte> PackF16(std::span<const float> values);
void UnpackF16(std::span<const std::byte> payload, std::span<float> out);

// Group ids at or above this value tag control traffic (barriers, flags).
inline constexpr std::uint32_t kControlGroupBase = 0xFFFF0000u;
inline constexpr std::uint32_t kBarrierGroup = 0xFFFFFFFFu;
inline constexpr std::uint32_t kFlagsGroup = 0xFFFFFFFEu;

}  // namespace yasgd::comm

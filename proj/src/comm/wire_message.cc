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

#include "yasgd/comm/wire_message.h"

#include <algorithm>
#include <bit>

#include <fmt/core.h>

#include "yasgd/optim/half.h"

namespace yasgd::comm {
namespace {

template <typename U>
void PutLe(std::byte* out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out[i] = static_cast<std::byte>((value >> (8 * i)) & 0xFF);
  }
}

template <typename U>
U GetLe(const std::byte* in) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
  }
  return value;
}

}  // namespace

std::size_t DTypeWidth(DType dtype) {
  switch (dtype) {
    case DType::kF32: return 4;
    case DType::kF16: return 2;
  }
  throw CommError("unknown dtype");
}

const char* DTypeName(DType dtype) {
  return dtype == DType::kF16 ? "f16" : "f32";
}

void WireHeader::EncodeTo(std::span<std::byte, kSize> out) const {
  std::byte* p = out.data();
  for (std::size_t i = 0; i < kMagic.size(); ++i) p[i] = static_cast<std::byte>(kMagic[i]);
  p[4] = static_cast<std::byte>(kVersion);
  PutLe<std::uint64_t>(p + 5, iteration);
  PutLe<std::uint32_t>(p + 13, group);
  PutLe<std::uint32_t>(p + 17, chunk);
  p[21] = static_cast<std::byte>(dtype);
  PutLe<std::uint64_t>(p + 22, count);
}

WireHeader WireHeader::Decode(std::span<const std::byte> bytes) {
  if (bytes.size() < kSize) {
    throw CommError(fmt::format("wire header truncated: {} of {} bytes", bytes.size(), kSize));
  }
  const std::byte* p = bytes.data();
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (p[i] != static_cast<std::byte>(kMagic[i])) throw CommError("wire header: bad magic");
  }
  const auto version = std::to_integer<std::uint8_t>(p[4]);
  if (version != kVersion) {
    throw CommError(fmt::format("wire header: unsupported version {}", version));
  }
  WireHeader h;
  h.iteration = GetLe<std::uint64_t>(p + 5);
  h.group = GetLe<std::uint32_t>(p + 13);
  h.chunk = GetLe<std::uint32_t>(p + 17);
  const auto dtype = std::to_integer<std::uint8_t>(p[21]);
  if (dtype > 1) throw CommError(fmt::format("wire header: unknown dtype {}", dtype));
  h.dtype = static_cast<DType>(dtype);
  h.count = GetLe<std::uint64_t>(p + 22);
  return h;
}

std::vector<std::byte> WireMessage::Encode() const {
  if (payload.size() != header.payload_bytes()) {
    throw CommError(fmt::format("wire message: payload {} bytes, header declares {}",
                                payload.size(), header.payload_bytes()));
  }
  std::vector<std::byte> frame(WireHeader::kSize + payload.size());
  header.EncodeTo(std::span<std::byte, WireHeader::kSize>(frame.data(), WireHeader::kSize));
  std::copy(payload.begin(), payload.end(), frame.begin() + WireHeader::kSize);
  return frame;
}

WireMessage WireMessage::Decode(std::span<const std::byte> frame) {
  WireMessage m;
  m.header = WireHeader::Decode(frame);
  const std::size_t body = frame.size() - WireHeader::kSize;
  if (body != m.header.payload_bytes()) {
    throw CommError(fmt::format("wire message: {} payload bytes but header declares {}", body,
                                m.header.payload_bytes()));
  }
  m.payload.assign(frame.begin() + WireHeader::kSize, frame.end());
  return m;
}

std::vector<std::byte> PackF32(std::span<const float> values) {
  std::vector<std::byte> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    PutLe<std::uint32_t>(out.data() + 4 * i, std::bit_cast<std::uint32_t>(values[i]));
  }
  return out;
}

void UnpackF32(std::span<const std::byte> payload, std::span<float> out) {
  if (payload.size() != out.size() * 4) throw CommError("UnpackF32: size mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(GetLe<std::uint32_t>(payload.data() + 4 * i));
  }
}

std::vector<std::byte> PackF16(std::span<const float> values) {
  std::vector<std::byte> out(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    PutLe<std::uint16_t>(out.data() + 2 * i, optim::Half16::FromFloat(values[i]).bits);
  }
  return out;
}

void UnpackF16(std::span<const std::byte> payload, std::span<float> out) {
  if (payload.size() != out.size() * 2) throw CommError("UnpackF16: size mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = optim::Half16{GetLe<std::uint16_t>(payload.data() + 2 * i)}.ToFloat();
  }
}

}  // namespace yasgd::comm

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

#include "yasgd/optim/half.h"

#include <bit>
#include <stdexcept>

namespace yasgd::optim {
namespace {

constexpr std::uint32_t kFloatInf = 0x7F800000;
constexpr std::uint32_t kHalfMinNormalAsFloat = 0x38800000;  // 2^-14
constexpr std::uint32_t kHalfOverflowAsFloat = 0x477FF000;   // 65520, rounds to inf
constexpr std::uint32_t kHalfTinyTieAsFloat = 0x33000000;    // 2^-25, ties to zero

// Shifts `value` right by `shift` bits with round-to-nearest-even.
std::uint32_t ShiftRoundEven(std::uint32_t value, unsigned shift) {
  const std::uint32_t kept = value >> shift;
  const std::uint32_t rest = value & ((1u << shift) - 1u);
  const std::uint32_t halfway = 1u << (shift - 1);
  if (rest > halfway || (rest == halfway && (kept & 1u))) return kept + 1;
  return kept;
}

}  // namespace

Half16 Half16::FromFloat(float value) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(value);
  const std::uint16_t sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
  const std::uint32_t mag = x & 0x7FFFFFFFu;

  if (mag > kFloatInf) {
    // Keep the top payload bits and force the quiet bit.
    return {static_cast<std::uint16_t>(sign | 0x7E00u | ((mag >> 13) & 0x03FFu))};
  }
  if (mag == kFloatInf) return {static_cast<std::uint16_t>(sign | 0x7C00u)};
  if (mag >= kHalfOverflowAsFloat) return {static_cast<std::uint16_t>(sign | kMaxFiniteBits)};

  if (mag >= kHalfMinNormalAsFloat) {
    const std::uint32_t exponent = (mag >> 23) - 127 + 15;
    const std::uint32_t rebased = (exponent << 23) | (mag & 0x7FFFFFu);
    // The carry out of the mantissa correctly bumps the exponent.
    return {static_cast<std::uint16_t>(sign | ShiftRoundEven(rebased, 13))};
  }
  if (mag <= kHalfTinyTieAsFloat) return {sign};

  // Subnormal result: value = significand * 2^(e - 150), target unit 2^-24.
  const std::uint32_t e = mag >> 23;
  const std::uint32_t significand = (mag & 0x7FFFFFu) | 0x800000u;
  const unsigned shift = 126u - e;
  return {static_cast<std::uint16_t>(sign | ShiftRoundEven(significand, shift))};
}

float Half16::ToFloat() const {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  const std::uint32_t exponent = (bits >> 10) & 0x1Fu;
  std::uint32_t mantissa = bits & 0x3FFu;
  if (exponent == 0x1F) return std::bit_cast<float>(sign | kFloatInf | (mantissa << 13));
  if (exponent != 0) {
    return std::bit_cast<float>(sign | ((exponent + 112u) << 23) | (mantissa << 13));
  }
  if (mantissa == 0) return std::bit_cast<float>(sign);
  std::int32_t e = -14;
  while ((mantissa & 0x400u) == 0) {
    mantissa <<= 1;
    --e;
  }
  mantissa &= 0x3FFu;
  return std::bit_cast<float>(sign | static_cast<std::uint32_t>(e + 127) << 23 | (mantissa << 13));
}

void QuantizeFp16(std::span<const float> values, std::span<Half16> out) {
  if (values.size() != out.size()) throw std::invalid_argument("QuantizeFp16: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = Half16::FromFloat(values[i]);
}

std::vector<Half16> QuantizeFp16(std::span<const float> values) {
  std::vector<Half16> out(values.size());
  QuantizeFp16(values, out);
  return out;
}

void DequantizeFp16(std::span<const Half16> values, std::span<float> out) {
  if (values.size() != out.size()) throw std::invalid_argument("DequantizeFp16: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i].ToFloat();
}

std::vector<float> DequantizeFp16(std::span<const Half16> values) {
  std::vector<float> out(values.size());
  DequantizeFp16(values, out);
  return out;
}

void RoundTripFp16(std::span<float> values) {
  for (float& v : values) v = Half16::FromFloat(v).ToFloat();
}

}  // namespace yasgd::optim

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

#include <cstdint>
#include <span>
#include <vector>

namespace yasgd::optim {

// IEEE 754 binary16 value (1 sign, 5 exponent, 10 mantissa bits).
struct Half16 {
  std::uint16_t bits = 0;

  static constexpr std::uint16_t kMaxFiniteBits = 0x7BFF;  // 65504

  // Round-to-nearest-even. Finite values beyond the half range saturate to
  // +-65504; infinities stay infinite and NaN stays NaN.
  static Half16 FromFloat(float value);
  float ToFloat() const;

  friend bool operator==(Half16 a, Half16 b) { return a.bits == b.bits; }
};

std::vector<Half16> QuantizeFp16(std::span<const float> values);
void QuantizeFp16(std::span<const float> values, std::span<Half16> out);
std::vector<float> DequantizeFp16(std::span<const Half16> values);
void DequantizeFp16(std::span<const Half16> values, std::span<float> out);

// Replaces every value with its nearest half-precision neighbour.
void RoundTripFp16(std::span<float> values);

}  // namespace yasgd::optim

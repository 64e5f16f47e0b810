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
#include <cstdint>

namespace yasgd::model {

// Philox4x32-10 counter-based generator (Salmon et al., Random123 v1.14
// reference constants). Output is a pure function of (counter, key), so any
// worker can regenerate any stream position without coordination.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter Block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  static Key KeyFromSeed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

// Sequential view over a Philox stream identified by (key, stream id).
// Counter layout: word0/word1 = 64-bit block index, word2/word3 = stream id.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(Philox4x32::KeyFromSeed(seed)), stream_(stream_id) {}

  std::uint32_t NextU32() {
    if (lane_ == 4) Refill();
    return buffer_[lane_++];
  }

  // Uniform double in (0, 1) built from 53 random bits.
  double NextOpenUnit() {
    const std::uint64_t hi = NextU32();
    const std::uint64_t lo = NextU32();
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  // Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
  std::uint64_t NextBelow(std::uint64_t bound);

 private:
  void Refill() {
    buffer_ = Philox4x32::Block(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
         static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        key_);
    ++block_;
    lane_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int lane_ = 4;
};

// exp(-y) for y in [0, 8] using only IEEE-exact basic operations, so the
// result is identical on every conforming platform (unlike libm).
double PortableExpNeg(double y);

// Standard normal restricted to [-bound, bound], sampled by rejection from
// the uniform proposal. Bit-reproducible across platforms.
double SampleTruncatedNormal(PhiloxStream& rng, double bound);

}  // namespace yasgd::model

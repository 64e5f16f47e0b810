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

#include "yasgd/model/philox.h"

#include <stdexcept>

namespace yasgd::model {

std::uint64_t PhiloxStream::NextBelow(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("NextBelow: bound must be positive");
  if (bound <= 0xFFFFFFFFull) {
    const std::uint32_t b = static_cast<std::uint32_t>(bound);
    const std::uint32_t threshold = static_cast<std::uint32_t>(-b) % b;
    while (true) {
      const std::uint64_t m = std::uint64_t{NextU32()} * b;
      if (static_cast<std::uint32_t>(m) >= threshold) return m >> 32;
    }
  }
  // Wide bounds: rejection on 64-bit draws.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  while (true) {
    const std::uint64_t hi = NextU32();
    const std::uint64_t x = (hi << 32) | NextU32();
    if (x < limit) return x % bound;
  }
}

double PortableExpNeg(double y) {
  if (!(y >= 0.0 && y <= 8.0)) throw std::domain_error("PortableExpNeg: argument outside [0, 8]");
  // exp(-y) = exp(-y/8)^8; the reduced argument is <= 1 and a 20-term Taylor
  // series in Horner form is accurate to ~1 ulp there.
  const double r = y * 0.125;
  double sum = 1.0;
  for (int k = 20; k >= 1; --k) sum = 1.0 - r * sum / static_cast<double>(k);
  sum *= sum;
  sum *= sum;
  sum *= sum;
  return sum;
}

double SampleTruncatedNormal(PhiloxStream& rng, double bound) {
  while (true) {
    const double x = bound * (2.0 * rng.NextOpenUnit() - 1.0);
    const double accept = rng.NextOpenUnit();
    if (accept < PortableExpNeg(0.5 * x * x)) return x;
  }
}

}  // namespace yasgd::model

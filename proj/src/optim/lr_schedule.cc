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

#include "yasgd/optim/lr_schedule.h"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace yasgd::optim {

DecayKind ParseDecayKind(const std::string& name) {
  if (name == "constant") return DecayKind::kConstant;
  if (name == "step") return DecayKind::kStep;
  if (name == "polynomial" || name == "poly") return DecayKind::kPolynomial;
  if (name == "linear") return DecayKind::kLinear;
  throw std::invalid_argument(fmt::format("unknown decay pattern '{}'", name));
}

const char* DecayKindName(DecayKind kind) {
  switch (kind) {
    case DecayKind::kConstant: return "constant";
    case DecayKind::kStep: return "step";
    case DecayKind::kPolynomial: return "polynomial";
    case DecayKind::kLinear: return "linear";
  }
  return "?";
}

void LrSchedule::Validate() const {
  if (!(base_lr > 0.0)) throw std::invalid_argument("lr schedule: base_lr must be > 0");
  if (warmup_iters < 0) throw std::invalid_argument("lr schedule: warmup_iters must be >= 0");
  if (total_iters < 1) throw std::invalid_argument("lr schedule: total_iters must be >= 1");
  if (decay == DecayKind::kPolynomial && power < 0.0) {
    throw std::invalid_argument("lr schedule: power must be >= 0");
  }
  if (decay == DecayKind::kStep) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("lr schedule: gamma must be >= 0");
    for (auto m : milestones) {
      if (m <= warmup_iters) {
        throw std::invalid_argument(
            fmt::format("lr schedule: milestone {} does not lie after warmup ({})", m, warmup_iters));
      }
    }
  }
}

double LrAt(const LrSchedule& s, std::int64_t iter) {
  if (iter < 0 || iter >= s.total_iters) {
    throw std::out_of_range(
        fmt::format("LrAt: iteration {} outside [0, {})", iter, s.total_iters));
  }
  if (iter < s.warmup_iters) {
    // Ratio first so the last warmup step lands on base_lr exactly.
    return s.base_lr * (static_cast<double>(iter + 1) / static_cast<double>(s.warmup_iters));
  }
  switch (s.decay) {
    case DecayKind::kConstant:
      return s.base_lr;
    case DecayKind::kStep: {
      int passed = 0;
      for (auto m : s.milestones) passed += (m <= iter) ? 1 : 0;
      return s.base_lr * std::pow(s.gamma, passed);
    }
    case DecayKind::kPolynomial:
    case DecayKind::kLinear: {
      const double power = s.decay == DecayKind::kLinear ? 1.0 : s.power;
      const double span = static_cast<double>(s.total_iters - s.warmup_iters);
      const double frac = static_cast<double>(iter - s.warmup_iters) / span;
      return s.base_lr * std::pow(1.0 - frac, power);
    }
  }
  return s.base_lr;
}

}  // namespace yasgd::optim

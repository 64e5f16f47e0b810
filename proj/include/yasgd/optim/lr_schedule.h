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
#include <string>
#include <vector>

namespace yasgd::optim {

enum class DecayKind { kConstant, kStep, kPolynomial, kLinear };

DecayKind ParseDecayKind(const std::string& name);
const char* DecayKindName(DecayKind kind);

// Linear warmup followed by a decay pattern.
//
//   iter < warmup:  base * (iter + 1) / warmup
//   step:           base * gamma^(number of milestones <= iter)
//   polynomial:     base * (1 - (iter - warmup) / (total - warmup))^power
//   linear:         polynomial with power 1
//   constant:       base
//
// Step milestones are absolute iteration numbers and must lie after warmup.
struct LrSchedule {
  double base_lr = 0.1;
  std::int64_t warmup_iters = 0;
  std::int64_t total_iters = 1;
  DecayKind decay = DecayKind::kPolynomial;
  double power = 2.0;
  std::vector<std::int64_t> milestones;
  double gamma = 0.1;

  void Validate() const;
};

// Throws std::out_of_range for iter outside [0, total_iters).
double LrAt(const LrSchedule& schedule, std::int64_t iter);

}  // namespace yasgd::optim

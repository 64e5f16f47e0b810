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
#include <set>
#include <span>
#include <string>
#include <vector>

#include "yasgd/model/params.h"
#include "yasgd/optim/lr_schedule.h"

namespace yasgd::optim {

// L2 norm of every segment in one sweep over the fused buffer.
//
// Summation order (fixed, so results are bit-reproducible): squares are
// accumulated in double precision, element by element in increasing offset
// order within each segment, starting from +0.0; the norm is the correctly
// rounded sqrt of that sum. Segments must tile the buffer.
template <typename T>
std::vector<double> BatchedNorms(std::span<const T> flat,
                                 std::span<const model::ParamSegment> segments);

struct LarsConfig {
  bool enabled = true;
  double eta = 0.001;
  double epsilon_guard = 0.0;
  double weight_decay = 0.0;
  std::set<model::SegmentKind> skip_kinds = {model::SegmentKind::kBias,
                                             model::SegmentKind::kBnGamma,
                                             model::SegmentKind::kBnBeta};

  bool Skips(model::SegmentKind kind) const { return skip_kinds.count(kind) > 0; }
};

// eta * |w| / (|g| + weight_decay * |w| + epsilon_guard), or 1 when |w| is
// zero or the denominator does not exceed epsilon_guard.
double LarsTrustRatio(double w_norm, double g_norm, const LarsConfig& cfg);

struct MomentumState {
  double momentum = 0.9;
  std::vector<float> velocity;  // congruent with the parameter buffer
};

MomentumState MakeMomentumState(const model::FlatParams& params, double momentum);

struct StepReport {
  double lr = 0.0;
  std::vector<double> local_lr;  // per segment
};

// Momentum SGD with per-segment LARS scaling:
//   local_lr = lr_at(iter) * trust_ratio   (skipped kinds: lr_at(iter))
//   v <- mu * v + (g + wd * w)             (skipped kinds: no wd)
//   w <- w - local_lr * v
// Norms come from one BatchedNorms pass over weights and one over gradients.
// Throws std::domain_error, leaving params and state untouched, when any
// gradient element is non-finite.
StepReport SgdStep(model::FlatParams& params, const model::FlatGrads& grads, MomentumState& state,
                   const LrSchedule& schedule, const LarsConfig& lars, std::int64_t iter);

}  // namespace yasgd::optim

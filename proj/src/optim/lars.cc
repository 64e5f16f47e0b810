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

#include "yasgd/optim/lars.h"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace yasgd::optim {

template <typename T>
std::vector<double> BatchedNorms(std::span<const T> flat,
                                 std::span<const model::ParamSegment> segments) {
  model::ValidateTiling(segments, flat.size());
  std::vector<double> norms(segments.size());
  std::size_t seg = 0;
  std::size_t seg_end = segments.empty() ? 0 : segments[0].len;
  double acc = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    while (i == seg_end) {
      norms[seg++] = std::sqrt(acc);
      acc = 0.0;
      seg_end += segments[seg].len;
    }
    const double x = static_cast<double>(flat[i]);
    acc += x * x;
  }
  // Trailing segments (including empty ones) close after the sweep.
  for (; seg < segments.size(); ++seg) {
    norms[seg] = std::sqrt(acc);
    acc = 0.0;
  }
  return norms;
}

template std::vector<double> BatchedNorms<float>(std::span<const float>,
                                                 std::span<const model::ParamSegment>);
template std::vector<double> BatchedNorms<double>(std::span<const double>,
                                                  std::span<const model::ParamSegment>);

double LarsTrustRatio(double w_norm, double g_norm, const LarsConfig& cfg) {
  if (w_norm == 0.0) return 1.0;
  const double denom = g_norm + cfg.weight_decay * w_norm + cfg.epsilon_guard;
  if (denom <= cfg.epsilon_guard) return 1.0;
  return cfg.eta * w_norm / denom;
}

MomentumState MakeMomentumState(const model::FlatParams& params, double momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must be in [0, 1)");
  }
  MomentumState s;
  s.momentum = momentum;
  s.velocity.assign(params.values.size(), 0.0f);
  return s;
}

StepReport SgdStep(model::FlatParams& params, const model::FlatGrads& grads, MomentumState& state,
                   const LrSchedule& schedule, const LarsConfig& lars, std::int64_t iter) {
  if (grads.values.size() != params.values.size() ||
      state.velocity.size() != params.values.size()) {
    throw std::invalid_argument("SgdStep: params, grads and velocity are not congruent");
  }
  for (std::size_t i = 0; i < grads.values.size(); ++i) {
    if (!std::isfinite(grads.values[i])) {
      throw std::domain_error(
          fmt::format("SgdStep: non-finite gradient {} at element {} (iteration {}); step rejected",
                      grads.values[i], i, iter));
    }
  }
  const auto& segments = params.layout->segments();
  StepReport report;
  report.lr = LrAt(schedule, iter);
  report.local_lr.assign(segments.size(), report.lr);

  if (lars.enabled) {
    const auto w_norms = BatchedNorms<float>(params.values, segments);
    const auto g_norms = BatchedNorms<float>(grads.values, segments);
    for (std::size_t s = 0; s < segments.size(); ++s) {
      if (!lars.Skips(segments[s].kind)) {
        report.local_lr[s] = report.lr * LarsTrustRatio(w_norms[s], g_norms[s], lars);
      }
    }
  }

  const float mu = static_cast<float>(state.momentum);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const bool decays = !lars.Skips(segments[s].kind) && lars.weight_decay != 0.0;
    const float wd = decays ? static_cast<float>(lars.weight_decay) : 0.0f;
    const float lr = static_cast<float>(report.local_lr[s]);
    const std::size_t begin = segments[s].offset;
    const std::size_t end = begin + segments[s].len;
    for (std::size_t i = begin; i < end; ++i) {
      float& w = params.values[i];
      float& v = state.velocity[i];
      v = mu * v + (grads.values[i] + wd * w);
      w = w - lr * v;
    }
  }
  return report;
}

}  // namespace yasgd::optim

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

#include "yasgd/model/batchnorm.h"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace yasgd::model {

BatchNormState BatchNormState::ForFeatures(int features, double momentum, double epsilon) {
  if (momentum < 0.0 || momentum > 1.0) throw std::invalid_argument("bn momentum must be in [0,1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("bn epsilon must be > 0");
  BatchNormState s;
  s.running_mean.assign(features, 0.0);
  s.running_var.assign(features, 1.0);
  s.momentum = momentum;
  s.epsilon = epsilon;
  return s;
}

void BatchNormUpdate(BatchNormState& state, std::span<const double> batch_mean,
                     std::span<const double> batch_var) {
  if (batch_mean.size() != state.running_mean.size() ||
      batch_var.size() != state.running_var.size()) {
    throw std::invalid_argument("BatchNormUpdate: feature count mismatch");
  }
  for (std::size_t i = 0; i < batch_var.size(); ++i) {
    if (!std::isfinite(batch_mean[i]) || !std::isfinite(batch_var[i])) {
      throw std::invalid_argument(fmt::format("BatchNormUpdate: non-finite statistic at {}", i));
    }
    if (batch_var[i] < 0.0) {
      throw std::invalid_argument(
          fmt::format("BatchNormUpdate: negative batch variance {} at {}", batch_var[i], i));
    }
  }
  const double m = state.momentum;
  for (std::size_t i = 0; i < batch_mean.size(); ++i) {
    state.running_mean[i] = m * state.running_mean[i] + (1.0 - m) * batch_mean[i];
    state.running_var[i] = m * state.running_var[i] + (1.0 - m) * batch_var[i];
  }
}

std::vector<double> SmoothLabels(int label, double epsilon, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("SmoothLabels: need at least 2 classes");
  if (label < 0 || label >= num_classes) {
    throw std::out_of_range(fmt::format("SmoothLabels: class {} outside [0, {})", label, num_classes));
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("SmoothLabels: epsilon must be in [0, 1)");
  }
  const double off = epsilon / num_classes;
  std::vector<double> v(num_classes, off);
  v[label] = 1.0 - epsilon + off;
  return v;
}

}  // namespace yasgd::model

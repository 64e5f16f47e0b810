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

#include <span>
#include <vector>

namespace yasgd::model {

inline constexpr double kDefaultBnMomentum = 0.9;
inline constexpr double kDefaultBnEpsilon = 1e-5;

// Moving averages of per-feature batch statistics. Each worker keeps its own
// copy; these are never synchronized across workers.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = kDefaultBnMomentum;
  double epsilon = kDefaultBnEpsilon;

  static BatchNormState ForFeatures(int features, double momentum = kDefaultBnMomentum,
                                    double epsilon = kDefaultBnEpsilon);
  bool empty() const { return running_mean.empty(); }
};

// running <- momentum * running + (1 - momentum) * batch, elementwise.
// Throws std::invalid_argument for negative or non-finite statistics.
void BatchNormUpdate(BatchNormState& state, std::span<const double> batch_mean,
                     std::span<const double> batch_var);

// Target distribution with 1 - epsilon + epsilon/K on the true class and
// epsilon/K elsewhere.
std::vector<double> SmoothLabels(int label, double epsilon, int num_classes);

}  // namespace yasgd::model

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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace yasgd::harness {

// One training iteration (eval_acc empty) or one evaluation (lr, loss and
// throughput empty).
struct MetricsRow {
  int epoch = 0;
  std::int64_t iter = 0;
  std::optional<double> lr;
  std::optional<double> loss;
  std::optional<double> eval_acc;
  std::optional<double> imgs_per_sec;
};

inline constexpr const char* kMetricsHeader = "epoch,iter,lr,loss,eval_acc,imgs_per_sec";

// Header then one line per row. Doubles use the shortest form that reads
// back to the same value.
void WriteMetricsCsv(std::ostream& out, std::span<const MetricsRow> rows);
std::string FormatMetricsRow(const MetricsRow& row);

}  // namespace yasgd::harness

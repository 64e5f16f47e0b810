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

#include "yasgd/harness/metrics.h"

#include <ostream>

#include <fmt/core.h>

namespace yasgd::harness {
namespace {

std::string Cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

}  // namespace

std::string FormatMetricsRow(const MetricsRow& r) {
  return fmt::format("{},{},{},{},{},{}", r.epoch, r.iter, Cell(r.lr), Cell(r.loss), Cell(r.eval_acc),
                     Cell(r.imgs_per_sec));
}

void WriteMetricsCsv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << FormatMetricsRow(r) << '\n';
}

}  // namespace yasgd::harness

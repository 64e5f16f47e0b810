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

#include <iosfwd>
#include <span>
#include <vector>

#include "yasgd/harness/config.h"
#include "yasgd/sim/simulator.h"

namespace yasgd::harness {

struct SimRun {
  sim::SimConfig config;    // plan built from sim.bucket_bytes
  std::vector<int> world_sizes;  // for the scalability curve
};

// Keys under "sim." (see README). Unknown keys are an error.
SimRun ParseSimConfig(const ConfigMap& map);

// "world_size,throughput,efficiency" header plus one row per entry.
void WriteScalabilityCsv(std::ostream& out, std::span<const sim::ScalabilityRow> rows);
// "threshold_bytes,groups,iteration_us" header plus one row per entry.
void WriteSweepCsv(std::ostream& out, std::span<const sim::SweepRow> rows);

}  // namespace yasgd::harness

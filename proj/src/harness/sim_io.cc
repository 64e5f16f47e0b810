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

#include "yasgd/harness/sim_io.h"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>

namespace yasgd::harness {

SimRun ParseSimConfig(const ConfigMap& m) {
  SimRun run;
  auto& c = run.config;
  const auto bytes = m.GetIntList("sim.layer_bytes");
  const auto backward = m.GetDoubleList("sim.layer_backward_us");
  if (bytes.empty() || bytes.size() != backward.size()) {
    throw ConfigError("sim.layer_bytes and sim.layer_backward_us must be nonempty and equally long");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (bytes[i] < 1) throw ConfigError("sim.layer_bytes entries must be >= 1");
    c.layers.push_back({backward[i], static_cast<std::size_t>(bytes[i])});
  }
  c.forward_us = m.GetDouble("sim.forward_us", 0.0);
  c.step_us = m.GetDouble("sim.step_us", 0.0);
  c.batch_per_rank = static_cast<int>(m.GetInt("sim.batch_per_rank", 1));
  const std::string bw = m.GetString("sim.bandwidth_bytes_per_s", "inf");
  c.bandwidth_bytes_per_s = bw == "inf" ? std::numeric_limits<double>::infinity()
                                        : m.GetDouble("sim.bandwidth_bytes_per_s", 0.0);
  c.alpha_s = m.GetDouble("sim.alpha_s", 0.0);
  c.world_size = static_cast<int>(m.GetInt("sim.world_size", 1));
  c.overlap = m.GetBool("sim.overlap", true);
  try {
    sim::Replan(c, sched::ParseByteSize(m.GetString("sim.bucket_bytes", "4MiB")));
    for (auto p : m.GetIntList("sim.world_sizes")) run.world_sizes.push_back(static_cast<int>(p));
    if (run.world_sizes.empty()) run.world_sizes = {c.world_size};
    m.CheckAllUsed();
    c.Validate();
    for (int p : run.world_sizes) {
      if (p < 1) throw ConfigError("sim.world_sizes entries must be >= 1");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return run;
}

void WriteScalabilityCsv(std::ostream& out, std::span<const sim::ScalabilityRow> rows) {
  out << "world_size,throughput,efficiency\n";
  for (const auto& r : rows) fmt::print(out, "{},{:.6f},{:.6f}\n", r.world_size, r.throughput, r.efficiency);
}

void WriteSweepCsv(std::ostream& out, std::span<const sim::SweepRow> rows) {
  out << "threshold_bytes,groups,iteration_us\n";
  for (const auto& r : rows) {
    const std::string th = r.threshold_bytes == sched::kUnboundedBucketBytes
                               ? std::string("inf")
                               : std::to_string(r.threshold_bytes);
    fmt::print(out, "{},{},{:.3f}\n", th, r.groups, r.iteration_us);
  }
}

}  // namespace yasgd::harness

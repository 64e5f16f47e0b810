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

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "yasgd/sched/bucket_plan.h"
#include "yasgd/sched/trace.h"

namespace yasgd::sim {

// One gradient segment of the modeled network, listed in backward order;
// its segment id in plans and traces is its index in SimConfig::layers.
struct SimLayer {
  double backward_us = 0.0;
  std::size_t bytes = 0;
};

struct SimConfig {
  std::vector<SimLayer> layers;
  double forward_us = 0.0;
  double step_us = 0.0;
  int batch_per_rank = 1;
  double bandwidth_bytes_per_s = std::numeric_limits<double>::infinity();
  double alpha_s = 0.0;  // per-message latency
  int world_size = 1;
  sched::BucketPlan plan;
  bool overlap = true;

  // Throws std::invalid_argument when a field is out of range or the plan
  // does not cover the layers exactly once.
  void Validate() const;

  std::vector<std::size_t> segment_bytes() const;
  std::vector<sched::GradSegment> grad_segments() const;
};

// Rebuilds cfg.plan for a byte threshold.
void Replan(SimConfig& cfg, std::size_t threshold_bytes);

// 2 (P - 1) / P * S / B + 2 (P - 1) * alpha, in microseconds.
double RingAllreduceUs(std::size_t bytes, int world_size, double bandwidth_bytes_per_s,
                       double alpha_s);

struct Timeline {
  std::vector<sched::TraceEvent> events;
  double iteration_us = 0.0;
  double compute_us = 0.0;  // forward + backward + step
  double comm_us = 0.0;     // sum of group allreduce times
  double throughput = 0.0;  // images per second
};

// Deterministic event schedule of one iteration: forward, backward layer by
// layer, group allreduces serialized in group order, each starting at the
// later of its readiness and the previous group's end (or after the whole
// backward when overlap is off), then the optimizer step.
Timeline SimulateIteration(const SimConfig& cfg);

struct ScalabilityRow {
  int world_size = 1;
  double iteration_us = 0.0;
  double throughput = 0.0;
  double efficiency = 1.0;  // throughput(P) / (P * throughput(1))
};

std::vector<ScalabilityRow> ScalabilityCurve(const SimConfig& cfg, std::span<const int> world_sizes);

struct SweepRow {
  std::size_t threshold_bytes = 0;
  int groups = 0;
  double iteration_us = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best_threshold = 0;  // first threshold attaining the minimum
  double best_iteration_us = 0.0;
};

SweepResult ThresholdSweep(const SimConfig& cfg, std::span<const std::size_t> thresholds);

}  // namespace yasgd::sim

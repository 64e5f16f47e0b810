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

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "yasgd/comm/transport.h"
#include "yasgd/harness/metrics.h"
#include "yasgd/harness/run_config.h"
#include "yasgd/model/batchnorm.h"
#include "yasgd/model/params.h"
#include "yasgd/sched/bucket_plan.h"
#include "yasgd/sched/trace.h"

namespace yasgd::harness {

enum class RunStatus { kSuccess, kDiverged };

const char* RunStatusName(RunStatus s);

struct EvalPoint {
  int epoch = 0;
  double accuracy = 0.0;
};

// What one worker ends with.
struct RankOutcome {
  int rank = 0;
  model::FlatParams initial_params;
  model::FlatParams params;
  std::vector<model::BatchNormState> bn;
  comm::TrafficCounters startup_counters;  // after bootstrap and parameter init
  comm::TrafficCounters final_counters;
  std::vector<sched::TraceEvent> trace;
  sched::BucketPlan plan;
  std::vector<std::size_t> segment_bytes;  // wire bytes per segment id
};

struct RunResult {
  RunStatus status = RunStatus::kSuccess;
  std::string message;
  std::vector<EvalPoint> evals;
  std::optional<double> final_accuracy;
  std::optional<double> best_accuracy;
  bool target_reached = false;
  int epochs_completed = 0;
  std::int64_t iterations = 0;
  double elapsed_s = 0.0;       // run_start to run_final
  double images_per_sec = 0.0;  // over the training loop
  std::vector<MetricsRow> metrics;
  std::vector<std::string> log_lines;
  std::vector<RankOutcome> ranks;  // by rank; only the local rank for RunRank
};

struct RunOptions {
  std::ostream* log_sink = nullptr;  // MLPerf lines from rank 0
  bool record_trace = true;
  std::chrono::milliseconds bootstrap_timeout{30000};
};

// Runs every rank as a thread of this process over the configured
// transport. Throws std::runtime_error naming the failing rank when a worker
// fails; divergence is reported through the status instead.
RunResult RunTraining(const RunConfig& cfg, const RunOptions& options = {});

// Runs a single rank (TCP transport); used when each rank is its own
// process. Evaluations, metrics and log lines are filled on rank 0 only.
RunResult RunRank(const RunConfig& cfg, int rank, const RunOptions& options = {});

}  // namespace yasgd::harness

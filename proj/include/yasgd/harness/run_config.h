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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "yasgd/comm/allreduce.h"
#include "yasgd/comm/transport.h"
#include "yasgd/harness/config.h"
#include "yasgd/model/batchnorm.h"
#include "yasgd/model/dataset.h"
#include "yasgd/model/params.h"
#include "yasgd/optim/lars.h"
#include "yasgd/optim/lr_schedule.h"
#include "yasgd/sched/bucket_plan.h"

namespace yasgd::harness {

enum class Scheduling {
  kStatic,            // precomputed groups launched as backward completes
  kDynamicAllgather,  // readiness agreed through a flag allgather per layer
  kNone,              // same groups, launched only after the whole backward
};

Scheduling ParseScheduling(const std::string& name);
const char* SchedulingName(Scheduling s);

inline constexpr std::uint64_t kDefaultSeed = 100000;

struct RunConfig {
  model::ModelSpec model = model::ModelSpec::Mlp({32, 64, 64, 10}, false);
  model::DatasetParams train_data;
  model::DatasetParams eval_data;

  int world_size = 1;
  std::size_t batch_per_rank = 32;
  // Gradient averaging granularity; 0 means world_size. Must be a multiple
  // of world_size and divide the global batch.
  int grad_blocks = 0;
  int epochs = 1;
  int eval_period = 4;
  int eval_offset = 1;
  std::uint64_t seed = kDefaultSeed;  // parameter init and shuffling
  double label_smoothing = 0.0;
  double bn_momentum = model::kDefaultBnMomentum;
  double bn_epsilon = model::kDefaultBnEpsilon;

  // Learning rate schedule in epoch units; Schedule() converts to iterations.
  double base_lr = 0.1;
  double warmup_epochs = 0.0;
  optim::DecayKind decay = optim::DecayKind::kPolynomial;
  double power = 2.0;
  std::vector<double> milestone_epochs;
  double gamma = 0.1;
  double momentum = 0.9;
  optim::LarsConfig lars;

  std::size_t bucket_bytes = sched::kDefaultBucketBytes;
  Scheduling scheduling = Scheduling::kStatic;
  comm::TransportMode transport = comm::TransportMode::kLoopback;
  std::string rendezvous = "127.0.0.1:29500";
  bool fp16_comm = false;
  comm::AllreduceOrder allreduce_order = comm::AllreduceOrder::kRankOrdered;
  std::optional<double> target_accuracy;
  std::string model_name = "resnet";

  std::size_t global_batch() const { return batch_per_rank * static_cast<std::size_t>(world_size); }
  int effective_grad_blocks() const { return grad_blocks > 0 ? grad_blocks : world_size; }
  std::int64_t iterations_per_epoch() const;
  std::int64_t total_iterations() const { return iterations_per_epoch() * epochs; }
  optim::LrSchedule Schedule() const;

  // Throws ConfigError when an invariant does not hold.
  void Validate() const;
};

// Reads every documented key (see README), validates, and rejects unknown
// keys.
RunConfig ParseRunConfig(const ConfigMap& map);

}  // namespace yasgd::harness

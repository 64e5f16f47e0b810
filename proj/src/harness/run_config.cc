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

#include "yasgd/harness/run_config.h"

#include <cmath>

#include <fmt/core.h>

namespace yasgd::harness {

Scheduling ParseScheduling(const std::string& name) {
  if (name == "static") return Scheduling::kStatic;
  if (name == "dynamic-allgather") return Scheduling::kDynamicAllgather;
  if (name == "none") return Scheduling::kNone;
  throw ConfigError(fmt::format("unknown scheduling '{}' (static|dynamic-allgather|none)", name));
}

const char* SchedulingName(Scheduling s) {
  switch (s) {
    case Scheduling::kStatic: return "static";
    case Scheduling::kDynamicAllgather: return "dynamic-allgather";
    case Scheduling::kNone: return "none";
  }
  return "unknown";
}

std::int64_t RunConfig::iterations_per_epoch() const {
  return static_cast<std::int64_t>(model::IterationsPerEpoch(train_data.n, world_size, batch_per_rank));
}

optim::LrSchedule RunConfig::Schedule() const {
  optim::LrSchedule s;
  const std::int64_t ipe = iterations_per_epoch();
  s.base_lr = base_lr;
  s.warmup_iters = std::llround(warmup_epochs * static_cast<double>(ipe));
  s.total_iters = std::max<std::int64_t>(1, ipe * epochs);
  s.decay = decay;
  s.power = power;
  s.gamma = gamma;
  for (double e : milestone_epochs) s.milestones.push_back(std::llround(e * static_cast<double>(ipe)));
  return s;
}

void RunConfig::Validate() const {
  try {
    model.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (train_data.dim != model.input_dim() || eval_data.dim != model.input_dim()) {
    throw ConfigError("data.features must equal the model input width");
  }
  if (train_data.num_classes != model.num_classes() || eval_data.num_classes != model.num_classes()) {
    throw ConfigError("data.classes must equal the model output width");
  }
  if (eval_data.n < 1) throw ConfigError("data.eval_samples must be >= 1");
  if (world_size < 1) throw ConfigError("world_size must be >= 1");
  if (batch_per_rank < 1) throw ConfigError("batch_per_rank must be >= 1");
  if (train_data.n < batch_per_rank) throw ConfigError("data.train_samples is smaller than one per-rank batch");
  const int v = effective_grad_blocks();
  if (v < 1 || v % world_size != 0) throw ConfigError("grad_blocks must be a positive multiple of world_size");
  if (global_batch() % static_cast<std::size_t>(v) != 0) {
    throw ConfigError("grad_blocks must divide the global batch");
  }
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (eval_period < 1 || eval_offset < 0 || eval_offset >= eval_period) {
    throw ConfigError("need eval_period >= 1 and 0 <= eval_offset < eval_period");
  }
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw ConfigError("label_smoothing must be in [0, 1)");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0) || !(bn_epsilon > 0.0)) {
    throw ConfigError("bn.momentum must be in [0, 1] and bn.epsilon > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("opt.momentum must be in [0, 1)");
  if (!(warmup_epochs >= 0.0)) throw ConfigError("opt.warmup_epochs must be >= 0");
  if (!(lars.eta > 0.0) || !(lars.epsilon_guard >= 0.0) || !(lars.weight_decay >= 0.0)) {
    throw ConfigError("lars.eta must be > 0; lars.epsilon and opt.weight_decay >= 0");
  }
  if (bucket_bytes == 0) throw ConfigError("bucket_bytes must be > 0");
  if (target_accuracy && !(*target_accuracy > 0.0 && *target_accuracy <= 1.0)) {
    throw ConfigError("target_accuracy must be in (0, 1]");
  }
  if (model_name.empty() || model_name.find(' ') != std::string::npos) {
    throw ConfigError("model_name must be a single nonempty token");
  }
  try {
    Schedule().Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig ParseRunConfig(const ConfigMap& m) {
  RunConfig c;
  try {
    std::vector<int> dims;
    for (auto d : m.GetIntList("model.layers")) dims.push_back(static_cast<int>(d));
    if (dims.empty()) dims = {32, 64, 64, 10};
    c.model = model::ModelSpec::Mlp(dims, m.GetBool("model.batchnorm", false));
    c.model_name = m.GetString("model_name", c.model_name);

    model::DatasetParams d;
    d.seed = static_cast<std::uint64_t>(m.GetInt("data.seed", 7));
    d.dim = static_cast<int>(m.GetInt("data.features", dims.front()));
    d.num_classes = static_cast<int>(m.GetInt("data.classes", dims.back()));
    d.clusters_per_class = static_cast<int>(m.GetInt("data.clusters_per_class", d.clusters_per_class));
    d.center_scale = m.GetDouble("data.center_scale", d.center_scale);
    d.noise = m.GetDouble("data.noise", d.noise);
    const auto train_n = m.GetInt("data.train_samples", 20000);
    const auto eval_n = m.GetInt("data.eval_samples", 4000);
    if (train_n < 1 || eval_n < 1) throw ConfigError("sample counts must be >= 1");
    c.train_data = d;
    c.train_data.n = static_cast<std::size_t>(train_n);
    c.eval_data = d;
    c.eval_data.n = static_cast<std::size_t>(eval_n);
    c.eval_data.first_index = c.train_data.n;  // held-out range of the same stream

    c.world_size = static_cast<int>(m.GetInt("world_size", 1));
    const auto bpr = m.GetInt("batch_per_rank", 32);
    if (bpr < 1) throw ConfigError("batch_per_rank must be >= 1");
    c.batch_per_rank = static_cast<std::size_t>(bpr);
    c.grad_blocks = static_cast<int>(m.GetInt("grad_blocks", 0));
    c.epochs = static_cast<int>(m.GetInt("epochs", 1));
    c.eval_period = static_cast<int>(m.GetInt("eval_period", 4));
    c.eval_offset = static_cast<int>(m.GetInt("eval_offset", 1));
    c.seed = static_cast<std::uint64_t>(m.GetInt("seed", static_cast<std::int64_t>(kDefaultSeed)));
    c.label_smoothing = m.GetDouble("label_smoothing", 0.0);
    c.bn_momentum = m.GetDouble("bn.momentum", c.bn_momentum);
    c.bn_epsilon = m.GetDouble("bn.epsilon", c.bn_epsilon);

    c.base_lr = m.GetDouble("opt.base_lr", c.base_lr);
    c.momentum = m.GetDouble("opt.momentum", c.momentum);
    c.warmup_epochs = m.GetDouble("opt.warmup_epochs", 0.0);
    c.decay = optim::ParseDecayKind(m.GetString("opt.decay", "polynomial"));
    c.power = m.GetDouble("opt.power", c.power);
    c.milestone_epochs = m.GetDoubleList("opt.milestones");
    c.gamma = m.GetDouble("opt.gamma", c.gamma);
    c.lars.weight_decay = m.GetDouble("opt.weight_decay", 0.0);
    c.lars.enabled = m.GetBool("lars.enabled", true);
    c.lars.eta = m.GetDouble("lars.eta", c.lars.eta);
    c.lars.epsilon_guard = m.GetDouble("lars.epsilon", c.lars.epsilon_guard);

    c.bucket_bytes = sched::ParseByteSize(m.GetString("bucket_bytes", "4MiB"));
    c.scheduling = ParseScheduling(m.GetString("scheduling", "static"));
    c.transport = comm::ParseTransportMode(m.GetString("transport", "loopback"));
    c.rendezvous = m.GetString("rendezvous", c.rendezvous);
    c.fp16_comm = m.GetBool("fp16_comm", false);
    c.allreduce_order = comm::ParseAllreduceOrder(m.GetString("allreduce", "ordered"));
    if (m.Has("target_accuracy")) c.target_accuracy = m.GetDouble("target_accuracy", 0.0);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  m.CheckAllUsed();
  c.Validate();
  return c;
}

}  // namespace yasgd::harness

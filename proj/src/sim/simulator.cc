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

#include "yasgd/sim/simulator.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace yasgd::sim {
namespace {

std::int64_t ToNs(double us) { return std::llround(us * 1000.0); }

}  // namespace

void SimConfig::Validate() const {
  if (layers.empty()) throw std::invalid_argument("SimConfig: no layers");
  for (const auto& l : layers) {
    if (!(l.backward_us > 0.0) || l.bytes == 0) {
      throw std::invalid_argument("SimConfig: layer times and sizes must be positive");
    }
  }
  if (!(forward_us > 0.0) || !(step_us >= 0.0)) {
    throw std::invalid_argument("SimConfig: forward time must be positive, step time >= 0");
  }
  if (batch_per_rank < 1) throw std::invalid_argument("SimConfig: batch_per_rank must be >= 1");
  if (!(bandwidth_bytes_per_s > 0.0)) throw std::invalid_argument("SimConfig: bandwidth must be > 0");
  if (!(alpha_s >= 0.0) || std::isinf(alpha_s)) throw std::invalid_argument("SimConfig: alpha must be finite and >= 0");
  if (world_size < 1) throw std::invalid_argument("SimConfig: world_size must be >= 1");
  std::vector<int> seen(layers.size(), 0);
  int expected_id = 0;
  for (const auto& g : plan.groups) {
    if (g.id != expected_id++) throw std::invalid_argument("SimConfig: plan groups out of order");
    for (int m : g.members) {
      if (m < 0 || static_cast<std::size_t>(m) >= layers.size() || seen[m]++) {
        throw std::invalid_argument(fmt::format("SimConfig: plan member {} invalid or repeated", m));
      }
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(layers.size())) {
    throw std::invalid_argument("SimConfig: plan does not cover every layer");
  }
}

std::vector<std::size_t> SimConfig::segment_bytes() const {
  std::vector<std::size_t> out;
  for (const auto& l : layers) out.push_back(l.bytes);
  return out;
}

std::vector<sched::GradSegment> SimConfig::grad_segments() const {
  std::vector<sched::GradSegment> out;
  for (std::size_t i = 0; i < layers.size(); ++i) out.push_back({static_cast<int>(i), layers[i].bytes});
  return out;
}

void Replan(SimConfig& cfg, std::size_t threshold_bytes) {
  const auto segs = cfg.grad_segments();
  cfg.plan = sched::MakeBuckets(segs, threshold_bytes);
}

double RingAllreduceUs(std::size_t bytes, int world_size, double bandwidth_bytes_per_s,
                       double alpha_s) {
  if (world_size <= 1) return 0.0;
  const double p = world_size;
  const double bandwidth_term =
      std::isinf(bandwidth_bytes_per_s) ? 0.0 : 2.0 * (p - 1.0) / p * bytes / bandwidth_bytes_per_s;
  return (bandwidth_term + 2.0 * (p - 1.0) * alpha_s) * 1e6;
}

Timeline SimulateIteration(const SimConfig& cfg) {
  cfg.Validate();
  Timeline tl;
  using sched::EventKind;
  auto emit = [&](double t_us, EventKind kind, int id, std::uint64_t bytes) {
    tl.events.push_back({ToNs(t_us), kind, 0, id, bytes});
  };

  // Backward completion time of every layer.
  std::vector<double> done(cfg.layers.size());
  double t = cfg.forward_us;
  double backward_total = 0.0;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    t += cfg.layers[i].backward_us;
    backward_total += cfg.layers[i].backward_us;
    done[i] = t;
  }
  const double backward_end = t;

  // Every backward_done is emitted before any group event at the same or a
  // later time; the final sort only merges the per-group streams.
  std::size_t next_layer = 0;
  auto flush_backward_until = [&](double until) {
    while (next_layer < done.size() && done[next_layer] <= until) {
      emit(done[next_layer], EventKind::kBackwardDone, static_cast<int>(next_layer), 0);
      ++next_layer;
    }
  };

  double prev_end = 0.0;
  for (const auto& g : cfg.plan.groups) {
    double ready = 0.0;
    for (int m : g.members) ready = std::max(ready, done[m]);
    const double start = std::max(cfg.overlap ? ready : backward_end, prev_end);
    const double cost = RingAllreduceUs(g.bytes, cfg.world_size, cfg.bandwidth_bytes_per_s, cfg.alpha_s);
    flush_backward_until(ready);
    emit(ready, EventKind::kGroupReady, g.id, g.bytes);
    flush_backward_until(start);
    emit(start, EventKind::kAllreduceStart, g.id, g.bytes);
    flush_backward_until(start + cost);
    emit(start + cost, EventKind::kAllreduceEnd, g.id, g.bytes);
    prev_end = start + cost;
    tl.comm_us += cost;
  }
  flush_backward_until(backward_end);
  tl.iteration_us = std::max(backward_end, prev_end) + cfg.step_us;
  emit(tl.iteration_us, EventKind::kStepApplied, -1, 0);
  std::stable_sort(tl.events.begin(), tl.events.end(),
                   [](const auto& a, const auto& b) { return a.t_ns < b.t_ns; });
  tl.compute_us = cfg.forward_us + backward_total + cfg.step_us;
  tl.throughput = cfg.world_size * static_cast<double>(cfg.batch_per_rank) / (tl.iteration_us * 1e-6);
  return tl;
}

std::vector<ScalabilityRow> ScalabilityCurve(const SimConfig& cfg, std::span<const int> world_sizes) {
  if (world_sizes.empty()) throw std::invalid_argument("ScalabilityCurve: no world sizes");
  SimConfig one = cfg;
  one.world_size = 1;
  const double base = SimulateIteration(one).throughput;
  std::vector<ScalabilityRow> rows;
  for (int p : world_sizes) {
    SimConfig c = cfg;
    c.world_size = p;
    const auto tl = SimulateIteration(c);
    rows.push_back({p, tl.iteration_us, tl.throughput, tl.throughput / (p * base)});
  }
  return rows;
}

SweepResult ThresholdSweep(const SimConfig& cfg, std::span<const std::size_t> thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("ThresholdSweep: no thresholds");
  SweepResult res;
  for (std::size_t th : thresholds) {
    if (th == 0) throw std::invalid_argument("ThresholdSweep: thresholds must be > 0");
    SimConfig c = cfg;
    Replan(c, th);
    const auto tl = SimulateIteration(c);
    res.rows.push_back({th, static_cast<int>(c.plan.groups.size()), tl.iteration_us});
    if (res.rows.size() == 1 || tl.iteration_us < res.best_iteration_us) {
      res.best_iteration_us = tl.iteration_us;
      res.best_threshold = th;
    }
  }
  return res;
}

}  // namespace yasgd::sim

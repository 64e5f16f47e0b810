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

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "yasgd/sched/bucket_plan.h"
#include "yasgd/sched/trace.h"

namespace yasgd::testing {

// Sound single-iteration trace: each group launches right after its last
// member finishes, then ends before the next backward event.
inline std::vector<sched::TraceEvent> SoundTrace(const sched::BucketPlan& plan,
                                                 std::uint64_t iteration = 0) {
  using sched::EventKind;
  std::vector<sched::TraceEvent> ev;
  std::int64_t t = 0;
  for (const auto& g : plan.groups) {
    for (int m : g.members) ev.push_back({t += 10, EventKind::kBackwardDone, iteration, m, 0});
    ev.push_back({t += 1, EventKind::kGroupReady, iteration, g.id, g.bytes});
    ev.push_back({t += 1, EventKind::kAllreduceStart, iteration, g.id, g.bytes});
    ev.push_back({t += 5, EventKind::kAllreduceEnd, iteration, g.id, g.bytes});
  }
  ev.push_back({t += 1, EventKind::kStepApplied, iteration, -1, 0});
  return ev;
}

// Fault (a): the first group starts before its last member finishes.
inline std::vector<sched::TraceEvent> StartBeforeBackward(const sched::BucketPlan& plan) {
  auto ev = SoundTrace(plan);
  const int last = plan.groups.front().members.back();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].kind == sched::EventKind::kBackwardDone && ev[i].id == last) {
      // Swap the backward_done with the group_ready/start pair after it.
      auto done = ev[i];
      ev.erase(ev.begin() + static_cast<long>(i));
      ev.insert(ev.begin() + static_cast<long>(i) + 2, done);
      for (std::size_t k = 1; k < ev.size(); ++k) ev[k].t_ns = std::max(ev[k].t_ns, ev[k - 1].t_ns);
      break;
    }
  }
  return ev;
}

// Fault (c): the step is applied before the last allreduce finishes.
inline std::vector<sched::TraceEvent> StepBeforeEnd(const sched::BucketPlan& plan) {
  auto ev = SoundTrace(plan);
  std::swap(ev[ev.size() - 2].kind, ev[ev.size() - 1].kind);
  std::swap(ev[ev.size() - 2].id, ev[ev.size() - 1].id);
  std::swap(ev[ev.size() - 2].bytes, ev[ev.size() - 1].bytes);
  return ev;
}

// Fault (d): the plan puts one segment into two groups.
inline sched::BucketPlan DuplicateSegmentPlan(const sched::BucketPlan& plan,
                                              std::span<const std::size_t> segment_bytes) {
  auto bad = plan;
  const int seg = bad.groups.front().members.front();
  auto& last = bad.groups.back();
  last.members.push_back(seg);
  last.bytes += segment_bytes[seg];
  return bad;
}

}  // namespace yasgd::testing

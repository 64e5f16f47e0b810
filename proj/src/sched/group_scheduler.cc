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

#include "yasgd/sched/group_scheduler.h"

#include <algorithm>
#include <stdexcept>

#include <fmt/core.h>

namespace yasgd::sched {

GroupScheduler::GroupScheduler(const BucketPlan& plan) : plan_(plan) {
  int max_id = -1;
  for (const auto& g : plan_.groups) {
    for (int m : g.members) max_id = std::max(max_id, m);
  }
  group_of_.assign(static_cast<std::size_t>(max_id + 1), -1);
  for (const auto& g : plan_.groups) {
    for (int m : g.members) {
      if (m < 0 || group_of_[m] != -1) {
        throw std::invalid_argument(fmt::format("GroupScheduler: segment {} is not in exactly one group", m));
      }
      group_of_[m] = g.id;
    }
  }
  Reset();
}

void GroupScheduler::Reset() {
  remaining_.clear();
  for (const auto& g : plan_.groups) remaining_.push_back(static_cast<int>(g.members.size()));
  segment_done_.assign(group_of_.size(), false);
  group_ready_.assign(plan_.groups.size(), false);
  next_launch_ = 0;
}

GroupScheduler::Update GroupScheduler::OnBackwardDone(int segment) {
  if (segment < 0 || static_cast<std::size_t>(segment) >= group_of_.size() ||
      group_of_[segment] < 0) {
    throw std::invalid_argument(fmt::format("GroupScheduler: segment {} is not in the plan", segment));
  }
  if (segment_done_[segment]) {
    throw std::invalid_argument(
        fmt::format("GroupScheduler: segment {} reported done twice in one iteration", segment));
  }
  segment_done_[segment] = true;
  const int g = group_of_[segment];
  std::vector<int> ready;
  if (--remaining_[g] == 0) {
    group_ready_[g] = true;
    ready.push_back(g);
  }
  return Drain(std::move(ready));
}

GroupScheduler::Update GroupScheduler::MarkGroupReady(int group) {
  if (group < 0 || static_cast<std::size_t>(group) >= plan_.groups.size()) {
    throw std::invalid_argument(fmt::format("GroupScheduler: unknown group {}", group));
  }
  if (group_ready_[group]) {
    throw std::invalid_argument(fmt::format("GroupScheduler: group {} marked ready twice", group));
  }
  group_ready_[group] = true;
  remaining_[group] = 0;
  for (int m : plan_.groups[group].members) segment_done_[m] = true;
  return Drain({group});
}

GroupScheduler::Update GroupScheduler::Drain(std::vector<int> ready) {
  Update u;
  u.ready = std::move(ready);
  while (next_launch_ < static_cast<int>(plan_.groups.size()) && group_ready_[next_launch_]) {
    u.launch.push_back(next_launch_++);
  }
  return u;
}

}  // namespace yasgd::sched

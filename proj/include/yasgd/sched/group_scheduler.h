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

#include <vector>

#include "yasgd/sched/bucket_plan.h"

namespace yasgd::sched {

// Per-iteration launch logic for one worker. A group becomes ready when its
// last member finishes backward; ready groups launch strictly in group order,
// so a ready group waits until every lower-numbered group has launched.
class GroupScheduler {
 public:
  explicit GroupScheduler(const BucketPlan& plan);

  struct Update {
    std::vector<int> ready;   // groups that became ready with this report
    std::vector<int> launch;  // groups to launch now, in order
  };

  // Throws std::invalid_argument for an unknown segment or a segment reported
  // twice in the same iteration.
  Update OnBackwardDone(int segment);

  // Marks a group complete without per-segment reports; used when readiness
  // is discovered some other way (dynamic mode).
  Update MarkGroupReady(int group);

  bool all_launched() const { return next_launch_ == static_cast<int>(plan_.groups.size()); }
  const BucketPlan& plan() const { return plan_; }

  // Clears all per-iteration state.
  void Reset();

 private:
  Update Drain(std::vector<int> ready);

  BucketPlan plan_;
  std::vector<int> group_of_;       // by segment id
  std::vector<int> remaining_;      // unfinished members per group
  std::vector<bool> segment_done_;  // by segment id
  std::vector<bool> group_ready_;
  int next_launch_ = 0;
};

}  // namespace yasgd::sched

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
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "yasgd/sched/bucket_plan.h"

namespace yasgd::sched {

enum class EventKind { kBackwardDone, kGroupReady, kAllreduceStart, kAllreduceEnd, kStepApplied };

const char* EventKindName(EventKind kind);
std::optional<EventKind> ParseEventKind(const std::string& name);

struct TraceEvent {
  std::int64_t t_ns = 0;
  EventKind kind = EventKind::kBackwardDone;
  std::uint64_t iteration = 0;
  int id = -1;             // segment id (backward_done) or group id; -1 for step_applied
  std::uint64_t bytes = 0;  // group bytes on allreduce events
};

// One event per line: "<t_ns> <kind> iter=<n> id=<id> bytes=<b>".
std::string FormatEvent(const TraceEvent& e);
// Throws std::invalid_argument on a malformed line.
TraceEvent ParseEvent(const std::string& line);
void WriteTrace(std::ostream& out, std::span<const TraceEvent> events);
std::vector<TraceEvent> ReadTrace(std::istream& in);

// Thread-safe recorder for one worker. Timestamps come from the monotonic
// clock and are taken under the lock, so they never decrease.
class TraceRecorder {
 public:
  TraceRecorder();

  void Record(EventKind kind, std::uint64_t iteration, int id = -1, std::uint64_t bytes = 0);
  std::vector<TraceEvent> events() const;
  void Clear();

 private:
  mutable std::mutex mu_;
  std::chrono::steady_clock::time_point origin_;
  std::vector<TraceEvent> events_;
};

struct Violation {
  char rule = '?';  // 'a'..'d' as documented on ValidateTrace, 't' for timestamps, 'x' other
  std::uint64_t iteration = 0;
  std::string message;
};

// Checks, per iteration:
//   (a) allreduce_start(g) comes after backward_done of every member of g;
//   (b) allreduces start in group order, each group exactly once;
//   (c) step_applied comes after every allreduce_end;
//   (d) bytes of all started groups equal the total gradient bytes and every
//       segment is covered by exactly one group;
// plus nondecreasing timestamps. `segment_bytes` holds each gradient
// segment's wire size, indexed by segment id. Never throws.
std::vector<Violation> ValidateTrace(std::span<const TraceEvent> events, const BucketPlan& plan,
                                     std::span<const std::size_t> segment_bytes);

std::string FormatViolations(std::span<const Violation> violations);

}  // namespace yasgd::sched

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

#include "yasgd/sched/trace.h"

#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

namespace yasgd::sched {

const char* EventKindName(EventKind kind) {
  switch (kind) {
    case EventKind::kBackwardDone: return "backward_done";
    case EventKind::kGroupReady: return "group_ready";
    case EventKind::kAllreduceStart: return "allreduce_start";
    case EventKind::kAllreduceEnd: return "allreduce_end";
    case EventKind::kStepApplied: return "step_applied";
  }
  return "unknown";
}

std::optional<EventKind> ParseEventKind(const std::string& name) {
  for (auto k : {EventKind::kBackwardDone, EventKind::kGroupReady, EventKind::kAllreduceStart,
                 EventKind::kAllreduceEnd, EventKind::kStepApplied}) {
    if (name == EventKindName(k)) return k;
  }
  return std::nullopt;
}

std::string FormatEvent(const TraceEvent& e) {
  return fmt::format("{} {} iter={} id={} bytes={}", e.t_ns, EventKindName(e.kind), e.iteration,
                     e.id, e.bytes);
}

TraceEvent ParseEvent(const std::string& line) {
  std::istringstream in(line);
  std::string kind;
  std::string iter;
  std::string id;
  std::string bytes;
  TraceEvent e;
  if (!(in >> e.t_ns >> kind >> iter >> id >> bytes) || iter.rfind("iter=", 0) != 0 ||
      id.rfind("id=", 0) != 0 || bytes.rfind("bytes=", 0) != 0) {
    throw std::invalid_argument(fmt::format("malformed trace line '{}'", line));
  }
  const auto k = ParseEventKind(kind);
  if (!k) throw std::invalid_argument(fmt::format("unknown trace event kind '{}'", kind));
  e.kind = *k;
  try {
    e.iteration = std::stoull(iter.substr(5));
    e.id = std::stoi(id.substr(3));
    e.bytes = std::stoull(bytes.substr(6));
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("malformed trace line '{}'", line));
  }
  return e;
}

void WriteTrace(std::ostream& out, std::span<const TraceEvent> events) {
  for (const auto& e : events) out << FormatEvent(e) << '\n';
}

std::vector<TraceEvent> ReadTrace(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(ParseEvent(line));
  }
  return out;
}

TraceRecorder::TraceRecorder() : origin_(std::chrono::steady_clock::now()) {}

void TraceRecorder::Record(EventKind kind, std::uint64_t iteration, int id, std::uint64_t bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto now = std::chrono::steady_clock::now();
  TraceEvent e;
  e.t_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(now - origin_).count();
  e.kind = kind;
  e.iteration = iteration;
  e.id = id;
  e.bytes = bytes;
  events_.push_back(e);
}

std::vector<TraceEvent> TraceRecorder::events() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

void TraceRecorder::Clear() {
  std::lock_guard<std::mutex> lock(mu_);
  events_.clear();
}

namespace {

void CheckPlan(const BucketPlan& plan, std::span<const std::size_t> segment_bytes,
               std::uint64_t iteration, std::vector<Violation>& out) {
  std::vector<int> covered(segment_bytes.size(), 0);
  for (const auto& g : plan.groups) {
    std::size_t bytes = 0;
    for (int m : g.members) {
      if (m < 0 || static_cast<std::size_t>(m) >= segment_bytes.size()) {
        out.push_back({'d', iteration, fmt::format("group {} names unknown segment {}", g.id, m)});
        continue;
      }
      ++covered[m];
      bytes += segment_bytes[m];
    }
    if (bytes != g.bytes) {
      out.push_back({'d', iteration,
                     fmt::format("group {} declares {} bytes but its members hold {}", g.id,
                                 g.bytes, bytes)});
    }
  }
  for (std::size_t s = 0; s < covered.size(); ++s) {
    if (covered[s] != 1) {
      out.push_back({'d', iteration,
                     fmt::format("segment {} is covered by {} groups", s, covered[s])});
    }
  }
}

void CheckIteration(std::uint64_t iteration, std::span<const TraceEvent> events,
                    const BucketPlan& plan, std::size_t total_bytes,
                    std::size_t num_segments, std::vector<Violation>& out) {
  std::vector<bool> done(num_segments, false);
  std::vector<bool> started(plan.groups.size(), false);
  std::vector<bool> ended(plan.groups.size(), false);
  int next_group = 0;
  std::uint64_t bytes = 0;
  bool stepped = false;
  auto add = [&](char rule, std::string msg) { out.push_back({rule, iteration, std::move(msg)}); };

  for (const auto& e : events) {
    const bool known_group = e.id >= 0 && static_cast<std::size_t>(e.id) < plan.groups.size();
    switch (e.kind) {
      case EventKind::kBackwardDone:
        if (e.id < 0 || static_cast<std::size_t>(e.id) >= num_segments) {
          add('x', fmt::format("backward_done for unknown segment {}", e.id));
        } else if (done[e.id]) {
          add('x', fmt::format("segment {} reported done twice", e.id));
        } else {
          done[e.id] = true;
        }
        break;
      case EventKind::kGroupReady:
        if (!known_group) add('x', fmt::format("group_ready for unknown group {}", e.id));
        break;
      case EventKind::kAllreduceStart: {
        if (!known_group) {
          add('b', fmt::format("allreduce_start for unknown group {}", e.id));
          break;
        }
        if (started[e.id]) {
          add('b', fmt::format("group {} started twice", e.id));
        } else if (e.id != next_group) {
          add('b', fmt::format("group {} started while group {} was next", e.id, next_group));
        }
        started[e.id] = true;
        if (e.id == next_group) {
          while (next_group < static_cast<int>(started.size()) && started[next_group]) ++next_group;
        }
        for (int m : plan.groups[e.id].members) {
          if (m >= 0 && static_cast<std::size_t>(m) < num_segments && !done[m]) {
            add('a', fmt::format("group {} started before segment {} finished backward", e.id, m));
          }
        }
        bytes += e.bytes;
        break;
      }
      case EventKind::kAllreduceEnd:
        if (!known_group || !started[e.id]) {
          add('c', fmt::format("allreduce_end for group {} without a start", e.id));
        } else {
          ended[e.id] = true;
        }
        break;
      case EventKind::kStepApplied:
        if (stepped) add('c', "step applied twice");
        stepped = true;
        for (std::size_t g = 0; g < ended.size(); ++g) {
          if (!ended[g]) add('c', fmt::format("step applied before group {} finished", g));
        }
        break;
    }
  }
  if (!stepped) add('c', "no step_applied event");
  if (bytes != total_bytes) {
    add('d', fmt::format("communicated {} bytes, gradients hold {}", bytes, total_bytes));
  }
}

}  // namespace

std::vector<Violation> ValidateTrace(std::span<const TraceEvent> events, const BucketPlan& plan,
                                     std::span<const std::size_t> segment_bytes) {
  std::vector<Violation> out;
  std::size_t total = 0;
  for (auto b : segment_bytes) total += b;

  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].t_ns < events[i - 1].t_ns) {
      out.push_back({'t', events[i].iteration,
                     fmt::format("timestamp decreases at event {} ({} < {})", i, events[i].t_ns,
                                 events[i - 1].t_ns)});
    }
  }
  std::map<std::uint64_t, std::vector<TraceEvent>> by_iter;
  for (const auto& e : events) by_iter[e.iteration].push_back(e);
  if (by_iter.empty()) out.push_back({'x', 0, "empty trace"});
  for (const auto& [iter, evs] : by_iter) {
    if (iter == by_iter.begin()->first) CheckPlan(plan, segment_bytes, iter, out);
    CheckIteration(iter, evs, plan, total, segment_bytes.size(), out);
  }
  return out;
}

std::string FormatViolations(std::span<const Violation> violations) {
  std::string s;
  for (const auto& v : violations) {
    s += fmt::format("({}) iter {}: {}\n", v.rule, v.iteration, v.message);
  }
  return s;
}

}  // namespace yasgd::sched

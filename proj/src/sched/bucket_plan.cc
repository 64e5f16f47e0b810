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

#include "yasgd/sched/bucket_plan.h"

#include <cctype>
#include <stdexcept>

#include <fmt/core.h>

namespace yasgd::sched {

std::size_t ParseByteSize(const std::string& text) {
  if (text == "inf" || text == "unbounded") return kUnboundedBucketBytes;
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("bad byte size '{}'", text));
  }
  const std::string unit = text.substr(pos);
  std::size_t scale = 1;
  if (unit.empty() || unit == "B") {
    scale = 1;
  } else if (unit == "KiB") {
    scale = std::size_t{1} << 10;
  } else if (unit == "MiB") {
    scale = std::size_t{1} << 20;
  } else if (unit == "GiB") {
    scale = std::size_t{1} << 30;
  } else {
    throw std::invalid_argument(fmt::format("bad byte size unit in '{}'", text));
  }
  return static_cast<std::size_t>(value) * scale;
}

std::size_t BucketPlan::total_bytes() const {
  std::size_t t = 0;
  for (const auto& g : groups) t += g.bytes;
  return t;
}

std::size_t BucketPlan::num_segments() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.members.size();
  return n;
}

int BucketPlan::GroupOf(int segment) const {
  for (const auto& g : groups) {
    for (int m : g.members) {
      if (m == segment) return g.id;
    }
  }
  return -1;
}

BucketPlan MakeBuckets(std::span<const GradSegment> backward_order, std::size_t threshold_bytes) {
  if (backward_order.empty()) throw std::invalid_argument("MakeBuckets: no segments");
  if (threshold_bytes == 0) throw std::invalid_argument("MakeBuckets: threshold must be > 0");
  BucketPlan plan;
  plan.threshold_bytes = threshold_bytes;
  BucketGroup open;
  for (const auto& seg : backward_order) {
    open.members.push_back(seg.id);
    open.bytes += seg.bytes;
    if (open.bytes >= threshold_bytes) {
      open.id = static_cast<int>(plan.groups.size());
      plan.groups.push_back(std::move(open));
      open = BucketGroup{};
    }
  }
  if (!open.members.empty()) {
    open.id = static_cast<int>(plan.groups.size());
    plan.groups.push_back(std::move(open));
  }
  return plan;
}

std::vector<GradSegment> GradSegments(const model::ParamLayout& layout,
                                      std::size_t bytes_per_element) {
  std::vector<GradSegment> out;
  for (int id : layout.BackwardOrder()) {
    out.push_back({id, layout.segment(id).len * bytes_per_element});
  }
  return out;
}

BucketPlan MakeBuckets(const model::ParamLayout& layout, std::size_t threshold_bytes,
                       std::size_t bytes_per_element) {
  const auto segs = GradSegments(layout, bytes_per_element);
  return MakeBuckets(segs, threshold_bytes);
}

}  // namespace yasgd::sched

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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "yasgd/model/params.h"

namespace yasgd::sched {

inline constexpr std::size_t kDefaultBucketBytes = std::size_t{4} << 20;
// Threshold that never closes a group early: one group holds everything.
inline constexpr std::size_t kUnboundedBucketBytes = std::numeric_limits<std::size_t>::max();

// Parses a byte count such as "65536", "64KiB", "4MiB" or "inf".
std::size_t ParseByteSize(const std::string& text);

struct GradSegment {
  int id = -1;
  std::size_t bytes = 0;
};

struct BucketGroup {
  int id = -1;
  std::vector<int> members;  // segment ids in backward completion order
  std::size_t bytes = 0;
};

// Static assignment of gradient segments to allreduce groups. Every rank
// derives the same plan from the same model, so no coordination is needed.
struct BucketPlan {
  std::size_t threshold_bytes = kDefaultBucketBytes;
  std::vector<BucketGroup> groups;

  std::size_t total_bytes() const;
  std::size_t num_segments() const;
  // Group holding the segment; -1 when absent.
  int GroupOf(int segment) const;
};

// Greedy fusion in backward order: a group closes as soon as its byte total
// reaches the threshold; whatever is left forms a final residual group.
// Throws std::invalid_argument for an empty list or a zero threshold.
BucketPlan MakeBuckets(std::span<const GradSegment> backward_order, std::size_t threshold_bytes);

// Plan for a parameter layout with `bytes_per_element` wire bytes per value.
BucketPlan MakeBuckets(const model::ParamLayout& layout, std::size_t threshold_bytes,
                       std::size_t bytes_per_element = 4);

// Segments of `layout` in backward order with their wire sizes.
std::vector<GradSegment> GradSegments(const model::ParamLayout& layout,
                                      std::size_t bytes_per_element = 4);

}  // namespace yasgd::sched

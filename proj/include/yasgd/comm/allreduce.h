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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "yasgd/comm/transport.h"
#include "yasgd/comm/wire_message.h"

namespace yasgd::comm {

enum class AllreduceOrder {
  // Every element is accumulated along the ring starting at rank 0 and in
  // ascending source order, so the sum is a single left fold over all local
  // blocks of all ranks. Bitwise independent of world size and chunking.
  kRankOrdered,
  // Classic reduce-scatter then allgather; the fold order of an element
  // depends on which chunk it falls in.
  kRing,
};

AllreduceOrder ParseAllreduceOrder(const std::string& name);
const char* AllreduceOrderName(AllreduceOrder order);

struct AllreduceOptions {
  DType dtype = DType::kF32;
  AllreduceOrder order = AllreduceOrder::kRankOrdered;
  std::uint64_t iteration = 0;
  std::uint32_t group = 0;
};

// Sums, over every rank, the local blocks in `parts` and writes the total to
// `out` on every rank. Each block must have out.size() elements; a rank may
// contribute zero blocks. Local blocks are folded in the order given.
//
// With fp16 every transmitted value is rounded to binary16 before it leaves
// a rank, and the rank that finalizes a chunk keeps the rounded value, so
// all ranks end with identical results. World size 1 never rounds.
//
// Throws CommError on transport failure or when a received frame does not
// match the expected iteration, group, chunk, dtype or length.
void Allreduce(Communicator& comm, std::span<const std::span<const float>> parts,
               std::span<float> out, const AllreduceOptions& options);

// In-place single-block convenience form.
void Allreduce(Communicator& comm, std::span<float> data, const AllreduceOptions& options);

// Chunk c of a length-n buffer split for p ranks covers
// [c * ceil(n / p), min(n, (c + 1) * ceil(n / p))); trailing chunks may be empty.
struct ChunkRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};
ChunkRange RingChunk(std::size_t n, int p, int c);

// Per-index count of ranks that raised the flag. Carried as f32 0/1 sums,
// which are exact for any realistic world size.
struct FlagSummary {
  std::vector<int> counts;
  int world_size = 1;

  bool any(std::size_t i) const { return counts.at(i) > 0; }
  bool all(std::size_t i) const { return counts.at(i) == world_size; }
};

FlagSummary AllgatherFlags(Communicator& comm, const std::vector<bool>& local,
                           std::uint64_t iteration);

}  // namespace yasgd::comm

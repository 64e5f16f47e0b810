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

#include "yasgd/comm/allreduce.h"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "yasgd/optim/half.h"

namespace yasgd::comm {
namespace {

constexpr std::uint32_t kFinalBit = 0x80000000u;

WireMessage MakeChunk(const AllreduceOptions& o, std::uint32_t chunk, std::span<const float> v) {
  WireMessage m;
  m.header.iteration = o.iteration;
  m.header.group = o.group;
  m.header.chunk = chunk;
  m.header.dtype = o.dtype;
  m.header.count = v.size();
  m.payload = o.dtype == DType::kF16 ? PackF16(v) : PackF32(v);
  return m;
}

void ReadChunk(Transport& t, int peer, const AllreduceOptions& o, std::uint32_t chunk,
               std::span<float> out) {
  const WireMessage m = t.Recv(peer);
  const WireHeader& h = m.header;
  if (h.iteration != o.iteration || h.group != o.group || h.chunk != chunk ||
      h.dtype != o.dtype || h.count != out.size()) {
    throw CommError(fmt::format(
        "rank {}: unexpected frame from rank {}: got (iter {}, group {}, chunk {:#x}, {}, {} elems), "
        "expected (iter {}, group {}, chunk {:#x}, {}, {} elems)",
        t.rank(), peer, h.iteration, h.group, h.chunk, DTypeName(h.dtype), h.count, o.iteration,
        o.group, chunk, DTypeName(o.dtype), out.size()));
  }
  if (h.dtype == DType::kF16) {
    UnpackF16(m.payload, out);
  } else {
    UnpackF32(m.payload, out);
  }
}

void RoundTrip(std::span<float> v) {
  for (float& x : v) x = optim::Half16::FromFloat(x).ToFloat();
}

// acc += block, element by element, for every local block in order.
void FoldLocal(std::span<const std::span<const float>> parts, std::size_t begin,
               std::span<float> acc) {
  for (const auto& part : parts) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = acc[i] + part[begin + i];
  }
}

void RankOrdered(Communicator& comm, std::span<const std::span<const float>> parts,
                 std::span<float> out, const AllreduceOptions& o) {
  const int p = comm.world_size();
  const int r = comm.rank();
  const std::size_t n = out.size();
  Transport& t = *comm.transport;
  // Negative zero is the exact additive identity, so starting from it gives
  // the same bits as starting from the first block.
  if (p == 1) {
    std::fill(out.begin(), out.end(), -0.0f);
    FoldLocal(parts, 0, out);
    return;
  }
  const int succ = comm.topology.successor();
  const int pred = comm.topology.predecessor();
  const int k = p;
  // Chain pass: partial sums travel 0 -> 1 -> ... -> p-1.
  for (int c = 0; c < k; ++c) {
    const ChunkRange cr = RingChunk(n, p, c);
    std::span<float> acc = out.subspan(cr.begin, cr.size());
    if (r == 0) {
      std::fill(acc.begin(), acc.end(), -0.0f);
    } else {
      ReadChunk(t, pred, o, static_cast<std::uint32_t>(c), acc);
    }
    FoldLocal(parts, cr.begin, acc);
    if (r == p - 1) {
      if (o.dtype == DType::kF16) RoundTrip(acc);
      t.Send(succ, MakeChunk(o, kFinalBit | static_cast<std::uint32_t>(c), acc));
    } else {
      t.Send(succ, MakeChunk(o, static_cast<std::uint32_t>(c), acc));
    }
  }
  if (r == p - 1) return;
  // Broadcast pass: finished chunks travel p-1 -> 0 -> 1 -> ... -> p-2.
  for (int c = 0; c < k; ++c) {
    const ChunkRange cr = RingChunk(n, p, c);
    std::span<float> dst = out.subspan(cr.begin, cr.size());
    ReadChunk(t, pred, o, kFinalBit | static_cast<std::uint32_t>(c), dst);
    if (succ != p - 1) t.Send(succ, MakeChunk(o, kFinalBit | static_cast<std::uint32_t>(c), dst));
  }
}

void Ring(Communicator& comm, std::span<const std::span<const float>> parts,
          std::span<float> out, const AllreduceOptions& o) {
  const int p = comm.world_size();
  const int r = comm.rank();
  const std::size_t n = out.size();
  std::fill(out.begin(), out.end(), -0.0f);
  FoldLocal(parts, 0, out);
  if (p == 1) return;
  Transport& t = *comm.transport;
  const int succ = comm.topology.successor();
  const int pred = comm.topology.predecessor();
  auto mod = [p](int x) { return ((x % p) + p) % p; };
  std::vector<float> incoming;

  for (int s = 0; s < p - 1; ++s) {
    const int send_c = mod(r - s);
    const int recv_c = mod(r - s - 1);
    const ChunkRange sc = RingChunk(n, p, send_c);
    t.Send(succ, MakeChunk(o, static_cast<std::uint32_t>(send_c), out.subspan(sc.begin, sc.size())));
    const ChunkRange rc = RingChunk(n, p, recv_c);
    incoming.resize(rc.size());
    ReadChunk(t, pred, o, static_cast<std::uint32_t>(recv_c), incoming);
    for (std::size_t i = 0; i < rc.size(); ++i) out[rc.begin + i] = out[rc.begin + i] + incoming[i];
  }
  // This rank now owns the finished chunk r + 1.
  const int own = mod(r + 1);
  if (o.dtype == DType::kF16) {
    const ChunkRange oc = RingChunk(n, p, own);
    RoundTrip(out.subspan(oc.begin, oc.size()));
  }
  for (int s = 0; s < p - 1; ++s) {
    const int send_c = mod(r + 1 - s);
    const int recv_c = mod(r - s);
    const ChunkRange sc = RingChunk(n, p, send_c);
    t.Send(succ, MakeChunk(o, kFinalBit | static_cast<std::uint32_t>(send_c),
                           out.subspan(sc.begin, sc.size())));
    const ChunkRange rc = RingChunk(n, p, recv_c);
    ReadChunk(t, pred, o, kFinalBit | static_cast<std::uint32_t>(recv_c),
              out.subspan(rc.begin, rc.size()));
  }
}

}  // namespace

AllreduceOrder ParseAllreduceOrder(const std::string& name) {
  if (name == "ordered") return AllreduceOrder::kRankOrdered;
  if (name == "ring") return AllreduceOrder::kRing;
  throw std::invalid_argument(fmt::format("unknown allreduce order '{}'", name));
}

const char* AllreduceOrderName(AllreduceOrder order) {
  return order == AllreduceOrder::kRing ? "ring" : "ordered";
}

ChunkRange RingChunk(std::size_t n, int p, int c) {
  const std::size_t step = (n + static_cast<std::size_t>(p) - 1) / static_cast<std::size_t>(p);
  ChunkRange r;
  r.begin = std::min(n, step * static_cast<std::size_t>(c));
  r.end = std::min(n, r.begin + step);
  return r;
}

void Allreduce(Communicator& comm, std::span<const std::span<const float>> parts,
               std::span<float> out, const AllreduceOptions& options) {
  for (const auto& part : parts) {
    if (part.size() != out.size()) {
      throw std::invalid_argument(fmt::format("Allreduce: block of {} elements, output has {}",
                                              part.size(), out.size()));
    }
  }
  if (options.group >= kControlGroupBase && options.group != kFlagsGroup) {
    throw std::invalid_argument("Allreduce: group id is reserved for control traffic");
  }
  if (options.order == AllreduceOrder::kRing) {
    Ring(comm, parts, out, options);
  } else {
    RankOrdered(comm, parts, out, options);
  }
}

void Allreduce(Communicator& comm, std::span<float> data, const AllreduceOptions& options) {
  const std::vector<float> local(data.begin(), data.end());
  const std::span<const float> block(local);
  Allreduce(comm, std::span<const std::span<const float>>(&block, 1), data, options);
}

FlagSummary AllgatherFlags(Communicator& comm, const std::vector<bool>& local,
                           std::uint64_t iteration) {
  std::vector<float> v(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) v[i] = local[i] ? 1.0f : 0.0f;
  AllreduceOptions o;
  o.order = AllreduceOrder::kRing;
  o.iteration = iteration;
  o.group = kFlagsGroup;
  Allreduce(comm, std::span<float>(v), o);
  FlagSummary s;
  s.world_size = comm.world_size();
  s.counts.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s.counts[i] = static_cast<int>(std::lround(v[i]));
  return s;
}

}  // namespace yasgd::comm

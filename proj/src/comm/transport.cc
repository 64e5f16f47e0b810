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

#include "yasgd/comm/transport.h"

#include <fmt/core.h>

#include "tcp_transport.h"

namespace yasgd::comm {

TransportMode ParseTransportMode(const std::string& name) {
  if (name == "loopback") return TransportMode::kLoopback;
  if (name == "tcp") return TransportMode::kTcp;
  throw std::invalid_argument(fmt::format("unknown transport '{}'", name));
}

const char* TransportModeName(TransportMode mode) {
  return mode == TransportMode::kTcp ? "tcp" : "loopback";
}

void Transport::Send(int peer, const WireMessage& message) {
  if (peer < 0 || peer >= world_size_ || peer == rank_) {
    throw CommError(fmt::format("rank {}: invalid send peer {}", rank_, peer));
  }
  auto frame = message.Encode();
  messages_ += 1;
  wire_bytes_ += frame.size();
  payload_bytes_ += message.payload.size();
  SendFrame(peer, std::move(frame));
}

WireMessage Transport::Recv(int peer) {
  if (peer < 0 || peer >= world_size_ || peer == rank_) {
    throw CommError(fmt::format("rank {}: invalid recv peer {}", rank_, peer));
  }
  return WireMessage::Decode(RecvFrame(peer));
}

TrafficCounters Transport::counters() const {
  TrafficCounters c;
  c.messages_sent = messages_.load();
  c.wire_bytes_sent = wire_bytes_.load();
  c.payload_bytes_sent = payload_bytes_.load();
  c.control_bytes_sent = control_bytes_.load();
  return c;
}

LoopbackHub::LoopbackHub(int world_size) : world_size_(world_size), claimed_(world_size, false) {
  if (world_size < 1) throw std::invalid_argument("LoopbackHub: world_size must be >= 1");
  boxes_.reserve(static_cast<std::size_t>(world_size) * world_size);
  for (int i = 0; i < world_size * world_size; ++i) boxes_.push_back(std::make_unique<Mailbox>());
}

void LoopbackHub::Post(int src, int dst, std::vector<std::byte> frame) {
  if (aborted_) throw CommError("loopback fabric aborted: " + abort_reason_);
  Mailbox& b = box(src, dst);
  {
    std::lock_guard<std::mutex> lock(b.mu);
    b.frames.push_back(std::move(frame));
  }
  b.cv.notify_one();
}

std::vector<std::byte> LoopbackHub::Take(int src, int dst) {
  Mailbox& b = box(src, dst);
  std::unique_lock<std::mutex> lock(b.mu);
  b.cv.wait(lock, [&] { return !b.frames.empty() || aborted_.load(); });
  if (b.frames.empty()) {
    std::lock_guard<std::mutex> reason_lock(abort_mu_);
    throw CommError("loopback fabric aborted: " + abort_reason_);
  }
  auto frame = std::move(b.frames.front());
  b.frames.pop_front();
  return frame;
}

void LoopbackHub::Abort(const std::string& reason) {
  {
    std::lock_guard<std::mutex> lock(abort_mu_);
    if (aborted_) return;
    abort_reason_ = reason;
    aborted_ = true;
  }
  for (auto& b : boxes_) {
    std::lock_guard<std::mutex> lock(b->mu);
    b->cv.notify_all();
  }
}

void LoopbackHub::Claim(int rank) {
  std::lock_guard<std::mutex> lock(claim_mu_);
  if (claimed_[rank]) throw BootstrapError(fmt::format("loopback rank {} claimed twice", rank));
  claimed_[rank] = true;
}

LoopbackTransport::LoopbackTransport(std::shared_ptr<LoopbackHub> hub, int rank)
    : Transport(rank, hub->world_size()), hub_(std::move(hub)) {}

void LoopbackTransport::SendFrame(int peer, std::vector<std::byte> frame) {
  hub_->Post(rank(), peer, std::move(frame));
}

std::vector<std::byte> LoopbackTransport::RecvFrame(int peer) {
  return hub_->Take(peer, rank());
}

void Barrier(Communicator& comm) {
  const int p = comm.world_size();
  if (p == 1) return;
  Transport& t = *comm.transport;
  WireMessage token;
  token.header.group = kBarrierGroup;
  // Pass 1 proves everyone arrived; pass 2 releases everyone.
  for (std::uint32_t pass = 0; pass < 2; ++pass) {
    token.header.chunk = pass;
    if (comm.rank() == 0) {
      t.Send(comm.topology.successor(), token);
      const auto back = t.Recv(comm.topology.predecessor());
      if (back.header.group != kBarrierGroup || back.header.chunk != pass) {
        throw CommError("barrier: unexpected message");
      }
    } else {
      const auto in = t.Recv(comm.topology.predecessor());
      if (in.header.group != kBarrierGroup || in.header.chunk != pass) {
        throw CommError("barrier: unexpected message");
      }
      t.Send(comm.topology.successor(), token);
    }
  }
}

Communicator Bootstrap(const BootstrapOptions& options) {
  if (options.world_size < 1 || options.rank < 0 || options.rank >= options.world_size) {
    throw BootstrapError(fmt::format("rank {}: invalid rank for world size {}", options.rank,
                                     options.world_size));
  }
  Communicator comm;
  comm.topology = RingTopology{options.world_size, options.rank};
  if (options.mode == TransportMode::kLoopback) {
    if (!options.hub) throw BootstrapError("loopback bootstrap needs a hub");
    if (options.hub->world_size() != options.world_size) {
      throw BootstrapError(fmt::format(
          "rank {}: handshake rejected, world size {} does not match fabric world size {}",
          options.rank, options.world_size, options.hub->world_size()));
    }
    options.hub->Claim(options.rank);
    comm.transport = std::make_unique<LoopbackTransport>(options.hub, options.rank);
  } else {
    comm.transport = ConnectTcpRing(options);
  }
  Barrier(comm);
  return comm;
}

}  // namespace yasgd::comm

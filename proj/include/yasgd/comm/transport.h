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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "yasgd/comm/wire_message.h"

namespace yasgd::comm {

enum class TransportMode { kLoopback, kTcp };

TransportMode ParseTransportMode(const std::string& name);
const char* TransportModeName(TransportMode mode);

struct TrafficCounters {
  std::uint64_t messages_sent = 0;
  std::uint64_t wire_bytes_sent = 0;     // headers + payloads of data-plane frames
  std::uint64_t payload_bytes_sent = 0;  // payloads only
  std::uint64_t control_bytes_sent = 0;  // bootstrap handshake traffic
};

struct RingTopology {
  int world_size = 1;
  int rank = 0;

  int successor() const { return (rank + 1) % world_size; }
  int predecessor() const { return (rank + world_size - 1) % world_size; }
};

// Point-to-point framed messaging between ranks. Delivery per ordered
// (sender, receiver) pair is reliable and FIFO. Send never blocks on the
// receiver; Recv blocks until a frame arrives. Each endpoint is driven by
// one thread at a time.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual TransportMode mode() const = 0;
  int rank() const { return rank_; }
  int world_size() const { return world_size_; }

  void Send(int peer, const WireMessage& message);
  WireMessage Recv(int peer);

  TrafficCounters counters() const;

  // Makes blocked and future Recv calls on this endpoint fail with CommError
  // and, where the fabric allows, lets peers observe the failure too. Safe to
  // call from any thread.
  virtual void Abort(const std::string& reason) = 0;

 protected:
  Transport(int rank, int world_size) : rank_(rank), world_size_(world_size) {}

  virtual void SendFrame(int peer, std::vector<std::byte> frame) = 0;
  virtual std::vector<std::byte> RecvFrame(int peer) = 0;
  void AddControlBytes(std::uint64_t bytes) { control_bytes_ += bytes; }

 private:
  int rank_;
  int world_size_;
  std::atomic<std::uint64_t> messages_{0};
  std::atomic<std::uint64_t> wire_bytes_{0};
  std::atomic<std::uint64_t> payload_bytes_{0};
  std::atomic<std::uint64_t> control_bytes_{0};
};

// Shared mailbox fabric for ranks running as threads of one process.
class LoopbackHub {
 public:
  explicit LoopbackHub(int world_size);

  int world_size() const { return world_size_; }

  void Post(int src, int dst, std::vector<std::byte> frame);
  std::vector<std::byte> Take(int src, int dst);

  // Wakes every blocked receiver with a CommError; used when a worker fails
  // so the others do not wait forever.
  void Abort(const std::string& reason);

  // Claims a rank slot during bootstrap; throws CommError when taken twice.
  void Claim(int rank);

 private:
  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<std::byte>> frames;
  };
  Mailbox& box(int src, int dst) { return *boxes_[static_cast<std::size_t>(src) * world_size_ + dst]; }

  int world_size_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::atomic<bool> aborted_{false};
  std::mutex abort_mu_;
  std::string abort_reason_;
  std::mutex claim_mu_;
  std::vector<bool> claimed_;
};

class LoopbackTransport final : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<LoopbackHub> hub, int rank);

  TransportMode mode() const override { return TransportMode::kLoopback; }
  LoopbackHub& hub() { return *hub_; }
  void Abort(const std::string& reason) override { hub_->Abort(reason); }

 protected:
  void SendFrame(int peer, std::vector<std::byte> frame) override;
  std::vector<std::byte> RecvFrame(int peer) override;

 private:
  std::shared_ptr<LoopbackHub> hub_;
};

// A bootstrapped worker endpoint.
struct Communicator {
  std::unique_ptr<Transport> transport;
  RingTopology topology;

  int rank() const { return topology.rank; }
  int world_size() const { return topology.world_size; }
};

// Two token passes around the ring; returns once every rank has entered.
void Barrier(Communicator& comm);

struct BootstrapOptions {
  TransportMode mode = TransportMode::kLoopback;
  int world_size = 1;
  int rank = 0;
  std::shared_ptr<LoopbackHub> hub;  // loopback mode
  std::string rendezvous;            // tcp mode, "host:port"; rank 0 listens there
  std::chrono::milliseconds timeout{30000};
};

class BootstrapError : public CommError {
 public:
  using CommError::CommError;
};

// Connects this rank to its ring neighbours and runs a barrier. No parameter
// data is exchanged: workers agree on initial weights through a shared seed.
Communicator Bootstrap(const BootstrapOptions& options);

}  // namespace yasgd::comm

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

// Runs one function per rank on its own thread, over either transport.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "yasgd/comm/transport.h"

namespace yasgd::testing {

// Asks the kernel for a currently free TCP port on localhost.
inline int FreeTcpPort() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  sa.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
  socklen_t len = sizeof(sa);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  ::close(fd);
  return ntohs(sa.sin_port);
}

inline comm::BootstrapOptions WorldOptions(comm::TransportMode mode, int world, int rank,
                                           std::shared_ptr<comm::LoopbackHub> hub,
                                           const std::string& rendezvous) {
  comm::BootstrapOptions o;
  o.mode = mode;
  o.world_size = world;
  o.rank = rank;
  o.hub = std::move(hub);
  o.rendezvous = rendezvous;
  o.timeout = std::chrono::milliseconds(20000);
  return o;
}

// Bootstraps `world` ranks and calls body(comm) on each. Rethrows the first
// worker exception after all threads have finished.
inline void RunWorld(int world, comm::TransportMode mode,
                     const std::function<void(comm::Communicator&)>& body) {
  auto hub = std::make_shared<comm::LoopbackHub>(world);
  const std::string rendezvous = "127.0.0.1:" + std::to_string(FreeTcpPort());
  std::mutex mu;
  std::exception_ptr first;
  std::vector<std::thread> threads;
  for (int r = 0; r < world; ++r) {
    threads.emplace_back([&, r] {
      try {
        auto c = comm::Bootstrap(WorldOptions(mode, world, r, hub, rendezvous));
        body(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        hub->Abort("worker failed");
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace yasgd::testing

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

#include "tcp_transport.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <optional>
#include <thread>

#include <fmt/core.h>

namespace yasgd::comm {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::array<char, 4> kHelloMagic = {'Y', 'S', 'H', 'K'};
constexpr std::uint8_t kHelloVersion = 1;
constexpr std::size_t kHelloSize = 15;  // magic, version, world u32, rank u32, port u16
constexpr std::size_t kIdentSize = 8;   // rank u32, world u32
constexpr std::uint8_t kAccept = 0;
constexpr std::uint8_t kReject = 1;

std::string Errno(const char* what) { return fmt::format("{}: {}", what, std::strerror(errno)); }

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.release();
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

int RemainingMs(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

void WaitReady(int fd, short events, Clock::time_point deadline, const char* what) {
  while (true) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, RemainingMs(deadline));
    if (rc > 0) return;
    if (rc == 0) throw BootstrapError(fmt::format("timed out waiting to {}", what));
    if (errno != EINTR) throw BootstrapError(Errno("poll"));
  }
}

// Blocking full write; deadline only applies during bootstrap.
void WriteAll(int fd, const std::byte* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw CommError(Errno("send"));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns false on orderly close before the first byte.
bool ReadAll(int fd, std::byte* data, std::size_t n, std::optional<Clock::time_point> deadline) {
  std::size_t got = 0;
  while (got < n) {
    if (deadline) WaitReady(fd, POLLIN, *deadline, "read from peer");
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw CommError(Errno("recv"));
    }
    if (r == 0) {
      if (got == 0) return false;
      throw CommError("connection closed mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void PutU16(std::byte* p, std::uint16_t v) {
  p[0] = static_cast<std::byte>(v & 0xFF);
  p[1] = static_cast<std::byte>(v >> 8);
}
void PutU32(std::byte* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
}
std::uint16_t GetU16(const std::byte* p) {
  return static_cast<std::uint16_t>(std::to_integer<unsigned>(p[0]) |
                                    (std::to_integer<unsigned>(p[1]) << 8));
}
std::uint32_t GetU32(const std::byte* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

Endpoint ParseEndpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
    throw BootstrapError(fmt::format("rendezvous '{}' is not host:port", s));
  }
  Endpoint e;
  e.host = s.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw BootstrapError(fmt::format("rendezvous '{}' has a bad port", s));
  }
  if (port <= 0 || port > 65535) throw BootstrapError(fmt::format("rendezvous port {} out of range", port));
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

in_addr Resolve(const std::string& host) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw BootstrapError(fmt::format("cannot resolve '{}': {}", host, ::gai_strerror(rc)));
  }
  const in_addr a = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return a;
}

void SetNoDelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Fd Listen(in_addr addr, std::uint16_t port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd.valid()) throw BootstrapError(Errno("socket"));
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr = addr;
  sa.sin_port = htons(port);
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    throw BootstrapError(Errno(fmt::format("bind port {}", port).c_str()));
  }
  if (::listen(fd.get(), 64) != 0) throw BootstrapError(Errno("listen"));
  return fd;
}

std::uint16_t LocalPort(int fd) {
  sockaddr_in sa{};
  socklen_t len = sizeof(sa);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  return ntohs(sa.sin_port);
}

Fd Accept(int listener, Clock::time_point deadline, const char* what, in_addr* peer = nullptr) {
  WaitReady(listener, POLLIN, deadline, what);
  sockaddr_in sa{};
  socklen_t len = sizeof(sa);
  Fd fd(::accept(listener, reinterpret_cast<sockaddr*>(&sa), &len));
  if (!fd.valid()) throw BootstrapError(Errno("accept"));
  if (peer) *peer = sa.sin_addr;
  SetNoDelay(fd.get());
  return fd;
}

// Retries until the deadline so ranks may start in any order.
Fd Connect(in_addr addr, std::uint16_t port, Clock::time_point deadline, const char* what) {
  while (true) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) throw BootstrapError(Errno("socket"));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr = addr;
    sa.sin_port = htons(port);
    if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
      SetNoDelay(fd.get());
      return fd;
    }
    if (Clock::now() >= deadline) {
      throw BootstrapError(fmt::format("timed out trying to {} ({})", what, std::strerror(errno)));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

// Outgoing half of a ring link. A dedicated thread drains the queue so Send
// never blocks on the receiver.
class SendLink {
 public:
  explicit SendLink(Fd fd) : fd_(std::move(fd)), thread_([this] { Run(); }) {}

  ~SendLink() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
    ::shutdown(fd_.get(), SHUT_WR);
  }

  void Shutdown() { ::shutdown(fd_.get(), SHUT_RDWR); }

  void Push(std::vector<std::byte> frame) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!error_.empty()) throw CommError("send link failed: " + error_);
    queue_.push_back(std::move(frame));
    cv_.notify_one();
  }

 private:
  void Run() {
    std::unique_lock<std::mutex> lock(mu_);
    while (true) {
      cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      auto frame = std::move(queue_.front());
      queue_.pop_front();
      lock.unlock();
      try {
        WriteAll(fd_.get(), frame.data(), frame.size());
      } catch (const CommError& e) {
        lock.lock();
        error_ = e.what();
        queue_.clear();
        return;
      }
      lock.lock();
    }
  }

  Fd fd_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<std::byte>> queue_;
  bool stop_ = false;
  std::string error_;
  std::thread thread_;
};

class TcpTransport final : public Transport {
 public:
  TcpTransport(int rank, int world_size) : Transport(rank, world_size) {}

  TransportMode mode() const override { return TransportMode::kTcp; }

  void Connect(const BootstrapOptions& options);

  // Links are fixed after Connect, so walking the maps here does not race.
  void Abort(const std::string&) override {
    for (auto& [peer, link] : out_) link->Shutdown();
    for (auto& [peer, fd] : in_) ::shutdown(fd.get(), SHUT_RDWR);
  }

 protected:
  void SendFrame(int peer, std::vector<std::byte> frame) override {
    auto it = out_.find(peer);
    if (it == out_.end()) {
      throw CommError(fmt::format("rank {}: no tcp link to rank {}", rank(), peer));
    }
    it->second->Push(std::move(frame));
  }

  std::vector<std::byte> RecvFrame(int peer) override {
    auto it = in_.find(peer);
    if (it == in_.end()) {
      throw CommError(fmt::format("rank {}: no tcp link from rank {}", rank(), peer));
    }
    const int fd = it->second.get();
    std::vector<std::byte> frame(WireHeader::kSize);
    if (!ReadAll(fd, frame.data(), frame.size(), std::nullopt)) {
      throw CommError(fmt::format("rank {}: rank {} closed the connection", rank(), peer));
    }
    const WireHeader h = WireHeader::Decode(frame);
    frame.resize(WireHeader::kSize + h.payload_bytes());
    if (h.payload_bytes() > 0 &&
        !ReadAll(fd, frame.data() + WireHeader::kSize, h.payload_bytes(), std::nullopt)) {
      throw CommError("connection closed mid-frame");
    }
    return frame;
  }

 private:
  void SendControl(int fd, const std::byte* data, std::size_t n) {
    WriteAll(fd, data, n);
    AddControlBytes(n);
  }

  std::vector<Endpoint> Rendezvous(const BootstrapOptions& options, std::uint16_t ring_port,
                                   Clock::time_point deadline);

  std::map<int, std::unique_ptr<SendLink>> out_;
  std::map<int, Fd> in_;
};

std::vector<Endpoint> TcpTransport::Rendezvous(const BootstrapOptions& options,
                                               std::uint16_t ring_port,
                                               Clock::time_point deadline) {
  const Endpoint rv = ParseEndpoint(options.rendezvous);
  const int p = options.world_size;
  std::vector<Endpoint> table(p);

  if (options.rank == 0) {
    Fd listener = Listen(in_addr{htonl(INADDR_ANY)}, rv.port);
    table[0] = Endpoint{"", ring_port};  // clients substitute the rendezvous host
    std::vector<Fd> clients;
    std::vector<bool> seen(p, false);
    seen[0] = true;
    std::string reject;
    for (int joined = 1; joined < p && reject.empty(); ++joined) {
      in_addr peer_addr{};
      Fd c = Accept(listener.get(), deadline, "accept a rendezvous hello", &peer_addr);
      std::array<std::byte, kHelloSize> hello{};
      if (!ReadAll(c.get(), hello.data(), hello.size(), deadline)) {
        reject = "peer closed during handshake";
      } else {
        const bool magic_ok = std::equal(kHelloMagic.begin(), kHelloMagic.end(), hello.begin(),
                                         [](char a, std::byte b) { return static_cast<std::byte>(a) == b; });
        const auto version = std::to_integer<std::uint8_t>(hello[4]);
        const auto world = GetU32(hello.data() + 5);
        const auto rank = GetU32(hello.data() + 9);
        if (!magic_ok || version != kHelloVersion) {
          reject = "handshake magic/version mismatch";
        } else if (static_cast<int>(world) != p) {
          reject = fmt::format("world size mismatch: rank {} declared {}, rank 0 expects {}", rank,
                               world, p);
        } else if (rank >= world || seen[rank]) {
          reject = fmt::format("rank {} is invalid or already joined", rank);
        } else {
          seen[rank] = true;
          char buf[INET_ADDRSTRLEN];
          ::inet_ntop(AF_INET, &peer_addr, buf, sizeof(buf));
          table[rank] = Endpoint{buf, GetU16(hello.data() + 13)};
        }
      }
      clients.push_back(std::move(c));
    }
    if (!reject.empty()) {
      std::vector<std::byte> msg(3 + reject.size());
      msg[0] = static_cast<std::byte>(kReject);
      PutU16(msg.data() + 1, static_cast<std::uint16_t>(reject.size()));
      std::memcpy(msg.data() + 3, reject.data(), reject.size());
      for (auto& c : clients) {
        try {
          SendControl(c.get(), msg.data(), msg.size());
        } catch (const CommError&) {
        }
      }
      throw BootstrapError("rank 0: handshake rejected: " + reject);
    }
    // Table: per rank, host length u16, host bytes, port u16.
    std::vector<std::byte> msg;
    for (int r = 0; r < p; ++r) {
      const std::size_t at = msg.size();
      msg.resize(at + 4 + table[r].host.size());
      PutU16(msg.data() + at, static_cast<std::uint16_t>(table[r].host.size()));
      std::memcpy(msg.data() + at + 2, table[r].host.data(), table[r].host.size());
      PutU16(msg.data() + at + 2 + table[r].host.size(), table[r].port);
    }
    std::array<std::byte, 5> len{};
    len[0] = static_cast<std::byte>(kAccept);
    PutU32(len.data() + 1, static_cast<std::uint32_t>(msg.size()));
    for (auto& c : clients) {
      SendControl(c.get(), len.data(), len.size());
      SendControl(c.get(), msg.data(), msg.size());
    }
    return table;
  }

  Fd c = ::yasgd::comm::Connect(Resolve(rv.host), rv.port, deadline, "reach rendezvous");
  std::array<std::byte, kHelloSize> hello{};
  for (std::size_t i = 0; i < 4; ++i) hello[i] = static_cast<std::byte>(kHelloMagic[i]);
  hello[4] = static_cast<std::byte>(kHelloVersion);
  PutU32(hello.data() + 5, static_cast<std::uint32_t>(p));
  PutU32(hello.data() + 9, static_cast<std::uint32_t>(options.rank));
  PutU16(hello.data() + 13, ring_port);
  SendControl(c.get(), hello.data(), hello.size());

  std::array<std::byte, 4> head{};
  if (!ReadAll(c.get(), head.data(), 1, deadline)) {
    throw BootstrapError(fmt::format("rank {}: rendezvous closed without a reply", options.rank));
  }
  if (std::to_integer<std::uint8_t>(head[0]) == kReject) {
    std::array<std::byte, 2> n{};
    std::string reason = "(no reason)";
    if (ReadAll(c.get(), n.data(), 2, deadline)) {
      reason.assign(GetU16(n.data()), '\0');
      ReadAll(c.get(), reinterpret_cast<std::byte*>(reason.data()), reason.size(), deadline);
    }
    throw BootstrapError(fmt::format("rank {}: handshake rejected: {}", options.rank, reason));
  }
  if (std::to_integer<std::uint8_t>(head[0]) != kAccept) throw BootstrapError("malformed reply");
  if (!ReadAll(c.get(), head.data(), 4, deadline)) throw BootstrapError("truncated table");
  std::vector<std::byte> msg(GetU32(head.data()));
  if (!msg.empty() && !ReadAll(c.get(), msg.data(), msg.size(), deadline)) {
    throw BootstrapError("truncated table");
  }
  std::size_t at = 0;
  for (int r = 0; r < p; ++r) {
    if (at + 2 > msg.size()) throw BootstrapError("malformed table");
    const std::size_t hl = GetU16(msg.data() + at);
    if (at + 4 + hl > msg.size()) throw BootstrapError("malformed table");
    table[r].host.assign(reinterpret_cast<const char*>(msg.data() + at + 2), hl);
    table[r].port = GetU16(msg.data() + at + 2 + hl);
    at += 4 + hl;
  }
  if (table[0].host.empty()) table[0].host = rv.host;
  return table;
}

void TcpTransport::Connect(const BootstrapOptions& options) {
  const auto deadline = Clock::now() + options.timeout;
  const int p = options.world_size;
  const int r = options.rank;
  if (p == 1) return;

  Fd ring_listener = Listen(in_addr{htonl(INADDR_ANY)}, 0);
  const std::uint16_t ring_port = LocalPort(ring_listener.get());
  auto table = Rendezvous(options, ring_port, deadline);

  const int succ = (r + 1) % p;
  const int pred = (r + p - 1) % p;
  // Rank 0 never dials itself, so its own empty host entry is harmless.
  const std::string& succ_host = table[succ].host.empty() ? ParseEndpoint(options.rendezvous).host
                                                          : table[succ].host;
  Fd out = ::yasgd::comm::Connect(Resolve(succ_host), table[succ].port, deadline,
                                  "connect to ring successor");
  std::array<std::byte, kIdentSize> ident{};
  PutU32(ident.data(), static_cast<std::uint32_t>(r));
  PutU32(ident.data() + 4, static_cast<std::uint32_t>(p));
  SendControl(out.get(), ident.data(), ident.size());

  Fd in = Accept(ring_listener.get(), deadline, "accept ring predecessor");
  std::array<std::byte, kIdentSize> got{};
  if (!ReadAll(in.get(), got.data(), got.size(), deadline)) {
    throw BootstrapError("ring predecessor closed during ident");
  }
  if (static_cast<int>(GetU32(got.data())) != pred ||
      static_cast<int>(GetU32(got.data() + 4)) != p) {
    throw BootstrapError(fmt::format("rank {}: unexpected ring ident (rank {}, world {})", r,
                                     GetU32(got.data()), GetU32(got.data() + 4)));
  }
  out_[succ] = std::make_unique<SendLink>(std::move(out));
  in_[pred] = std::move(in);
}

}  // namespace

std::unique_ptr<Transport> ConnectTcpRing(const BootstrapOptions& options) {
  auto t = std::make_unique<TcpTransport>(options.rank, options.world_size);
  t->Connect(options);
  return t;
}

}  // namespace yasgd::comm

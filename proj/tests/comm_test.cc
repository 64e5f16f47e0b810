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

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "support/world.h"
#include "yasgd/comm/allreduce.h"
#include "yasgd/comm/transport.h"
#include "yasgd/comm/wire_message.h"
#include "yasgd/optim/half.h"

namespace yasgd::comm {
namespace {

using testing::RunWorld;

TEST(WireMessageTest, RoundTripsRandomMessages) {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 500; ++i) {
    WireMessage m;
    m.header.iteration = gen();
    m.header.group = static_cast<std::uint32_t>(gen());
    m.header.chunk = static_cast<std::uint32_t>(gen());
    m.header.dtype = gen() % 2 ? DType::kF16 : DType::kF32;
    m.header.count = gen() % 64;
    m.payload.resize(m.header.payload_bytes());
    for (auto& b : m.payload) b = static_cast<std::byte>(gen());
    const auto frame = m.Encode();
    ASSERT_EQ(frame.size(), m.wire_size());
    const auto back = WireMessage::Decode(frame);
    EXPECT_EQ(back.header.iteration, m.header.iteration);
    EXPECT_EQ(back.header.group, m.header.group);
    EXPECT_EQ(back.header.chunk, m.header.chunk);
    EXPECT_EQ(back.header.dtype, m.header.dtype);
    EXPECT_EQ(back.header.count, m.header.count);
    EXPECT_EQ(back.payload, m.payload);
    EXPECT_EQ(back.Encode(), frame);
  }
}

TEST(WireMessageTest, ByteLayoutIsLittleEndian) {
  WireMessage m;
  m.header.iteration = 0x0102030405060708ull;
  m.header.group = 0x0A0B0C0D;
  m.header.chunk = 7;
  m.header.dtype = DType::kF32;
  m.header.count = 1;
  m.payload = PackF32(std::vector<float>{1.0f});
  const auto f = m.Encode();
  ASSERT_EQ(f.size(), 34u);
  EXPECT_EQ(std::memcmp(f.data(), "YASG", 4), 0);
  EXPECT_EQ(f[4], std::byte{1});
  EXPECT_EQ(f[5], std::byte{0x08});
  EXPECT_EQ(f[12], std::byte{0x01});
  EXPECT_EQ(f[13], std::byte{0x0D});
  EXPECT_EQ(f[17], std::byte{7});
  EXPECT_EQ(f[21], std::byte{0});
  EXPECT_EQ(f[22], std::byte{1});
  EXPECT_EQ(f[30], std::byte{0x00});
  EXPECT_EQ(f[33], std::byte{0x3F});  // 1.0f = 0x3F800000
}

TEST(WireMessageTest, RejectsCorruptFrames) {
  WireMessage m;
  m.header.count = 2;
  m.payload = PackF32(std::vector<float>{1.0f, 2.0f});
  const auto good = m.Encode();

  auto bad_magic = good;
  bad_magic[0] = std::byte{'X'};
  EXPECT_THROW(WireMessage::Decode(bad_magic), CommError);

  auto bad_version = good;
  bad_version[4] = std::byte{2};
  EXPECT_THROW(WireMessage::Decode(bad_version), CommError);

  auto bad_dtype = good;
  bad_dtype[21] = std::byte{7};
  EXPECT_THROW(WireMessage::Decode(bad_dtype), CommError);

  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(WireMessage::Decode(truncated), CommError);
  EXPECT_THROW(WireMessage::Decode(std::span(good).first(10)), CommError);

  WireMessage lying = m;
  lying.header.count = 3;
  EXPECT_THROW(lying.Encode(), CommError);
}

TEST(WireMessageTest, HalfPackingRoundsToNearestEven) {
  const std::vector<float> v = {1.0f, 0.1f, -65504.0f, 1e9f};
  std::vector<float> back(v.size());
  UnpackF16(PackF16(v), back);
  EXPECT_EQ(back[0], 1.0f);
  EXPECT_EQ(back[1], optim::Half16::FromFloat(0.1f).ToFloat());
  EXPECT_EQ(back[2], -65504.0f);
  EXPECT_EQ(back[3], 65504.0f);
}

TEST(BootstrapTest, SingletonWorld) {
  for (auto mode : {TransportMode::kLoopback, TransportMode::kTcp}) {
    RunWorld(1, mode, [](Communicator& c) {
      EXPECT_EQ(c.rank(), 0);
      EXPECT_EQ(c.topology.successor(), 0);
      Barrier(c);
      EXPECT_EQ(c.transport->counters().messages_sent, 0u);
    });
  }
}

TEST(BootstrapTest, DistinctRanksAndNoPayloadAtStartup) {
  for (auto mode : {TransportMode::kLoopback, TransportMode::kTcp}) {
    std::vector<std::atomic<int>> seen(4);
    RunWorld(4, mode, [&](Communicator& c) {
      seen[c.rank()] += 1;
      EXPECT_EQ(c.transport->mode(), mode);
      const auto n = c.transport->counters();
      EXPECT_EQ(n.payload_bytes_sent, 0u);
      EXPECT_GT(n.messages_sent, 0u);  // barrier tokens
      if (mode == TransportMode::kTcp) {
        EXPECT_GT(n.control_bytes_sent, 0u);
      }
    });
    for (auto& s : seen) EXPECT_EQ(s.load(), 1);
  }
}

TEST(BootstrapTest, LoopbackWorldSizeMismatchRejected) {
  auto hub = std::make_shared<LoopbackHub>(2);
  EXPECT_THROW(Bootstrap(testing::WorldOptions(TransportMode::kLoopback, 3, 0, hub, "")),
               BootstrapError);
}

TEST(BootstrapTest, TcpWorldSizeMismatchRejectedOnBothSides) {
  const std::string rv = "127.0.0.1:" + std::to_string(testing::FreeTcpPort());
  std::atomic<int> rejected{0};
  std::vector<std::thread> threads;
  for (int r = 0; r < 2; ++r) {
    threads.emplace_back([&, r] {
      auto o = testing::WorldOptions(TransportMode::kTcp, r == 0 ? 2 : 3, r, nullptr, rv);
      o.timeout = std::chrono::milliseconds(5000);
      try {
        Bootstrap(o);
      } catch (const BootstrapError& e) {
        if (std::string(e.what()).find("rejected") != std::string::npos) ++rejected;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(rejected.load(), 2);
}

TEST(BootstrapTest, TcpTimeoutWhenPeerNeverArrives) {
  auto o = testing::WorldOptions(TransportMode::kTcp, 2, 1, nullptr,
                                 "127.0.0.1:" + std::to_string(testing::FreeTcpPort()));
  o.timeout = std::chrono::milliseconds(300);
  EXPECT_THROW(Bootstrap(o), BootstrapError);
}

TEST(RingChunkTest, CoversBufferInOrder) {
  for (std::size_t n : {0u, 1u, 7u, 1000u, 1001u}) {
    for (int p : {1, 2, 3, 5, 8}) {
      std::size_t next = 0;
      for (int c = 0; c < p; ++c) {
        const auto r = RingChunk(n, p, c);
        EXPECT_EQ(r.begin, next);
        EXPECT_LE(r.size(), (n + p - 1) / p);
        next = r.end;
      }
      EXPECT_EQ(next, n);
    }
  }
}

struct Case {
  TransportMode mode;
  AllreduceOrder order;
};

class AllreduceTest : public ::testing::TestWithParam<Case> {};

TEST_P(AllreduceTest, RankPlusOneSumsToTen) {
  const auto [mode, order] = GetParam();
  RunWorld(4, mode, [&](Communicator& c) {
    std::vector<float> v = {static_cast<float>(c.rank() + 1)};
    Allreduce(c, v, AllreduceOptions{DType::kF32, order, 0, 0});
    EXPECT_EQ(v[0], 10.0f);
  });
}

TEST_P(AllreduceTest, SingletonIsIdentity) {
  const auto [mode, order] = GetParam();
  RunWorld(1, mode, [&](Communicator& c) {
    std::vector<float> v = {1.5f, -0.0f, 3.25f};
    const auto before = v;
    Allreduce(c, v, AllreduceOptions{DType::kF16, order, 0, 0});
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint32_t>(v[i]), std::bit_cast<std::uint32_t>(before[i]));
    }
  });
}

// Buffers are a pure function of (seed, rank) so every thread can rebuild
// every rank's input for the oracle.
std::vector<float> RankBuffer(std::uint64_t seed, int rank, std::size_t n, bool integers) {
  std::mt19937_64 gen(seed * 1000 + rank);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = integers ? static_cast<float>(static_cast<int>(gen() % 2001) - 1000) : u(gen);
  return v;
}

TEST_P(AllreduceTest, MatchesSequentialSumOracle) {
  const auto [mode, order] = GetParam();
  for (int p : {2, 3, 5, 8}) {
    for (bool integers : {false, true}) {
      for (std::size_t n : {1000u, 7u, 3u}) {
        std::vector<std::vector<float>> inputs(p);
        for (int r = 0; r < p; ++r) inputs[r] = RankBuffer(n + p, r, n, integers);
        RunWorld(p, mode, [&](Communicator& c) {
          auto v = inputs[c.rank()];
          Allreduce(c, v, AllreduceOptions{DType::kF32, order, 3, 1});
          for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            double abs_sum = 0.0;
            for (int r = 0; r < p; ++r) {
              sum += inputs[r][i];
              abs_sum += std::abs(inputs[r][i]);
            }
            if (integers) {
              ASSERT_EQ(v[i], static_cast<float>(sum));
            } else {
              ASSERT_LE(std::abs(v[i] - sum), 1e-6 * abs_sum) << "p=" << p << " i=" << i;
            }
          }
        });
      }
    }
  }
}

TEST_P(AllreduceTest, AllRanksBitwiseIdenticalAndRepeatable) {
  const auto [mode, order] = GetParam();
  for (int p : {3, 8}) {
    std::vector<std::vector<float>> results(p);
    for (int run = 0; run < 2; ++run) {
      std::vector<std::vector<float>> out(p);
      RunWorld(p, mode, [&](Communicator& c) {
        auto v = RankBuffer(11, c.rank(), 333, false);
        Allreduce(c, v, AllreduceOptions{DType::kF32, order, 0, 0});
        out[c.rank()] = v;
      });
      for (int r = 1; r < p; ++r) {
        EXPECT_EQ(std::memcmp(out[0].data(), out[r].data(), 333 * sizeof(float)), 0);
      }
      if (run == 1) {
        EXPECT_EQ(std::memcmp(out[0].data(), results[0].data(), 333 * sizeof(float)), 0);
      }
      results = out;
    }
  }
}

TEST_P(AllreduceTest, Fp16ExactForRepresentableValues) {
  const auto [mode, order] = GetParam();
  RunWorld(2, mode, [&](Communicator& c) {
    std::vector<float> v = {0.5f, 1.25f, -3.0f, 1024.0f};
    if (c.rank() == 1) v = {0.25f, 2.0f, 1.0f, 512.0f};
    Allreduce(c, v, AllreduceOptions{DType::kF16, order, 0, 0});
    EXPECT_EQ(v, (std::vector<float>{0.75f, 3.25f, -2.0f, 1536.0f}));
  });
}

TEST_P(AllreduceTest, Fp16CloseToF32) {
  const auto [mode, order] = GetParam();
  RunWorld(4, mode, [&](Communicator& c) {
    const auto input = RankBuffer(5, c.rank(), 1000, false);
    auto f32 = input;
    auto f16 = input;
    Allreduce(c, f32, AllreduceOptions{DType::kF32, order, 0, 0});
    Allreduce(c, f16, AllreduceOptions{DType::kF16, order, 1, 0});
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < f32.size(); ++i) {
      diff += (f16[i] - f32[i]) * static_cast<double>(f16[i] - f32[i]);
      norm += f32[i] * static_cast<double>(f32[i]);
    }
    EXPECT_LE(std::sqrt(diff / norm), 2e-3);
  });
}

TEST_P(AllreduceTest, Fp16ResultIsRankSymmetric) {
  const auto [mode, order] = GetParam();
  std::vector<std::vector<float>> out(5);
  RunWorld(5, mode, [&](Communicator& c) {
    auto v = RankBuffer(6, c.rank(), 101, false);
    Allreduce(c, v, AllreduceOptions{DType::kF16, order, 0, 0});
    out[c.rank()] = v;
  });
  for (int r = 1; r < 5; ++r) EXPECT_EQ(out[r], out[0]);
}

TEST_P(AllreduceTest, AllgatherFlagsUnion) {
  const auto [mode, order] = GetParam();
  (void)order;
  RunWorld(3, mode, [&](Communicator& c) {
    std::vector<bool> mine(6, false);
    mine[2 * c.rank()] = true;
    const auto s = AllgatherFlags(c, mine, 4);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(s.any(i), i % 2 == 0);
      EXPECT_FALSE(s.all(i));
    }
    const auto full = AllgatherFlags(c, std::vector<bool>(6, true), 5);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_TRUE(full.all(i));
  });
  RunWorld(1, mode, [](Communicator& c) {
    const auto s = AllgatherFlags(c, {true, false}, 0);
    EXPECT_TRUE(s.any(0));
    EXPECT_FALSE(s.any(1));
  });
}

INSTANTIATE_TEST_SUITE_P(
    Transports, AllreduceTest,
    ::testing::Values(Case{TransportMode::kLoopback, AllreduceOrder::kRankOrdered},
                      Case{TransportMode::kLoopback, AllreduceOrder::kRing},
                      Case{TransportMode::kTcp, AllreduceOrder::kRankOrdered},
                      Case{TransportMode::kTcp, AllreduceOrder::kRing}),
    [](const auto& info) {
      return std::string(TransportModeName(info.param.mode)) + "_" +
             AllreduceOrderName(info.param.order);
    });

// The ordered reduction is one left fold over all blocks of all ranks in
// rank order, so the bits do not depend on how blocks are spread over ranks.
TEST(RankOrderedTest, BitwiseInvariantToWorldSize) {
  const int blocks = 8;
  const std::size_t n = 257;
  std::vector<std::vector<float>> data(blocks);
  for (int b = 0; b < blocks; ++b) data[b] = RankBuffer(77, b, n, false);
  std::vector<float> oracle(n, -0.0f);
  for (int b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < n; ++i) oracle[i] = oracle[i] + data[b][i];
  }
  for (int p : {1, 2, 4, 8, 3}) {
    RunWorld(p, TransportMode::kLoopback, [&](Communicator& c) {
      std::vector<std::span<const float>> parts;
      for (int b = 0; b < blocks; ++b) {
        if (b * p / blocks == c.rank()) parts.emplace_back(data[b]);
      }
      std::vector<float> out(n);
      Allreduce(c, parts, out, AllreduceOptions{});
      EXPECT_EQ(std::memcmp(out.data(), oracle.data(), n * sizeof(float)), 0) << "p=" << p;
    });
  }
}

TEST(AllreduceErrorTest, CountMismatchDetected) {
  EXPECT_THROW(RunWorld(2, TransportMode::kLoopback,
                        [](Communicator& c) {
                          std::vector<float> v(c.rank() == 0 ? 6 : 5, 1.0f);
                          Allreduce(c, v, AllreduceOptions{});
                        }),
               CommError);
}

TEST(AllreduceErrorTest, IterationMismatchDetected) {
  EXPECT_THROW(RunWorld(3, TransportMode::kLoopback,
                        [](Communicator& c) {
                          std::vector<float> v(9, 1.0f);
                          Allreduce(c, v, AllreduceOptions{DType::kF32, AllreduceOrder::kRing,
                                                           c.rank() == 2 ? 8u : 7u, 0});
                        }),
               CommError);
}

TEST(AllreduceErrorTest, BlockSizeMismatchRejected) {
  RunWorld(1, TransportMode::kLoopback, [](Communicator& c) {
    std::vector<float> a(3);
    std::vector<std::span<const float>> parts = {std::span<const float>(a)};
    std::vector<float> out(4);
    EXPECT_THROW(Allreduce(c, parts, out, AllreduceOptions{}), std::invalid_argument);
  });
}

TEST(TrafficCountersTest, CountPayloadAndHeaders) {
  RunWorld(2, TransportMode::kLoopback, [](Communicator& c) {
    const auto before = c.transport->counters();
    std::vector<float> v(10, 1.0f);
    Allreduce(c, v, AllreduceOptions{DType::kF16, AllreduceOrder::kRing, 0, 0});
    const auto after = c.transport->counters();
    // Ring with P=2: one reduce-scatter and one allgather message of 5 halves.
    EXPECT_EQ(after.messages_sent - before.messages_sent, 2u);
    EXPECT_EQ(after.payload_bytes_sent - before.payload_bytes_sent, 20u);
    EXPECT_EQ(after.wire_bytes_sent - before.wire_bytes_sent, 20u + 2 * WireHeader::kSize);
  });
}

}  // namespace
}  // namespace yasgd::comm

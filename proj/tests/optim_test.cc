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

#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "yasgd/optim/half.h"
#include "yasgd/optim/lars.h"
#include "yasgd/optim/lr_schedule.h"

namespace yasgd::optim {
namespace {

using model::ParamSegment;
using model::SegmentKind;

LrSchedule Warmup(double base, std::int64_t warmup, std::int64_t total, DecayKind decay) {
  LrSchedule s;
  s.base_lr = base;
  s.warmup_iters = warmup;
  s.total_iters = total;
  s.decay = decay;
  return s;
}

TEST(LrScheduleTest, WarmupExamples) {
  const auto s = Warmup(8.0, 16, 100, DecayKind::kConstant);
  EXPECT_DOUBLE_EQ(LrAt(s, 15), 8.0);
  EXPECT_DOUBLE_EQ(LrAt(s, 3), 2.0);
  EXPECT_DOUBLE_EQ(LrAt(s, 16), 8.0);
}

TEST(LrScheduleTest, PolynomialAtMidpoint) {
  auto s = Warmup(3.0, 0, 100, DecayKind::kPolynomial);
  s.power = 2.0;
  EXPECT_DOUBLE_EQ(LrAt(s, 50), 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(LrAt(s, 0), 3.0);
}

TEST(LrScheduleTest, LinearAndStep) {
  const auto lin = Warmup(1.0, 10, 110, DecayKind::kLinear);
  EXPECT_DOUBLE_EQ(LrAt(lin, 10), 1.0);
  EXPECT_DOUBLE_EQ(LrAt(lin, 60), 0.5);
  auto step = Warmup(1.0, 5, 100, DecayKind::kStep);
  step.milestones = {30, 60};
  step.gamma = 0.1;
  EXPECT_DOUBLE_EQ(LrAt(step, 29), 1.0);
  EXPECT_DOUBLE_EQ(LrAt(step, 30), 0.1);
  EXPECT_NEAR(LrAt(step, 99), 0.01, 1e-15);
}

TEST(LrScheduleTest, OutOfRangeAndInvalid) {
  const auto s = Warmup(1.0, 2, 10, DecayKind::kConstant);
  EXPECT_THROW(LrAt(s, -1), std::out_of_range);
  EXPECT_THROW(LrAt(s, 10), std::out_of_range);
  auto bad = Warmup(1.0, 5, 10, DecayKind::kStep);
  bad.milestones = {3};
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  EXPECT_THROW(Warmup(0.0, 0, 10, DecayKind::kConstant).Validate(), std::invalid_argument);
  EXPECT_THROW(ParseDecayKind("cosine"), std::invalid_argument);
}

TEST(LrScheduleTest, PropertiesAcrossRandomSchedules) {
  std::mt19937 gen(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto decay = static_cast<DecayKind>(gen() % 4);
    const std::int64_t warmup = gen() % 30;
    const std::int64_t total = warmup + 1 + gen() % 200;
    auto s = Warmup(0.1 + (gen() % 100) / 10.0, warmup, total, decay);
    s.power = 1.0 + (gen() % 3);
    if (decay == DecayKind::kStep && total > warmup + 1) s.milestones = {warmup + 1};
    for (std::int64_t i = 0; i < total; ++i) {
      const double lr = LrAt(s, i);
      EXPECT_GE(lr, 0.0);
      if (i > 0 && i <= warmup) {
        EXPECT_GE(lr, LrAt(s, i - 1));
      }
    }
    if (warmup > 0 && warmup < total) {
      EXPECT_EQ(LrAt(s, warmup - 1), s.base_lr);
      if (decay == DecayKind::kConstant || decay == DecayKind::kStep) {
        EXPECT_LE(LrAt(s, warmup - 1), LrAt(s, warmup));
      }
    }
  }
}

TEST(BatchedNormsTest, Examples) {
  const std::vector<float> buf = {3, 4, 0, 0, 0};
  const std::vector<ParamSegment> segs = {{"a", 0, 2, {2}, SegmentKind::kWeight},
                                          {"b", 2, 3, {3}, SegmentKind::kWeight}};
  EXPECT_EQ(BatchedNorms<float>(buf, segs), (std::vector<double>{5.0, 0.0}));
  const std::vector<ParamSegment> whole = {{"w", 0, 5, {5}, SegmentKind::kWeight}};
  EXPECT_EQ(BatchedNorms<float>(buf, whole), (std::vector<double>{5.0}));
  const std::vector<ParamSegment> overlap = {{"a", 0, 3, {3}, SegmentKind::kWeight},
                                             {"b", 2, 3, {3}, SegmentKind::kWeight}};
  EXPECT_THROW(BatchedNorms<float>(buf, overlap), std::invalid_argument);
}

TEST(BatchedNormsTest, EqualsPerSegmentLoopWithEmptySegments) {
  std::mt19937 gen(2);
  std::normal_distribution<float> normal;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ParamSegment> segs;
    std::size_t offset = 0;
    for (int s = 0; s < 50; ++s) {
      const std::size_t len = gen() % 4 == 0 ? 0 : gen() % 300;
      segs.push_back({"s", offset, len, {static_cast<int>(len)}, SegmentKind::kWeight});
      offset += len;
    }
    std::vector<float> buf(offset);
    for (auto& x : buf) x = normal(gen);
    const auto norms = BatchedNorms<float>(buf, segs);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      double acc = 0.0;
      for (std::size_t i = segs[s].offset; i < segs[s].offset + segs[s].len; ++i) {
        acc += static_cast<double>(buf[i]) * buf[i];
      }
      EXPECT_EQ(norms[s], std::sqrt(acc));
    }
  }
}

TEST(LarsTrustRatioTest, Examples) {
  LarsConfig cfg;
  cfg.eta = 0.001;
  EXPECT_DOUBLE_EQ(LarsTrustRatio(1.0, 1.0, cfg), 0.001);
  EXPECT_EQ(LarsTrustRatio(0.0, 5.0, cfg), 1.0);
  EXPECT_EQ(LarsTrustRatio(3.0, 0.0, cfg), 1.0);  // zero denominator falls back
}

TEST(LarsTrustRatioTest, ScaleInvariant) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  LarsConfig cfg;
  cfg.weight_decay = 5e-5;
  for (int i = 0; i < 200; ++i) {
    const double w = u(gen);
    const double g = u(gen);
    const double c = i == 0 ? 7.3 : u(gen);
    EXPECT_NEAR(LarsTrustRatio(c * w, c * g, cfg), LarsTrustRatio(w, g, cfg),
                1e-12 * LarsTrustRatio(w, g, cfg));
  }
}

struct OneSegment {
  std::shared_ptr<const model::ParamLayout> layout;
  model::FlatParams params;
  model::FlatGrads grads;

  explicit OneSegment(std::vector<float> w, std::vector<float> g, SegmentKind kind = SegmentKind::kWeight) {
    const int n = static_cast<int>(w.size());
    layout = std::make_shared<const model::ParamLayout>(
        std::vector<ParamSegment>{{"x", 0, w.size(), {n, 1}, kind}});
    params = model::FlatParams(layout);
    params.values = std::move(w);
    grads = model::FlatGrads(layout);
    grads.values = std::move(g);
  }
};

LarsConfig NoLars() {
  LarsConfig c;
  c.enabled = false;
  return c;
}

TEST(SgdStepTest, VanillaStep) {
  OneSegment s({1.0f}, {2.0f});
  auto mom = MakeMomentumState(s.params, 0.0);
  SgdStep(s.params, s.grads, mom, Warmup(0.1, 0, 10, DecayKind::kConstant), NoLars(), 0);
  EXPECT_FLOAT_EQ(s.params.values[0], 0.8f);
}

TEST(SgdStepTest, ZeroGradientDecaysVelocity) {
  OneSegment s({1.0f}, {0.0f});
  auto mom = MakeMomentumState(s.params, 0.9);
  mom.velocity[0] = 2.0f;
  SgdStep(s.params, s.grads, mom, Warmup(0.5, 0, 10, DecayKind::kConstant), NoLars(), 0);
  EXPECT_FLOAT_EQ(mom.velocity[0], 0.9f * 2.0f);
  EXPECT_FLOAT_EQ(s.params.values[0], 1.0f - 0.5f * (0.9f * 2.0f));
}

TEST(SgdStepTest, ReducesToPlainSgdBitwise) {
  std::mt19937 gen(4);
  std::normal_distribution<float> normal;
  std::vector<float> w(1000);
  std::vector<float> g(1000);
  for (auto& x : w) x = normal(gen);
  for (auto& x : g) x = normal(gen);
  OneSegment s(w, g);
  auto mom = MakeMomentumState(s.params, 0.0);
  SgdStep(s.params, s.grads, mom, Warmup(0.37, 0, 10, DecayKind::kConstant), NoLars(), 0);
  const float lr = 0.37f;
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(s.params.values[i]),
              std::bit_cast<std::uint32_t>(w[i] - lr * (0.0f * 0.0f + g[i])));
  }
}

TEST(SgdStepTest, QuadraticMatchesScalarOracle) {
  // f(w) = 0.5 * a * w^2, grad = a * w; LARS with weight decay.
  const double a = 3.0;
  OneSegment s({2.0f}, {0.0f});
  auto mom = MakeMomentumState(s.params, 0.9);
  LarsConfig lars;
  lars.eta = 0.02;
  lars.weight_decay = 0.01;
  const auto sched = Warmup(0.5, 2, 10, DecayKind::kConstant);
  double w = 2.0;
  double v = 0.0;
  for (int it = 0; it < 2; ++it) {
    s.grads.values[0] = static_cast<float>(a * s.params.values[0]);
    SgdStep(s.params, s.grads, mom, sched, lars, it);
    const double g = a * w;
    const double lr = LrAt(sched, it) * lars.eta * std::abs(w) / (std::abs(g) + 0.01 * std::abs(w));
    v = 0.9 * v + (g + 0.01 * w);
    w = w - lr * v;
    EXPECT_NEAR(s.params.values[0], w, 1e-6 * std::abs(w));
  }
}

TEST(SgdStepTest, SkippedKindsUseScheduledRateWithoutDecay) {
  OneSegment s({1.0f}, {1.0f}, SegmentKind::kBias);
  auto mom = MakeMomentumState(s.params, 0.0);
  LarsConfig lars;
  lars.weight_decay = 0.5;
  const auto r = SgdStep(s.params, s.grads, mom, Warmup(0.1, 0, 10, DecayKind::kConstant), lars, 0);
  EXPECT_DOUBLE_EQ(r.local_lr[0], 0.1);
  EXPECT_FLOAT_EQ(s.params.values[0], 0.9f);
}

TEST(SgdStepTest, NonFiniteGradientRejectedWithoutMutation) {
  OneSegment s({1.0f, 2.0f}, {0.5f, std::numeric_limits<float>::quiet_NaN()});
  auto mom = MakeMomentumState(s.params, 0.9);
  const auto before = s.params.values;
  EXPECT_THROW(SgdStep(s.params, s.grads, mom, Warmup(0.1, 0, 10, DecayKind::kConstant), NoLars(), 0),
               std::domain_error);
  EXPECT_EQ(s.params.values, before);
  EXPECT_EQ(mom.velocity, (std::vector<float>{0.0f, 0.0f}));
}

// Nearest-neighbour oracle over every finite half value, ties to even.
std::uint16_t NearestHalfOracle(float f, const std::vector<float>& table) {
  if (std::isnan(f)) return 0x7E00;
  const std::uint16_t sign = std::signbit(f) ? 0x8000 : 0;
  const double a = std::abs(static_cast<double>(f));
  if (std::isinf(f)) return sign | 0x7C00;
  if (a >= 65504.0) return sign | 0x7BFF;
  std::uint16_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::uint16_t b = 0; b <= 0x7BFF; ++b) {
    const double err = std::abs(static_cast<double>(table[b]) - a);
    if (err < best_err || (err == best_err && (b & 1) == 0)) {
      best = b;
      best_err = err;
    }
  }
  return sign | best;
}

TEST(Half16Test, Examples) {
  EXPECT_EQ(Half16::FromFloat(1.0f).bits, 0x3C00);
  EXPECT_EQ(Half16::FromFloat(1.0f).ToFloat(), 1.0f);
  EXPECT_EQ(Half16::FromFloat(std::ldexp(1.5f, -24)).bits, 0x0002);  // tie rounds to even
  EXPECT_EQ(Half16::FromFloat(std::ldexp(1.0f, -24)).bits, 0x0001);
  EXPECT_EQ(Half16::FromFloat(1e6f).bits, 0x7BFF);
  EXPECT_EQ(Half16::FromFloat(-1e6f).bits, 0xFBFF);
  EXPECT_EQ(Half16::FromFloat(65519.0f).bits, 0x7BFF);
  EXPECT_EQ(Half16::FromFloat(65520.0f).bits, 0x7BFF);
  EXPECT_EQ(Half16::FromFloat(std::numeric_limits<float>::infinity()).bits, 0x7C00);
  EXPECT_TRUE(std::isnan(Half16::FromFloat(std::nanf("")).ToFloat()));
  EXPECT_EQ(Half16::FromFloat(-0.0f).bits, 0x8000);
}

TEST(Half16Test, ExhaustiveRoundTripOfFiniteHalves) {
  int finite = 0;
  for (std::uint32_t b = 0; b <= 0xFFFF; ++b) {
    const Half16 h{static_cast<std::uint16_t>(b)};
    if ((b & 0x7C00) == 0x7C00) continue;
    ++finite;
    EXPECT_EQ(Half16::FromFloat(h.ToFloat()).bits, b);
  }
  EXPECT_EQ(finite, 63488);
}

TEST(Half16Test, MatchesNearestOracle) {
  std::vector<float> table(0x7C00);
  for (std::uint16_t b = 0; b < 0x7C00; ++b) table[b] = Half16{b}.ToFloat();
  // Midpoints between neighbours, values just either side, and random floats.
  std::vector<float> probes;
  for (std::uint16_t b = 0; b + 1 < 0x7C00; b += 37) {
    const float mid = static_cast<float>((static_cast<double>(table[b]) + table[b + 1]) / 2);
    probes.push_back(mid);
    probes.push_back(std::nextafter(mid, 0.0f));
    probes.push_back(std::nextafter(mid, 1e9f));
  }
  std::mt19937 gen(5);
  for (int i = 0; i < 300; ++i) {
    probes.push_back(std::ldexp(std::uniform_real_distribution<float>(1, 2)(gen),
                                static_cast<int>(gen() % 44) - 28));
  }
  for (float p : probes) {
    for (float f : {p, -p}) {
      EXPECT_EQ(Half16::FromFloat(f).bits, NearestHalfOracle(f, table)) << f;
    }
  }
}

TEST(Half16Test, QuantizationErrorWithinHalfUlp) {
  std::mt19937 gen(6);
  for (int i = 0; i < 10000; ++i) {
    const float f = std::ldexp(std::uniform_real_distribution<float>(1, 2)(gen),
                               static_cast<int>(gen() % 30) - 14);
    const float q = Half16::FromFloat(f).ToFloat();
    int e = 0;
    std::frexp(f, &e);
    const double ulp = std::ldexp(1.0, e - 1 - 10);
    EXPECT_LE(std::abs(static_cast<double>(q) - f), ulp / 2);
  }
}

TEST(Half16Test, VectorHelpers) {
  const std::vector<float> v = {0.5f, -2.0f, 3.140625f};
  EXPECT_EQ(DequantizeFp16(QuantizeFp16(v)), v);
  std::vector<float> r = {0.1f};
  RoundTripFp16(r);
  EXPECT_EQ(r[0], Half16::FromFloat(0.1f).ToFloat());
}

}  // namespace
}  // namespace yasgd::optim

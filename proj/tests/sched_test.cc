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

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support/traces.h"
#include "yasgd/model/params.h"
#include "yasgd/sched/bucket_plan.h"
#include "yasgd/sched/group_scheduler.h"
#include "yasgd/sched/trace.h"

namespace yasgd::sched {
namespace {

constexpr std::size_t kMiB = std::size_t{1} << 20;

std::vector<GradSegment> Segs(std::vector<std::size_t> mib) {
  std::vector<GradSegment> out;
  for (std::size_t i = 0; i < mib.size(); ++i) out.push_back({static_cast<int>(i), mib[i] * kMiB});
  return out;
}

std::vector<std::vector<int>> Members(const BucketPlan& p) {
  std::vector<std::vector<int>> out;
  for (const auto& g : p.groups) out.push_back(g.members);
  return out;
}

TEST(MakeBucketsTest, GreedyExamples) {
  auto segs = Segs({1, 1, 1, 5});
  EXPECT_EQ(Members(MakeBuckets(segs, 4 * kMiB)), (std::vector<std::vector<int>>{{0, 1, 2, 3}}));
  segs = Segs({5, 1});
  EXPECT_EQ(Members(MakeBuckets(segs, 4 * kMiB)), (std::vector<std::vector<int>>{{0}, {1}}));
  segs = Segs({1, 2, 3});
  EXPECT_EQ(Members(MakeBuckets(segs, 100 * kMiB)), (std::vector<std::vector<int>>{{0, 1, 2}}));
  EXPECT_EQ(Members(MakeBuckets(segs, kUnboundedBucketBytes)),
            (std::vector<std::vector<int>>{{0, 1, 2}}));
}

TEST(MakeBucketsTest, Errors) {
  std::vector<GradSegment> none;
  EXPECT_THROW(MakeBuckets(none, kMiB), std::invalid_argument);
  auto segs = Segs({1});
  EXPECT_THROW(MakeBuckets(segs, 0), std::invalid_argument);
}

TEST(MakeBucketsTest, CoverageAndThresholdProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GradSegment> segs;
    const int n = 1 + static_cast<int>(rng() % 30);
    std::size_t total = 0;
    for (int i = 0; i < n; ++i) {
      segs.push_back({n - 1 - i, 1 + rng() % 100000});
      total += segs.back().bytes;
    }
    for (std::size_t th : {std::size_t{1}, std::size_t{65536}, std::size_t{300000}, kUnboundedBucketBytes}) {
      const auto plan = MakeBuckets(segs, th);
      EXPECT_EQ(plan.total_bytes(), total);
      EXPECT_EQ(plan.num_segments(), segs.size());
      std::size_t k = 0;
      for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        EXPECT_EQ(plan.groups[g].id, static_cast<int>(g));
        for (int m : plan.groups[g].members) EXPECT_EQ(m, segs[k++].id);
        if (g + 1 < plan.groups.size()) {
          EXPECT_GE(plan.groups[g].bytes, th);
        }
      }
      EXPECT_EQ(MakeBuckets(segs, th).groups.size(), plan.groups.size());  // deterministic
    }
  }
}

TEST(MakeBucketsTest, LayoutPlanFollowsBackwardOrder) {
  const auto layout = model::ParamLayout::ForSpec(model::ModelSpec::Mlp({32, 64, 64, 10}, true));
  const auto plan = MakeBuckets(layout, kUnboundedBucketBytes);
  ASSERT_EQ(plan.groups.size(), 1u);
  EXPECT_EQ(plan.groups[0].members, layout.BackwardOrder());
  EXPECT_EQ(plan.total_bytes(), layout.total_size() * 4);
  EXPECT_EQ(MakeBuckets(layout, 1).groups.size(), layout.num_segments());
  EXPECT_EQ(MakeBuckets(layout, 1, 2).total_bytes(), layout.total_size() * 2);
}

TEST(ParseByteSizeTest, Units) {
  EXPECT_EQ(ParseByteSize("65536"), 65536u);
  EXPECT_EQ(ParseByteSize("64KiB"), 65536u);
  EXPECT_EQ(ParseByteSize("4MiB"), 4 * kMiB);
  EXPECT_EQ(ParseByteSize("1GiB"), 1024 * kMiB);
  EXPECT_EQ(ParseByteSize("inf"), kUnboundedBucketBytes);
  EXPECT_THROW(ParseByteSize("4MB"), std::invalid_argument);
  EXPECT_THROW(ParseByteSize("x"), std::invalid_argument);
}

BucketPlan TwoGroupPlan() {
  BucketPlan p;
  p.groups = {{0, {2, 1}, 200}, {1, {0}, 100}};
  return p;
}

TEST(GroupSchedulerTest, LaunchesGroupBeforeLaterSegments) {
  GroupScheduler s(TwoGroupPlan());
  auto u = s.OnBackwardDone(2);
  EXPECT_TRUE(u.ready.empty());
  EXPECT_TRUE(u.launch.empty());
  u = s.OnBackwardDone(1);
  EXPECT_EQ(u.ready, std::vector<int>{0});
  EXPECT_EQ(u.launch, std::vector<int>{0});
  EXPECT_FALSE(s.all_launched());
  u = s.OnBackwardDone(0);
  EXPECT_EQ(u.launch, std::vector<int>{1});
  EXPECT_TRUE(s.all_launched());
}

TEST(GroupSchedulerTest, DefersOutOfOrderReadiness) {
  GroupScheduler s(TwoGroupPlan());
  auto u = s.OnBackwardDone(0);
  EXPECT_EQ(u.ready, std::vector<int>{1});
  EXPECT_TRUE(u.launch.empty());
  s.OnBackwardDone(2);
  u = s.OnBackwardDone(1);
  EXPECT_EQ(u.launch, (std::vector<int>{0, 1}));
}

TEST(GroupSchedulerTest, RejectsUnknownAndDuplicateSegments) {
  GroupScheduler s(TwoGroupPlan());
  EXPECT_THROW(s.OnBackwardDone(7), std::invalid_argument);
  EXPECT_THROW(s.OnBackwardDone(-1), std::invalid_argument);
  s.OnBackwardDone(2);
  EXPECT_THROW(s.OnBackwardDone(2), std::invalid_argument);
  s.Reset();
  EXPECT_NO_THROW(s.OnBackwardDone(2));
}

TEST(GroupSchedulerTest, MarkGroupReady) {
  GroupScheduler s(TwoGroupPlan());
  EXPECT_TRUE(s.MarkGroupReady(1).launch.empty());
  EXPECT_EQ(s.MarkGroupReady(0).launch, (std::vector<int>{0, 1}));
  EXPECT_THROW(s.MarkGroupReady(0), std::invalid_argument);
  EXPECT_THROW(s.MarkGroupReady(2), std::invalid_argument);
}

TEST(GroupSchedulerTest, RejectsPlanWithRepeatedSegment) {
  BucketPlan p;
  p.groups = {{0, {1, 0}, 2}, {1, {0}, 1}};
  EXPECT_THROW(GroupScheduler{p}, std::invalid_argument);
}

TEST(TraceTest, FormatRoundTrip) {
  const TraceEvent e{123456789, EventKind::kAllreduceStart, 42, 3, 4096};
  EXPECT_EQ(FormatEvent(e), "123456789 allreduce_start iter=42 id=3 bytes=4096");
  const auto back = ParseEvent(FormatEvent(e));
  EXPECT_EQ(back.t_ns, e.t_ns);
  EXPECT_EQ(back.kind, e.kind);
  EXPECT_EQ(back.iteration, e.iteration);
  EXPECT_EQ(back.id, e.id);
  EXPECT_EQ(back.bytes, e.bytes);

  const auto trace = testing::SoundTrace(TwoGroupPlan());
  std::stringstream ss;
  WriteTrace(ss, trace);
  const auto read = ReadTrace(ss);
  ASSERT_EQ(read.size(), trace.size());
  for (std::size_t i = 0; i < read.size(); ++i) EXPECT_EQ(FormatEvent(read[i]), FormatEvent(trace[i]));
}

TEST(TraceTest, ParseErrors) {
  EXPECT_THROW(ParseEvent("12 nonsense iter=0 id=0 bytes=0"), std::invalid_argument);
  EXPECT_THROW(ParseEvent("12 step_applied iter=0"), std::invalid_argument);
  EXPECT_THROW(ParseEvent("12 step_applied iter=x id=0 bytes=0"), std::invalid_argument);
}

TEST(TraceTest, RecorderTimestampsNondecreasing) {
  TraceRecorder r;
  for (int i = 0; i < 100; ++i) r.Record(EventKind::kBackwardDone, 0, i);
  const auto ev = r.events();
  ASSERT_EQ(ev.size(), 100u);
  for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_LE(ev[i - 1].t_ns, ev[i].t_ns);
  r.Clear();
  EXPECT_TRUE(r.events().empty());
}

bool HasRule(const std::vector<Violation>& v, char rule) {
  for (const auto& x : v) {
    if (x.rule == rule) return true;
  }
  return false;
}

const std::vector<std::size_t> kTwoGroupBytes = {100, 100, 100};

TEST(ValidateTraceTest, AcceptsSoundTrace) {
  auto trace = testing::SoundTrace(TwoGroupPlan(), 0);
  const auto second = testing::SoundTrace(TwoGroupPlan(), 1);
  for (auto e : second) {
    e.t_ns += trace.back().t_ns;
    trace.push_back(e);
  }
  const auto v = ValidateTrace(trace, TwoGroupPlan(), kTwoGroupBytes);
  EXPECT_TRUE(v.empty()) << FormatViolations(v);
}

TEST(ValidateTraceTest, RejectsStartBeforeBackward) {
  const auto v = ValidateTrace(testing::StartBeforeBackward(TwoGroupPlan()), TwoGroupPlan(), kTwoGroupBytes);
  EXPECT_TRUE(HasRule(v, 'a')) << FormatViolations(v);
}

TEST(ValidateTraceTest, RejectsOutOfOrderLaunch) {
  const auto plan = TwoGroupPlan();
  std::vector<TraceEvent> ev = {
      {1, EventKind::kBackwardDone, 0, 2, 0},   {2, EventKind::kBackwardDone, 0, 1, 0},
      {3, EventKind::kBackwardDone, 0, 0, 0},   {4, EventKind::kAllreduceStart, 0, 1, 100},
      {5, EventKind::kAllreduceStart, 0, 0, 200}, {6, EventKind::kAllreduceEnd, 0, 1, 100},
      {7, EventKind::kAllreduceEnd, 0, 0, 200}, {8, EventKind::kStepApplied, 0, -1, 0}};
  const auto v = ValidateTrace(ev, plan, kTwoGroupBytes);
  EXPECT_TRUE(HasRule(v, 'b')) << FormatViolations(v);
}

TEST(ValidateTraceTest, RejectsStepBeforeEnd) {
  const auto v = ValidateTrace(testing::StepBeforeEnd(TwoGroupPlan()), TwoGroupPlan(), kTwoGroupBytes);
  EXPECT_TRUE(HasRule(v, 'c')) << FormatViolations(v);
}

TEST(ValidateTraceTest, RejectsSegmentInTwoGroups) {
  const auto bad = testing::DuplicateSegmentPlan(TwoGroupPlan(), kTwoGroupBytes);
  const auto v = ValidateTrace(testing::SoundTrace(bad), bad, kTwoGroupBytes);
  EXPECT_TRUE(HasRule(v, 'd')) << FormatViolations(v);
}

TEST(ValidateTraceTest, RejectsMissingGroupAndDecreasingTime) {
  auto ev = testing::SoundTrace(TwoGroupPlan());
  std::erase_if(ev, [](const TraceEvent& e) {
    return e.id == 1 && (e.kind == EventKind::kAllreduceStart || e.kind == EventKind::kAllreduceEnd);
  });
  auto v = ValidateTrace(ev, TwoGroupPlan(), kTwoGroupBytes);
  EXPECT_TRUE(HasRule(v, 'd'));
  EXPECT_TRUE(HasRule(v, 'c'));

  ev = testing::SoundTrace(TwoGroupPlan());
  ev[3].t_ns = 0;
  v = ValidateTrace(ev, TwoGroupPlan(), kTwoGroupBytes);
  EXPECT_TRUE(HasRule(v, 't'));
  EXPECT_FALSE(ValidateTrace({}, TwoGroupPlan(), kTwoGroupBytes).empty());
}

}  // namespace
}  // namespace yasgd::sched

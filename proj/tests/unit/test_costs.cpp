// Copyright 2026 The lordo Authors. All Rights Reserved.
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
// =============================================================================

#include <gtest/gtest.h>

#include "lordo/costs.hpp"

namespace lordo::costs {
namespace {

CostInputs big(std::uint64_t k = 32) {
  return {.p = 2048, .q = 2048, .r = 256, .kx = k, .ku = k, .kv = k};
}

TEST(Payload, DdpBaseline) {
  const auto c = baseline_payload(Baseline::kDdp, big());
  EXPECT_EQ(c.uplink_total(), 2048u * 2048u);
  EXPECT_EQ(c.downlink_total(), 2048u * 2048u);
}

TEST(Payload, LocalAdamBaseline) {
  const auto c = baseline_payload(Baseline::kLocalAdam, big());
  EXPECT_EQ(c.uplink_total(), 3u * 2048u * 2048u);
  EXPECT_EQ(c.downlink_total(), 3u * 2048u * 2048u);
}

TEST(Payload, GlobalFullRankDownlink) {
  const auto c = per_payload(ProjectionStrategy::kGlobal, QhmMode::kFullRank, big());
  EXPECT_EQ(c.downlink_total(), 2048u * 2048u + 2048u * 256u + 2u * 256u * 2048u);
  EXPECT_EQ(c.uplink_total(), 2048u * 2048u + 2u * 256u * 2048u);
}

TEST(Payload, TableRows) {
  const std::uint64_t p = 96, q = 80, r = 8;
  const CostInputs in{.p = p, .q = q, .r = r};
  for (auto m : {QhmMode::kNone, QhmMode::kLowRank}) {
    auto g = per_payload(ProjectionStrategy::kGlobal, m, in);
    EXPECT_EQ(g.uplink_total(), 3 * r * q);
    EXPECT_EQ(g.downlink_total(), p * r + 3 * r * q);
    auto l = per_payload(ProjectionStrategy::kLocal, m, in);
    EXPECT_EQ(l.uplink_total(), p * r + 3 * r * q);
    EXPECT_EQ(l.downlink_total(), p * q + 2 * r * q);
    auto f = per_payload(ProjectionStrategy::kFixed, m, in);
    EXPECT_EQ(f.uplink_total(), 3 * r * q);
    EXPECT_EQ(f.downlink_total(), 3 * r * q);
  }
  auto l = per_payload(ProjectionStrategy::kLocal, QhmMode::kFullRank, in);
  EXPECT_EQ(l.uplink_total(), p * q + 2 * r * q);
  EXPECT_EQ(l.downlink_total(), p * q + 2 * r * q);
}

TEST(Payload, NoCompressionMatchesFullRankRow) {
  const CostInputs in{.p = 64, .q = 64, .r = 64};
  EXPECT_EQ(per_payload(ProjectionStrategy::kGlobal, QhmMode::kNone, in).uplink_total(),
            3u * 64u * 64u);
}

TEST(Payload, InvalidInputs) {
  EXPECT_THROW(per_payload(ProjectionStrategy::kGlobal, QhmMode::kNone, {.p = 4, .q = 4, .r = 5}),
               std::invalid_argument);
  EXPECT_THROW(per_payload(ProjectionStrategy::kGlobal, QhmMode::kNone,
                           {.p = 4, .q = 4, .r = 2, .kx = 0}),
               std::invalid_argument);
}

TEST(Ratios, HeadlineValues) {
  EXPECT_NEAR(reduction_vs_lowrank_ddp(big()), 10.24, 0.01);
  EXPECT_NEAR(reduction_vs_fullrank_ddp(big()), 23.27, 0.01);
  EXPECT_NEAR(reduction_vs_fullrank_local(big(), ProjectionStrategy::kGlobal), 2.18, 0.005);
  EXPECT_NEAR(reduction_vs_fullrank_local(big(), ProjectionStrategy::kLocal),
              3.0 * 2048 / (2048 + 512), 1e-12);
  EXPECT_DOUBLE_EQ(optimizer_state_ratio(big()), 8.0);
  EXPECT_DOUBLE_EQ(optimizer_state_ratio({.p = 768, .q = 768, .r = 64}), 12.0);
}

TEST(Ratios, PerStepSyncWithoutCompression) {
  const CostInputs in{.p = 64, .q = 64, .r = 64};
  EXPECT_DOUBLE_EQ(reduction_vs_lowrank_ddp(in), 0.25);
  EXPECT_DOUBLE_EQ(reduction_vs_fullrank_ddp(in), 0.25);
}

TEST(Ratios, ZeroRankLimit) {
  EXPECT_DOUBLE_EQ(reduction_vs_fullrank_local({.p = 64, .q = 64, .r = 0},
                                               ProjectionStrategy::kGlobal), 3.0);
}

TEST(Ratios, Monotonicity) {
  double prev = 0.0;
  for (std::uint64_t k : {1, 2, 4, 8, 16, 32, 64, 1024}) {
    const double v = reduction_vs_lowrank_ddp(big(k));
    EXPECT_GT(v, prev);
    prev = v;
  }
  auto half = big();
  half.r = 128;
  EXPECT_GT(reduction_vs_fullrank_ddp(half), reduction_vs_fullrank_ddp(big()));
}

// Every ratio exceeds one once K > 3 + r/q and r < 2pq / (p + 2q). Outside
// that region the DDP ratios or the Global local-Adam ratio can fall under one
// even with r < p.
TEST(RatiosProperty, AboveOneWhenCompressedAndInfrequent) {
  for (std::uint64_t r : {1, 4, 16, 42})
    for (std::uint64_t k : {4, 8, 32}) {
      const CostInputs in{.p = 64, .q = 64, .r = r, .kx = k, .ku = k, .kv = k};
      EXPECT_GT(reduction_vs_lowrank_ddp(in), 1.0);
      EXPECT_GT(reduction_vs_fullrank_ddp(in), 1.0);
      EXPECT_GT(reduction_vs_fullrank_local(in, ProjectionStrategy::kGlobal), 1.0);
      EXPECT_GT(reduction_vs_fullrank_local(in, ProjectionStrategy::kLocal), 1.0);
      EXPECT_GT(optimizer_state_ratio(in), 1.0);
    }
}

TEST(RatiosProperty, WideGlobalBasisCanLoseToLocalAdam) {
  const CostInputs in{.p = 64, .q = 64, .r = 63, .kx = 32, .ku = 32, .kv = 32};
  EXPECT_NEAR(reduction_vs_fullrank_local(in, ProjectionStrategy::kGlobal),
              3.0 * 4096 / (4096 + 4032 + 8064), 1e-15);
  EXPECT_LT(reduction_vs_fullrank_local(in, ProjectionStrategy::kGlobal), 1.0);
  EXPECT_GT(reduction_vs_fullrank_local(in, ProjectionStrategy::kLocal), 1.0);
}

TEST(RatiosProperty, ShortPeriodsCanLoseToDdp) {
  const CostInputs in{.p = 64, .q = 64, .r = 63, .kx = 2, .ku = 2, .kv = 2};
  EXPECT_LT(reduction_vs_lowrank_ddp(in), 1.0);
  EXPECT_LT(reduction_vs_fullrank_ddp(in), 1.0);
}

TEST(Memory, TableRows) {
  EXPECT_EQ(adam_memory_overhead(big()), 3u * 2048u * 2048u);
  const std::uint64_t p = 2048, q = 2048, r = 256;
  const auto m = memory_overhead(ProjectionStrategy::kGlobal, QhmMode::kNone,
                                 ErrorFeedbackLayout::kSeparateBuffer, true, big());
  EXPECT_EQ(m.elements, p * q + p * r + 4 * r * q);
  EXPECT_TRUE(m.gradient_accumulation_compatible);
  const auto full = memory_overhead(ProjectionStrategy::kGlobal, QhmMode::kFullRank,
                                    ErrorFeedbackLayout::kInGradient, false, big());
  EXPECT_EQ(full.elements, p * q + p * r + 3 * r * q);
  EXPECT_FALSE(full.gradient_accumulation_compatible);
  EXPECT_THROW(memory_overhead(ProjectionStrategy::kGlobal, QhmMode::kFullRank,
                               ErrorFeedbackLayout::kSeparateBuffer, true, big()),
               std::invalid_argument);
}

TEST(Memory, NoCompressionExceedsAdam) {
  const CostInputs in{.p = 64, .q = 64, .r = 64};
  const auto m = memory_overhead(ProjectionStrategy::kGlobal, QhmMode::kNone,
                                 ErrorFeedbackLayout::kSeparateBuffer, false, in);
  EXPECT_EQ(m.elements, 5u * 64u * 64u);
  EXPECT_GT(m.elements, adam_memory_overhead(in));
}

TEST(RunTotals, FloorsPerSchedule) {
  const CostInputs in{.p = 10, .q = 6, .r = 2, .kx = 4, .ku = 3, .kv = 5};
  const auto pc = per_payload(ProjectionStrategy::kGlobal, QhmMode::kNone, in);
  const auto tot = run_totals(pc, in, 20);
  EXPECT_EQ(tot.uplink, 5 * (12 + 0) + 6 * 12 + 4 * 12u);
  EXPECT_EQ(tot.downlink, 5 * (12 + 20) + 6 * 12 + 4 * 12u);
}

}  // namespace
}  // namespace lordo::costs

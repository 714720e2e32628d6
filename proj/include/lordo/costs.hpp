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

#pragma once

#include <cstdint>
#include <string_view>

#include "lordo/optimizer.hpp"
#include "lordo/strategy.hpp"

namespace lordo::costs {

// Element counts use unit constants for every asymptotic term; bytes are
// element counts times element_size. All counts are per link (one worker).
struct CostInputs {
  std::uint64_t p = 0;
  std::uint64_t q = 0;
  std::uint64_t r = 0;
  std::uint64_t kx = 1;
  std::uint64_t ku = 1;
  std::uint64_t kv = 1;
  std::uint64_t workers = 1;
  std::uint64_t element_size = 8;

  void validate() const;
};

struct LinkCost {
  std::uint64_t uplink = 0;
  std::uint64_t downlink = 0;
};

// One sync event of each kind. `params` travels every K_x steps together with
// `projection`; the moments travel every K_u / K_v steps.
struct PayloadCosts {
  LinkCost params;
  LinkCost first_moment;
  LinkCost second_moment;
  LinkCost projection;

  std::uint64_t uplink_total() const;
  std::uint64_t downlink_total() const;
};

enum class Baseline {
  kLocalAdam,  // full-rank local Adam with synchronized states
  kDdp,        // per-step gradient all-reduce
};

PayloadCosts per_payload(ProjectionStrategy strategy, QhmMode mode, const CostInputs& in);
PayloadCosts baseline_payload(Baseline baseline, const CostInputs& in);

// ((1 + r/q)/K_x + 1/K_u + 1/K_v)^-1
double reduction_vs_lowrank_ddp(const CostInputs& in);
// ((1 + r/q)/K_x + r/(K_u p) + r/(K_v p))^-1
double reduction_vs_fullrank_ddp(const CostInputs& in);
// Local: 3pq / (pq + 2rq); Global: 3pq / (pq + pr + 2rq).
double reduction_vs_fullrank_local(const CostInputs& in, ProjectionStrategy strategy);
// p / r
double optimizer_state_ratio(const CostInputs& in);

enum class ErrorFeedbackLayout {
  kSeparateBuffer,
  kInGradient,  // residual kept in the gradient variable
};

struct MemoryOverhead {
  std::uint64_t elements = 0;
  // Storing the residual in the gradient variable clobbers accumulated
  // gradients, so that layout cannot be combined with gradient accumulation.
  bool gradient_accumulation_compatible = true;
};

// Worker-side overhead: projected gradient rq, moments 2rq, basis pr, error
// buffer pq, plus rq when the uplink time buffer is kept. The uplink buffer
// only exists for the decomposable (no / low-rank QHM) variants.
MemoryOverhead memory_overhead(ProjectionStrategy strategy, QhmMode mode,
                               ErrorFeedbackLayout layout, bool uplink_buffer,
                               const CostInputs& in);
// Full-rank Adam: gradient plus two states, 3pq.
std::uint64_t adam_memory_overhead(const CostInputs& in);

// Analytic per-link element totals over `steps` steps:
// floor(T/K_x)(params + projection) + floor(T/K_u) u + floor(T/K_v) v.
LinkCost run_totals(const PayloadCosts& payload, const CostInputs& in, std::uint64_t steps);

}  // namespace lordo::costs

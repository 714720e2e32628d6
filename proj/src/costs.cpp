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

#include "lordo/costs.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lordo::costs {

void CostInputs::validate() const {
  if (p == 0 || q == 0) throw std::invalid_argument("p and q must be >= 1");
  if (r > std::min(p, q))
    throw std::invalid_argument("r = " + std::to_string(r) + " exceeds min(p, q)");
  if (kx == 0 || ku == 0 || kv == 0) throw std::invalid_argument("sync periods must be >= 1");
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
  if (element_size == 0) throw std::invalid_argument("element_size must be >= 1");
}

std::uint64_t PayloadCosts::uplink_total() const {
  return params.uplink + first_moment.uplink + second_moment.uplink + projection.uplink;
}

std::uint64_t PayloadCosts::downlink_total() const {
  return params.downlink + first_moment.downlink + second_moment.downlink + projection.downlink;
}

PayloadCosts per_payload(ProjectionStrategy strategy, QhmMode mode, const CostInputs& in) {
  in.validate();
  const std::uint64_t pq = in.p * in.q;
  const std::uint64_t rq = in.r * in.q;
  const std::uint64_t pr = in.p * in.r;
  // Without the full-rank QHM term the pseudo-gradient factors as Q times an
  // r x q accumulator, so only the accumulator needs to move.
  const bool decomposable = mode != QhmMode::kFullRank;

  PayloadCosts c;
  c.first_moment = {rq, rq};
  c.second_moment = {rq, rq};
  switch (strategy) {
    case ProjectionStrategy::kGlobal:
      c.params = decomposable ? LinkCost{rq, rq} : LinkCost{pq, pq};
      c.projection = {0, pr};
      break;
    case ProjectionStrategy::kLocal:
      // Each worker ships its own basis with its accumulator; the average of
      // differently-projected updates is dense on the way back.
      c.params = decomposable ? LinkCost{rq, pq} : LinkCost{pq, pq};
      c.projection = {decomposable ? pr : 0, 0};
      break;
    case ProjectionStrategy::kFixed:
      c.params = decomposable ? LinkCost{rq, rq} : LinkCost{pq, pq};
      break;
    default:
      throw std::invalid_argument("per_payload: unknown projection strategy");
  }
  return c;
}

PayloadCosts baseline_payload(Baseline baseline, const CostInputs& in) {
  in.validate();
  const std::uint64_t pq = in.p * in.q;
  PayloadCosts c;
  c.params = {pq, pq};
  if (baseline == Baseline::kLocalAdam) {
    c.first_moment = {pq, pq};
    c.second_moment = {pq, pq};
  }
  return c;
}

double reduction_vs_lowrank_ddp(const CostInputs& in) {
  in.validate();
  const double rq = static_cast<double>(in.r) / static_cast<double>(in.q);
  return 1.0 / ((1.0 + rq) / static_cast<double>(in.kx) + 1.0 / static_cast<double>(in.ku) +
                1.0 / static_cast<double>(in.kv));
}

double reduction_vs_fullrank_ddp(const CostInputs& in) {
  in.validate();
  const double r = static_cast<double>(in.r);
  const double p = static_cast<double>(in.p);
  const double q = static_cast<double>(in.q);
  return 1.0 / ((1.0 + r / q) / static_cast<double>(in.kx) +
                r / (static_cast<double>(in.ku) * p) + r / (static_cast<double>(in.kv) * p));
}

double reduction_vs_fullrank_local(const CostInputs& in, ProjectionStrategy strategy) {
  in.validate();
  const double p = static_cast<double>(in.p);
  const double q = static_cast<double>(in.q);
  const double r = static_cast<double>(in.r);
  const double projection = strategy == ProjectionStrategy::kGlobal ? p * r : 0.0;
  return 3.0 * p * q / (p * q + projection + 2.0 * r * q);
}

double optimizer_state_ratio(const CostInputs& in) {
  in.validate();
  if (in.r == 0) throw std::invalid_argument("optimizer_state_ratio: r must be >= 1");
  return static_cast<double>(in.p) / static_cast<double>(in.r);
}

MemoryOverhead memory_overhead(ProjectionStrategy strategy, QhmMode mode,
                               ErrorFeedbackLayout layout, bool uplink_buffer,
                               const CostInputs& in) {
  in.validate();
  (void)strategy;  // the table is identical for every projection strategy
  if (uplink_buffer && mode == QhmMode::kFullRank)
    throw std::invalid_argument(
        "memory_overhead: full-rank QHM pseudo-gradients cannot be buffered in low rank");
  const std::uint64_t pq = in.p * in.q;
  const std::uint64_t rq = in.r * in.q;
  const std::uint64_t pr = in.p * in.r;
  MemoryOverhead out;
  out.elements = pq + pr + 3 * rq + (uplink_buffer ? rq : 0);
  out.gradient_accumulation_compatible = layout == ErrorFeedbackLayout::kSeparateBuffer;
  return out;
}

std::uint64_t adam_memory_overhead(const CostInputs& in) {
  in.validate();
  return 3 * in.p * in.q;
}

LinkCost run_totals(const PayloadCosts& payload, const CostInputs& in, std::uint64_t steps) {
  in.validate();
  const std::uint64_t nx = steps / in.kx;
  const std::uint64_t nu = steps / in.ku;
  const std::uint64_t nv = steps / in.kv;
  LinkCost out;
  out.uplink = nx * (payload.params.uplink + payload.projection.uplink) +
               nu * payload.first_moment.uplink + nv * payload.second_moment.uplink;
  out.downlink = nx * (payload.params.downlink + payload.projection.downlink) +
                 nu * payload.first_moment.downlink + nv * payload.second_moment.downlink;
  return out;
}

}  // namespace lordo::costs

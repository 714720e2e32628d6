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

#include "lordo/matrix.hpp"
#include "lordo/projection.hpp"

namespace lordo {

enum class QhmMode { kNone, kLowRank, kFullRank };

// How the full-rank QHM branch reduces sqrt(v_hat) + eps (r x q) to a scale
// for the p x q gradient.
enum class MuSemantics {
  kPerColumn,  // mean over the r rows, one scale per column
  kScalar,     // mean over every entry
};

std::string_view to_string(QhmMode mode);
std::string_view to_string(MuSemantics mu);

struct HyperParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_radius = 1e6;
  double omega = 1.0;
  MuSemantics mu = MuSemantics::kPerColumn;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Linear warmup over `warmup_steps` optimizer steps, then constant.
struct LrSchedule {
  double peak = 1e-2;
  std::int64_t warmup_steps = 0;

  // Learning rate for the zero-based loop step t.
  double at(std::int64_t t) const;
};

// Per-tensor optimizer state owned by one worker.
struct LowRankOptState {
  Matrix u;      // r x q first moment
  Matrix v;      // r x q second moment, entrywise >= 0
  Matrix error;  // p x q error-feedback buffer
  Projection proj;
  std::int64_t step = 0;  // optimizer steps taken; never reset at sync

  static LowRankOptState create(Projection proj, std::size_t cols);
};

struct Compressed {
  Matrix g;      // r x q low-rank signal
  Matrix error;  // p x q residual left behind by the projection
};

// g = Q^T (G + E), E' = G + E - Q g.
Compressed compress_gradient(const Matrix& grad, const LowRankOptState& state);

// Error feedback disabled: g = Q^T G and the buffer stays zero.
Compressed compress_without_feedback(const Matrix& grad, const LowRankOptState& state);

// u' = b1 u + (1 - b1) g, v' = b2 v + (1 - b2) g o g; advances state.step.
void update_moments(LowRankOptState& state, const Matrix& g, double beta1, double beta2);

// Update direction for the current step (the caller scales by the learning
// rate and subtracts). Uses bias-corrected moments at state.step:
//   kNone:     Q (u_hat / (sqrt(v_hat) + eps))
//   kLowRank:  Q ((w u_hat + (1 - w) g) / (sqrt(v_hat) + eps))
//   kFullRank: (1 - w) G / mu(sqrt(v_hat) + eps) + w Q (u_hat / (sqrt(v_hat) + eps))
Matrix compute_update(const LowRankOptState& state, const Matrix& grad, const Matrix& g,
                      QhmMode mode, const HyperParams& hp);

struct AdamStep {
  Matrix x;
  Matrix u;
  Matrix v;
};

// Textbook full-rank Adam with bias correction; `t` is the 1-based step.
AdamStep adam_reference_step(const Matrix& x, const Matrix& grad, const Matrix& u,
                             const Matrix& v, const HyperParams& hp, std::int64_t t, double lr);

}  // namespace lordo

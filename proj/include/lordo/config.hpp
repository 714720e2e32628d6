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
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lordo/optimizer.hpp"
#include "lordo/problems.hpp"
#include "lordo/strategy.hpp"

namespace lordo {

// Raised for malformed or inconsistent run configurations. The message names
// the offending field using its dotted JSON path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SyncSchedule {
  std::int64_t kx = 32;
  std::int64_t ku = 32;
  std::int64_t kv = 32;

  // Syncs happen at the end of loop step t when (t + 1) mod K == 0.
  bool params_due(std::int64_t t) const { return (t + 1) % kx == 0; }
  bool first_moment_due(std::int64_t t) const { return (t + 1) % ku == 0; }
  bool second_moment_due(std::int64_t t) const { return (t + 1) % kv == 0; }
  // Local projections refresh on the first step of every parameter window.
  bool refresh_due(std::int64_t t) const { return t % kx == 0; }
};

enum class OuterType { kAverage, kNesterov };

struct OuterOpt {
  OuterType type = OuterType::kAverage;
  double lr = 1.0;
  double momentum = 0.0;
};

enum class ProblemType { kMatrixRegression };

struct ProblemConfig {
  ProblemType type = ProblemType::kMatrixRegression;
  std::size_t rows = 4096;
  std::size_t p = 64;
  std::size_t q = 64;
  std::size_t layers = 1;
  double noise_std = 1.0;
  double truth_decay = 1.0;
  double truth_scale = 8.0;
  ShardLayout shards = ShardLayout::kContiguous;
};

struct RunFlags {
  bool rotate_moments = true;
  bool error_feedback = true;
  double sparsify_keep = 1.0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 4;
  std::int64_t steps = 640;
  std::size_t batch_size = 16;
  std::size_t rank = 8;
  SyncSchedule sync;
  ProjectionStrategy projection = ProjectionStrategy::kGlobal;
  QhmMode qhm = QhmMode::kNone;
  HyperParams hp;  // omega and mu live here
  LrSchedule lr;
  OuterOpt outer;
  RunFlags flags;
  ProblemConfig problem;

  // Cross-field validation; throws ConfigError.
  void validate() const;
};

// Strict parse: unknown keys, wrong types and out-of-range values throw
// ConfigError. Absent keys take the defaults above, except qhm.omega which is
// required exactly when qhm.mode is not "none".
RunConfig config_from_json(const nlohmann::json& j);
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

// Fully resolved form; config_from_json(config_to_json(c)) reproduces c.
nlohmann::json config_to_json(const RunConfig& c);

std::string_view to_string(OuterType t);
std::string_view to_string(ShardLayout s);

}  // namespace lordo

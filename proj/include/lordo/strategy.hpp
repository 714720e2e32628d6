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

#include <string_view>

namespace lordo {

// Where the projection basis comes from.
enum class ProjectionStrategy {
  // One basis shared by every worker, recomputed from the aggregated
  // pseudo-gradient at each parameter sync. Starts from a random basis.
  kGlobal,
  // Each worker refreshes its own basis from its gradient plus error buffer
  // at the first local step after a parameter sync. Starts from identity.
  kLocal,
  // Identity basis that is never refreshed (synchronous low-rank baseline
  // and the Adam-degeneracy configuration when r = p).
  kFixed,
};

constexpr std::string_view to_string(ProjectionStrategy s) {
  switch (s) {
    case ProjectionStrategy::kGlobal:
      return "global";
    case ProjectionStrategy::kLocal:
      return "local";
    case ProjectionStrategy::kFixed:
      return "fixed";
  }
  return "unknown";
}

}  // namespace lordo

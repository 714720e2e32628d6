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
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lordo/config.hpp"
#include "lordo/optimizer.hpp"
#include "lordo/problems.hpp"
#include "lordo/projection.hpp"

namespace lordo {

// A projection refit, either the shared basis (worker == -1) or one worker's.
struct ProjectionUpdate {
  std::size_t layer = 0;
  std::int64_t worker = -1;
  SubspaceMetrics metrics;
};

struct StepRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  std::vector<double> worker_loss;  // held-out batch loss before the update
  double mean_loss = 0.0;
  bool synced_params = false;
  bool synced_first_moment = false;
  bool synced_second_moment = false;
  std::optional<double> eval_loss;  // full objective at the synced model
  std::vector<std::size_t> delta_rank;  // per layer, on parameter syncs
  std::vector<ProjectionUpdate> projection_updates;
  std::vector<std::string> warnings;
  std::uint64_t bytes_uplink = 0;  // per link
  std::uint64_t bytes_downlink = 0;
  std::optional<double> wall_seconds;
};

struct Divergence {
  std::int64_t step = 0;
  std::string reason;
};

struct RunSummary {
  std::int64_t steps_completed = 0;
  std::optional<Divergence> divergence;
  std::optional<double> final_loss;
  std::uint64_t total_uplink_bytes = 0;
  std::uint64_t total_downlink_bytes = 0;
};

// Per-step compression trace of one worker and layer, delivered after the
// step's barrier in (worker, layer) order.
struct CompressionTrace {
  std::int64_t step = 0;
  std::size_t worker = 0;
  std::size_t layer = 0;
  Matrix grad;        // clipped gradient
  Matrix error_prev;  // buffer before compression
  Matrix g;           // low-rank signal
  Matrix error_new;   // buffer after compression
  Matrix q;           // basis used for this step
};

struct SimOptions {
  // Worker threads; 0 means one per worker, 1 runs serially.
  std::size_t threads = 0;
  // Stamp wall_seconds on each record. Off by default so logs are byte-stable.
  bool timing = false;
  std::function<void(const CompressionTrace&)> on_compress;
};

struct WorkerState {
  std::size_t id = 0;
  std::vector<Matrix> params;
  std::vector<LowRankOptState> opt;
  Rng rng{0};
};

class Simulator {
 public:
  Simulator(RunConfig config, std::shared_ptr<const Objective> objective, SimOptions options = {});

  // Runs the remaining steps, emitting one record per completed step. Stops
  // early on divergence; the summary then carries the reason.
  // `max_steps` >= 0 limits how many further steps this call executes.
  RunSummary run(const std::function<void(const StepRecord&)>& sink,
                 std::int64_t max_steps = -1);
  std::int64_t next_step() const { return next_step_; }

  const RunConfig& config() const { return config_; }
  const std::vector<WorkerState>& workers() const { return workers_; }
  const std::vector<Matrix>& anchor() const { return anchor_; }
  // Projections handed out at construction, per layer (shared for Global and
  // Fixed, identical identity starts for Local).
  const std::vector<Projection>& initial_projections() const { return initial_; }

 private:
  struct WorkerStep;
  WorkerStep local_step(WorkerState& w, std::int64_t t, double lr) const;
  void sync(std::int64_t t, StepRecord& rec);

  RunConfig config_;
  std::shared_ptr<const Objective> objective_;
  SimOptions options_;
  std::vector<WorkerState> workers_;
  std::vector<Matrix> anchor_;
  std::vector<Matrix> velocity_;  // Nesterov outer momentum
  std::vector<Projection> initial_;
  std::int64_t next_step_ = 0;
};

// Seeds of the independent random streams. Each worker draws its training
// batch and then its held-out batch from its own stream every step.
std::uint64_t problem_seed(std::uint64_t master);
std::uint64_t projection_seed(std::uint64_t master, std::size_t layer);
std::uint64_t worker_seed(std::uint64_t master, std::size_t worker);

std::shared_ptr<const Objective> make_objective(const RunConfig& config);

// Builds the problem from the config and runs it.
RunSummary run_experiment(const RunConfig& config,
                          const std::function<void(const StepRecord&)>& sink,
                          SimOptions options = {});

// Keeps the ceil(keep * size) largest-magnitude entries; ties go to the lower
// linear index.
Matrix sparsify_topk(const Matrix& delta, double keep_fraction);

// Entrywise mean of equally shaped matrices.
Matrix mean_of(std::span<const Matrix> items);

enum class Moment { kFirst, kSecond };

// Replaces the chosen moment of every worker, layer by layer, with the
// cross-worker mean.
void sync_moment(std::span<WorkerState> workers, Moment which);

struct ParamSync {
  Matrix model;  // new global model
  Matrix delta;  // aggregated pseudo-gradient, mean of (sparsified) x^m - anchor
};

// One layer's parameter synchronization.
ParamSync sync_params(std::span<const Matrix> worker_params, const Matrix& anchor,
                      const OuterOpt& outer, double sparsify_keep, Matrix& velocity);

// Outer step on the aggregated pseudo-gradient delta.
//   Average:  x = anchor + delta
//   Nesterov: g = -delta; w = mu w + g; x = anchor - lr (g + mu w)
Matrix outer_step(const OuterOpt& outer, const Matrix& anchor, const Matrix& delta,
                  Matrix& velocity);

// Replaces the state's basis and, when `rotate` is set and moments exist,
// re-expresses both moments in the new basis.
void install_projection(LowRankOptState& state, Projection next, const HyperParams& hp,
                        bool rotate);

// Refits a worker's basis from clipped gradient plus its error buffer. Returns
// the metrics on success, nullopt when the signal is degenerate (basis kept).
std::optional<SubspaceMetrics> local_projection_refresh(LowRankOptState& state,
                                                        const Matrix& grad,
                                                        std::size_t rank, std::int64_t step,
                                                        const HyperParams& hp, bool rotate);

}  // namespace lordo

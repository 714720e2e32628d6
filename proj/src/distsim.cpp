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

#include "lordo/distsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "lordo/costs.hpp"
#include "lordo/linalg.hpp"

namespace lordo {
namespace {

// Seed streams derived from the master seed.
constexpr std::uint64_t kProblemStream = 1;
constexpr std::uint64_t kProjectionStream = 2;
constexpr std::uint64_t kWorkerStreamBase = 1ULL << 32;
constexpr std::uint64_t kElementBytes = 8;

bool finite(const Matrix& m) { return m.all_finite(); }

}  // namespace

std::uint64_t problem_seed(std::uint64_t master) { return derive_seed(master, kProblemStream); }

std::uint64_t projection_seed(std::uint64_t master, std::size_t layer) {
  return derive_seed(master, kProjectionStream + (static_cast<std::uint64_t>(layer) << 8));
}

std::uint64_t worker_seed(std::uint64_t master, std::size_t worker) {
  return derive_seed(master, kWorkerStreamBase + worker);
}

struct Simulator::WorkerStep {
  double loss = 0.0;
  std::optional<std::string> diverged;
  std::vector<CompressionTrace> traces;
  std::vector<ProjectionUpdate> updates;
  std::vector<std::string> warnings;
};

Matrix sparsify_topk(const Matrix& delta, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    throw std::invalid_argument("sparsify_topk: keep_fraction must be in (0, 1]");
  const std::size_t n = delta.size();
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n))), 1, n);
  if (keep == n) return delta;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& d = delta.data();
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep - 1),
                   order.end(), [&](std::size_t a, std::size_t b) {
                     const double ma = std::abs(d[a]);
                     const double mb = std::abs(d[b]);
                     return ma != mb ? ma > mb : a < b;
                   });
  Matrix out(delta.rows(), delta.cols());
  for (std::size_t i = 0; i < keep; ++i) out.data()[order[i]] = d[order[i]];
  return out;
}

Matrix mean_of(std::span<const Matrix> items) {
  if (items.empty()) throw std::invalid_argument("mean_of: no items");
  Matrix sum = items.front();
  for (std::size_t i = 1; i < items.size(); ++i) sum += items[i];
  if (items.size() > 1) sum *= 1.0 / static_cast<double>(items.size());
  return sum;
}

Matrix outer_step(const OuterOpt& outer, const Matrix& anchor, const Matrix& delta,
                  Matrix& velocity) {
  require_same_shape(anchor, delta, "outer_step");
  if (outer.type == OuterType::kAverage) return anchor + delta;
  require_same_shape(anchor, velocity, "outer_step velocity");
  const Matrix g = -1.0 * delta;
  velocity *= outer.momentum;
  velocity += g;
  return anchor - outer.lr * (g + outer.momentum * velocity);
}

void sync_moment(std::span<WorkerState> workers, Moment which) {
  if (workers.empty()) return;
  Matrix LowRankOptState::*field = which == Moment::kFirst ? &LowRankOptState::u : &LowRankOptState::v;
  std::vector<Matrix> items(workers.size());
  for (std::size_t l = 0; l < workers.front().opt.size(); ++l) {
    for (std::size_t m = 0; m < workers.size(); ++m) items[m] = workers[m].opt.at(l).*field;
    const Matrix mean = mean_of(items);
    for (auto& w : workers) w.opt[l].*field = mean;
  }
}

ParamSync sync_params(std::span<const Matrix> worker_params, const Matrix& anchor,
                      const OuterOpt& outer, double sparsify_keep, Matrix& velocity) {
  std::vector<Matrix> deltas;
  deltas.reserve(worker_params.size());
  for (const Matrix& x : worker_params) {
    deltas.push_back(x - anchor);
    if (sparsify_keep < 1.0) deltas.back() = sparsify_topk(deltas.back(), sparsify_keep);
  }
  ParamSync out;
  out.delta = mean_of(deltas);
  if (outer.type == OuterType::kAverage && sparsify_keep == 1.0) {
    // Equal to anchor + delta, without the round trip through the anchor.
    out.model = mean_of(worker_params);
  } else {
    out.model = outer_step(outer, anchor, out.delta, velocity);
  }
  return out;
}

void install_projection(LowRankOptState& state, Projection next, const HyperParams& hp,
                        bool rotate) {
  if (rotate && state.step > 0) {
    const Matrix r = rotation_matrix(next, state.proj);
    Matrix v = rotate_second_moment(r, state.u, state.v, hp.beta1, hp.beta2, state.step);
    state.u = rotate_first_moment(r, state.u);
    state.v = std::move(v);
  }
  state.proj = std::move(next);
}

std::optional<SubspaceMetrics> local_projection_refresh(LowRankOptState& state,
                                                        const Matrix& grad,
                                                        std::size_t rank, std::int64_t step,
                                                        const HyperParams& hp, bool rotate) {
  ProjectionFit fit;
  try {
    fit = fit_projection(grad + state.error, rank, step,
                         ProjectionSource::kLocalGradientWithEF);
  } catch (const DegenerateSignalError&) {
    return std::nullopt;
  }
  const SubspaceMetrics metrics = subspace_metrics(fit, state.proj);
  install_projection(state, std::move(fit.projection), hp, rotate);
  return metrics;
}

std::shared_ptr<const Objective> make_objective(const RunConfig& config) {
  config.validate();
  RegressionSpec spec;
  spec.rows = config.problem.rows;
  spec.p = config.problem.p;
  spec.q = config.problem.q;
  spec.workers = config.workers;
  spec.noise_std = config.problem.noise_std;
  spec.truth_decay = config.problem.truth_decay;
  spec.truth_scale = config.problem.truth_scale;
  spec.layout = config.problem.shards;
  return RegressionObjective::generate(spec, config.problem.layers,
                                       problem_seed(config.seed));
}

Simulator::Simulator(RunConfig config, std::shared_ptr<const Objective> objective,
                     SimOptions options)
    : config_(std::move(config)), objective_(std::move(objective)), options_(std::move(options)) {
  config_.validate();
  if (!objective_) throw std::invalid_argument("Simulator: null objective");
  if (objective_->num_workers() != config_.workers)
    throw ConfigError("workers: objective has " + std::to_string(objective_->num_workers()) +
                      " shards but config asks for " + std::to_string(config_.workers));
  const std::size_t layers = objective_->num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t p = objective_->layer_rows(l);
    if (config_.rank > std::min(p, objective_->layer_cols(l)))
      throw ConfigError("rank: exceeds the dimensions of layer " + std::to_string(l));
    if (config_.projection == ProjectionStrategy::kGlobal) {
      Rng rng(projection_seed(config_.seed, l));
      initial_.push_back(random_projection(p, config_.rank, rng));
    } else {
      initial_.push_back(identity_projection(p, config_.rank));
    }
  }

  anchor_ = objective_->zero_params();
  for (const auto& a : anchor_) velocity_.emplace_back(a.rows(), a.cols());
  for (std::size_t m = 0; m < config_.workers; ++m) {
    WorkerState w;
    w.id = m;
    w.params = anchor_;
    for (std::size_t l = 0; l < layers; ++l)
      w.opt.push_back(LowRankOptState::create(initial_[l], objective_->layer_cols(l)));
    w.rng = Rng(worker_seed(config_.seed, m));
    workers_.push_back(std::move(w));
  }
}

Simulator::WorkerStep Simulator::local_step(WorkerState& w, std::int64_t t, double lr) const {
  WorkerStep out;
  const Batch train = objective_->sample_batch(w.id, config_.batch_size, w.rng);
  const Batch held_out = objective_->sample_batch(w.id, config_.batch_size, w.rng);
  try {
    out.loss = objective_->loss(w.params, held_out);
    if (!std::isfinite(out.loss)) {
      out.diverged = "non-finite loss on worker " + std::to_string(w.id);
      return out;
    }
    std::vector<Matrix> grads = objective_->gradient(w.params, train);
    const bool refresh =
        config_.projection == ProjectionStrategy::kLocal && config_.sync.refresh_due(t);
    for (std::size_t l = 0; l < grads.size(); ++l) {
      if (!finite(grads[l])) {
        out.diverged = "non-finite gradient on worker " + std::to_string(w.id) + ", layer " +
                       std::to_string(l);
        return out;
      }
      const Matrix grad = clip_frobenius(grads[l], config_.hp.clip_radius);
      LowRankOptState& st = w.opt[l];

      if (refresh) {
        auto metrics = local_projection_refresh(st, grad, config_.rank, t, config_.hp,
                                                config_.flags.rotate_moments);
        if (metrics) {
          out.updates.push_back({l, static_cast<std::int64_t>(w.id), *metrics});
        } else {
          out.warnings.push_back("degenerate signal: worker " + std::to_string(w.id) +
                                 ", layer " + std::to_string(l) + " kept its stale projection");
        }
      }

      Compressed c = config_.flags.error_feedback ? compress_gradient(grad, st)
                                                  : compress_without_feedback(grad, st);
      if (options_.on_compress)
        out.traces.push_back({t, w.id, l, grad, st.error, c.g, c.error, st.proj.Q});
      st.error = std::move(c.error);
      update_moments(st, c.g, config_.hp.beta1, config_.hp.beta2);
      const Matrix update = compute_update(st, grad, c.g, config_.qhm, config_.hp);
      w.params[l] -= lr * update;
      if (!finite(w.params[l])) {
        out.diverged = "non-finite parameters on worker " + std::to_string(w.id) + ", layer " +
                       std::to_string(l);
        return out;
      }
    }
  } catch (const NonFiniteError& e) {
    out.diverged = e.what();
  }
  return out;
}

void Simulator::sync(std::int64_t t, StepRecord& rec) {
  const std::size_t layers = anchor_.size();
  const std::size_t m_count = workers_.size();
  std::vector<Matrix> items(m_count);

  rec.synced_first_moment = config_.sync.first_moment_due(t);
  rec.synced_second_moment = config_.sync.second_moment_due(t);
  rec.synced_params = config_.sync.params_due(t);
  if (rec.synced_first_moment) sync_moment(workers_, Moment::kFirst);
  if (rec.synced_second_moment) sync_moment(workers_, Moment::kSecond);

  if (rec.synced_params) {
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t m = 0; m < m_count; ++m) items[m] = workers_[m].params[l];
      ParamSync ps = sync_params(items, anchor_[l], config_.outer, config_.flags.sparsify_keep,
                                 velocity_[l]);
      const Matrix& delta = ps.delta;
      rec.delta_rank.push_back(numerical_rank(delta));

      if (config_.projection == ProjectionStrategy::kGlobal) {
        try {
          ProjectionFit fit = fit_projection(delta, config_.rank, t,
                                             ProjectionSource::kAggregatedPseudoGradient);
          rec.projection_updates.push_back({l, -1, subspace_metrics(fit, workers_[0].opt[l].proj)});
          for (auto& w : workers_)
            install_projection(w.opt[l], fit.projection, config_.hp, config_.flags.rotate_moments);
        } catch (const DegenerateSignalError& e) {
          rec.warnings.push_back("layer " + std::to_string(l) + ": " + e.what() +
                                 "; previous projection kept");
        }
      }

      for (auto& w : workers_) w.params[l] = ps.model;
      anchor_[l] = std::move(ps.model);
    }
    rec.eval_loss = objective_->full_loss(anchor_);
  } else if (t + 1 == config_.steps) {
    std::vector<Matrix> averaged;
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t m = 0; m < m_count; ++m) items[m] = workers_[m].params[l];
      averaged.push_back(mean_of(items));
    }
    rec.eval_loss = objective_->full_loss(averaged);
  }

  const costs::CostInputs base{.kx = static_cast<std::uint64_t>(config_.sync.kx),
                               .ku = static_cast<std::uint64_t>(config_.sync.ku),
                               .kv = static_cast<std::uint64_t>(config_.sync.kv),
                               .workers = m_count,
                               .element_size = kElementBytes};
  for (std::size_t l = 0; l < layers; ++l) {
    costs::CostInputs in = base;
    in.p = objective_->layer_rows(l);
    in.q = objective_->layer_cols(l);
    in.r = config_.rank;
    const costs::PayloadCosts pc = costs::per_payload(config_.projection, config_.qhm, in);
    std::uint64_t up = 0;
    std::uint64_t down = 0;
    if (rec.synced_params) {
      up += pc.params.uplink + pc.projection.uplink;
      down += pc.params.downlink + pc.projection.downlink;
    }
    if (rec.synced_first_moment) {
      up += pc.first_moment.uplink;
      down += pc.first_moment.downlink;
    }
    if (rec.synced_second_moment) {
      up += pc.second_moment.uplink;
      down += pc.second_moment.downlink;
    }
    rec.bytes_uplink += up * kElementBytes;
    rec.bytes_downlink += down * kElementBytes;
  }
}

RunSummary Simulator::run(const std::function<void(const StepRecord&)>& sink,
                          std::int64_t max_steps) {
  RunSummary summary;
  const std::size_t m_count = workers_.size();
  const std::size_t threads =
      std::min(options_.threads == 0 ? m_count : options_.threads, m_count);
  std::vector<WorkerStep> results(m_count);

  const std::int64_t end =
      max_steps < 0 ? config_.steps : std::min(config_.steps, next_step_ + max_steps);
  for (std::int64_t t = next_step_; t < end; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = config_.lr.at(t);

    if (threads <= 1) {
      for (std::size_t m = 0; m < m_count; ++m) results[m] = local_step(workers_[m], t, lr);
    } else {
      std::vector<std::exception_ptr> errors(threads);
      {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < threads; ++k) {
          pool.emplace_back([&, k] {
            try {
              for (std::size_t m = k; m < m_count; m += threads)
                results[m] = local_step(workers_[m], t, lr);
            } catch (...) {
              errors[k] = std::current_exception();
            }
          });
        }
      }
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    StepRecord rec;
    rec.step = t;
    rec.lr = lr;
    for (std::size_t m = 0; m < m_count; ++m) {
      WorkerStep& r = results[m];
      if (r.diverged) {
        summary.divergence = Divergence{t, *r.diverged};
        next_step_ = config_.steps;
        return summary;
      }
      rec.worker_loss.push_back(r.loss);
      for (auto& u : r.updates) rec.projection_updates.push_back(u);
      for (auto& w : r.warnings) rec.warnings.push_back(std::move(w));
      if (options_.on_compress)
        for (const auto& tr : r.traces) options_.on_compress(tr);
    }
    rec.mean_loss = std::accumulate(rec.worker_loss.begin(), rec.worker_loss.end(), 0.0) /
                    static_cast<double>(m_count);

    sync(t, rec);
    if (rec.eval_loss && !std::isfinite(*rec.eval_loss)) {
      summary.divergence = Divergence{t, "non-finite evaluation loss"};
      next_step_ = config_.steps;
      return summary;
    }
    if (options_.timing)
      rec.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    summary.steps_completed = t + 1;
    summary.total_uplink_bytes += rec.bytes_uplink;
    summary.total_downlink_bytes += rec.bytes_downlink;
    if (rec.eval_loss) summary.final_loss = rec.eval_loss;
    next_step_ = t + 1;
    if (sink) sink(rec);
  }
  return summary;
}

RunSummary run_experiment(const RunConfig& config,
                          const std::function<void(const StepRecord&)>& sink,
                          SimOptions options) {
  Simulator sim(config, make_objective(config), std::move(options));
  return sim.run(sink);
}

}  // namespace lordo

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
#include <memory>
#include <span>
#include <vector>

#include "lordo/matrix.hpp"
#include "lordo/rng.hpp"

namespace lordo {

// Row indices (into the global design) drawn from one worker's shard.
struct Batch {
  std::size_t worker = 0;
  std::vector<std::size_t> rows;

  std::size_t size() const { return rows.size(); }
};

// Half-open row range [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
};

enum class ShardLayout {
  kContiguous,       // M equal row blocks of one shared design
  kBlockOrthogonal,  // shard m only excites feature columns of block m
};

struct RegressionSpec {
  std::size_t rows = 4096;
  std::size_t p = 64;
  std::size_t q = 64;
  std::size_t workers = 4;
  double noise_std = 1.0;
  // Ground truth X* = U diag(truth_scale * k^-truth_decay) V^T; a decay of 0
  // draws X* with i.i.d. standard normal entries instead.
  double truth_decay = 1.0;
  double truth_scale = 8.0;
  ShardLayout layout = ShardLayout::kContiguous;
};

// Least squares f(X) = (1/2B) |A_b X - Y_b|_F^2 with Y = A X* + noise,
// its rows partitioned into per-worker shards.
class MatrixRegression {
 public:
  MatrixRegression(Matrix design, Matrix targets, Matrix truth, std::vector<RowRange> shards,
                   double noise_std);

  static MatrixRegression generate(const RegressionSpec& spec, std::uint64_t seed);

  const Matrix& design() const { return design_; }
  const Matrix& targets() const { return targets_; }
  const Matrix& truth() const { return truth_; }
  double noise_std() const { return noise_std_; }
  const std::vector<RowRange>& shards() const { return shards_; }
  std::size_t p() const { return design_.cols(); }
  std::size_t q() const { return targets_.cols(); }

  double loss(const Matrix& x, const Batch& batch) const;
  // (1/B) A_b^T (A_b X - Y_b)
  Matrix gradient(const Matrix& x, const Batch& batch) const;

  Batch shard_batch(std::size_t worker) const;
  Batch full_batch() const;
  // B rows drawn uniformly with replacement from the worker's shard.
  Batch sample_batch(std::size_t worker, std::size_t batch_size, Rng& rng) const;

 private:
  // A_b X - Y_b for the batch rows.
  Matrix residual(const Matrix& x, const Batch& batch) const;
  void check(const Matrix& x, const Batch& batch) const;

  Matrix design_;
  Matrix targets_;
  Matrix truth_;
  std::vector<RowRange> shards_;
  double noise_std_;
};

// Multi-layer training objective seen by the simulator: one parameter
// matrix per layer, losses summed across layers.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t num_workers() const = 0;
  virtual std::size_t num_layers() const = 0;
  virtual std::size_t layer_rows(std::size_t layer) const = 0;
  virtual std::size_t layer_cols(std::size_t layer) const = 0;

  virtual Batch sample_batch(std::size_t worker, std::size_t batch_size, Rng& rng) const = 0;
  virtual double loss(std::span<const Matrix> params, const Batch& batch) const = 0;
  virtual std::vector<Matrix> gradient(std::span<const Matrix> params,
                                       const Batch& batch) const = 0;
  // Loss over every row of every shard.
  virtual double full_loss(std::span<const Matrix> params) const = 0;

  std::vector<Matrix> zero_params() const;
};

// Independent regressions, one per layer, sharing the row sampling.
class RegressionObjective final : public Objective {
 public:
  explicit RegressionObjective(std::vector<MatrixRegression> layers);
  static std::shared_ptr<RegressionObjective> generate(const RegressionSpec& spec,
                                                       std::size_t layers, std::uint64_t seed);

  const MatrixRegression& layer(std::size_t i) const { return layers_.at(i); }

  std::size_t num_workers() const override { return layers_.front().shards().size(); }
  std::size_t num_layers() const override { return layers_.size(); }
  std::size_t layer_rows(std::size_t i) const override { return layers_.at(i).p(); }
  std::size_t layer_cols(std::size_t i) const override { return layers_.at(i).q(); }

  Batch sample_batch(std::size_t worker, std::size_t batch_size, Rng& rng) const override;
  double loss(std::span<const Matrix> params, const Batch& batch) const override;
  std::vector<Matrix> gradient(std::span<const Matrix> params, const Batch& batch) const override;
  double full_loss(std::span<const Matrix> params) const override;

 private:
  std::vector<MatrixRegression> layers_;
};

// U diag(C k^-alpha) V^T with seeded Haar-like orthonormal U (p x k), V (q x k).
Matrix gen_powerlaw_matrix(double scale, double alpha, std::size_t p, std::size_t q,
                           std::uint64_t seed);

// True gradient with power-law spectrum plus isotropic batch noise whose
// expected Frobenius norm is kappa / sqrt(B).
class PowerLawOracle {
 public:
  PowerLawOracle(double scale, double alpha, std::size_t p, std::size_t q, double kappa,
                 std::uint64_t seed);

  const Matrix& true_gradient() const { return true_grad_; }
  double kappa() const { return kappa_; }

  // G + N with N_ij ~ Normal(0, kappa^2 / (B p q)).
  Matrix noisy_observation(std::size_t batch_size, Rng& rng) const;

 private:
  Matrix true_grad_;
  double kappa_;
};

}  // namespace lordo

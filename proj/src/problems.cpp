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

#include "lordo/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lordo/linalg.hpp"

namespace lordo {
namespace {

Matrix powerlaw_factors(double scale, double alpha, std::size_t p, std::size_t q, Rng& rng) {
  const std::size_t k = std::min(p, q);
  const Matrix u = orthonormalize_columns(rng.gaussian(p, k));
  const Matrix v = orthonormalize_columns(rng.gaussian(q, k));
  Matrix us = u;
  for (std::size_t j = 0; j < k; ++j) {
    const double s = scale * std::pow(static_cast<double>(j + 1), -alpha);
    for (std::size_t i = 0; i < p; ++i) us(i, j) *= s;
  }
  return matmul_nt(us, v);
}

}  // namespace

MatrixRegression::MatrixRegression(Matrix design, Matrix targets, Matrix truth,
                                   std::vector<RowRange> shards, double noise_std)
    : design_(std::move(design)),
      targets_(std::move(targets)),
      truth_(std::move(truth)),
      shards_(std::move(shards)),
      noise_std_(noise_std) {
  if (design_.rows() != targets_.rows())
    throw ShapeError("MatrixRegression: design " + design_.shape_str() + " vs targets " +
                     targets_.shape_str());
  if (truth_.rows() != design_.cols() || truth_.cols() != targets_.cols())
    throw ShapeError("MatrixRegression: truth " + truth_.shape_str() + " incompatible");
  if (shards_.empty()) throw std::invalid_argument("MatrixRegression: no shards");
  std::size_t expect = 0;
  for (const auto& s : shards_) {
    if (s.begin != expect || s.end <= s.begin)
      throw std::invalid_argument("MatrixRegression: shards must partition the rows in order");
    expect = s.end;
  }
  if (expect != design_.rows())
    throw std::invalid_argument("MatrixRegression: shards do not cover every row");
  if (noise_std_ < 0.0) throw std::invalid_argument("MatrixRegression: noise_std < 0");
}

MatrixRegression MatrixRegression::generate(const RegressionSpec& spec, std::uint64_t seed) {
  if (spec.workers == 0 || spec.rows % spec.workers != 0)
    throw std::invalid_argument("rows must be a positive multiple of workers");
  if (spec.p == 0 || spec.q == 0) throw std::invalid_argument("p and q must be positive");
  if (spec.layout == ShardLayout::kBlockOrthogonal && spec.p % spec.workers != 0)
    throw std::invalid_argument("block_orthogonal shards need p divisible by workers");

  Rng rng(seed);
  Matrix truth = spec.truth_decay > 0.0
                     ? powerlaw_factors(spec.truth_scale, spec.truth_decay, spec.p, spec.q, rng)
                     : rng.gaussian(spec.p, spec.q);
  Matrix design = rng.gaussian(spec.rows, spec.p);

  const std::size_t shard_rows = spec.rows / spec.workers;
  std::vector<RowRange> shards;
  for (std::size_t m = 0; m < spec.workers; ++m)
    shards.push_back({m * shard_rows, (m + 1) * shard_rows});

  if (spec.layout == ShardLayout::kBlockOrthogonal) {
    const std::size_t block = spec.p / spec.workers;
    for (std::size_t m = 0; m < spec.workers; ++m)
      for (std::size_t i = shards[m].begin; i < shards[m].end; ++i)
        for (std::size_t j = 0; j < spec.p; ++j)
          if (j / block != m) design(i, j) = 0.0;
  }

  Matrix targets = matmul(design, truth);
  if (spec.noise_std > 0.0) targets += rng.gaussian(spec.rows, spec.q, spec.noise_std);
  return MatrixRegression(std::move(design), std::move(targets), std::move(truth),
                          std::move(shards), spec.noise_std);
}

void MatrixRegression::check(const Matrix& x, const Batch& batch) const {
  if (batch.rows.empty()) throw std::invalid_argument("empty batch");
  if (x.rows() != p() || x.cols() != q())
    throw ShapeError("MatrixRegression: parameter " + x.shape_str() + " expected " +
                     truth_.shape_str());
  for (std::size_t r : batch.rows)
    if (r >= design_.rows()) throw std::out_of_range("batch row " + std::to_string(r));
}

Matrix MatrixRegression::residual(const Matrix& x, const Batch& batch) const {
  Matrix res(batch.size(), q());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto arow = design_.row(batch.rows[b]);
    const auto yrow = targets_.row(batch.rows[b]);
    auto out = res.row(b);
    for (std::size_t k = 0; k < p(); ++k) {
      const double a = arow[k];
      if (a == 0.0) continue;
      const auto xrow = x.row(k);
      for (std::size_t j = 0; j < q(); ++j) out[j] += a * xrow[j];
    }
    for (std::size_t j = 0; j < q(); ++j) out[j] -= yrow[j];
  }
  return res;
}

double MatrixRegression::loss(const Matrix& x, const Batch& batch) const {
  check(x, batch);
  const double f = frobenius_norm(residual(x, batch));
  return 0.5 * f * f / static_cast<double>(batch.size());
}

Matrix MatrixRegression::gradient(const Matrix& x, const Batch& batch) const {
  check(x, batch);
  const Matrix res = residual(x, batch);
  Matrix grad(p(), q());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto arow = design_.row(batch.rows[b]);
    const auto rrow = res.row(b);
    for (std::size_t k = 0; k < p(); ++k) {
      const double a = arow[k];
      if (a == 0.0) continue;
      auto grow = grad.row(k);
      for (std::size_t j = 0; j < q(); ++j) grow[j] += a * rrow[j];
    }
  }
  grad *= 1.0 / static_cast<double>(batch.size());
  return grad;
}

Batch MatrixRegression::shard_batch(std::size_t worker) const {
  const RowRange& s = shards_.at(worker);
  Batch b{worker, {}};
  for (std::size_t i = s.begin; i < s.end; ++i) b.rows.push_back(i);
  return b;
}

Batch MatrixRegression::full_batch() const {
  Batch b{0, {}};
  for (std::size_t i = 0; i < design_.rows(); ++i) b.rows.push_back(i);
  return b;
}

Batch MatrixRegression::sample_batch(std::size_t worker, std::size_t batch_size,
                                     Rng& rng) const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  const RowRange& s = shards_.at(worker);
  Batch b{worker, {}};
  b.rows.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) b.rows.push_back(s.begin + rng.below(s.size()));
  return b;
}

std::vector<Matrix> Objective::zero_params() const {
  std::vector<Matrix> out;
  for (std::size_t l = 0; l < num_layers(); ++l) out.emplace_back(layer_rows(l), layer_cols(l));
  return out;
}

RegressionObjective::RegressionObjective(std::vector<MatrixRegression> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("RegressionObjective: no layers");
  for (const auto& l : layers_) {
    if (l.design().rows() != layers_.front().design().rows() ||
        l.shards().size() != layers_.front().shards().size())
      throw std::invalid_argument("RegressionObjective: layers must share the row layout");
  }
}

std::shared_ptr<RegressionObjective> RegressionObjective::generate(const RegressionSpec& spec,
                                                                   std::size_t layers,
                                                                   std::uint64_t seed) {
  if (layers == 0) throw std::invalid_argument("layers must be >= 1");
  std::vector<MatrixRegression> out;
  for (std::size_t l = 0; l < layers; ++l)
    out.push_back(MatrixRegression::generate(spec, derive_seed(seed, l)));
  return std::make_shared<RegressionObjective>(std::move(out));
}

Batch RegressionObjective::sample_batch(std::size_t worker, std::size_t batch_size,
                                        Rng& rng) const {
  return layers_.front().sample_batch(worker, batch_size, rng);
}

double RegressionObjective::loss(std::span<const Matrix> params, const Batch& batch) const {
  if (params.size() != layers_.size()) throw ShapeError("RegressionObjective: layer count");
  double total = 0.0;
  for (std::size_t l = 0; l < layers_.size(); ++l) total += layers_[l].loss(params[l], batch);
  return total;
}

std::vector<Matrix> RegressionObjective::gradient(std::span<const Matrix> params,
                                                  const Batch& batch) const {
  if (params.size() != layers_.size()) throw ShapeError("RegressionObjective: layer count");
  std::vector<Matrix> out;
  out.reserve(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l)
    out.push_back(layers_[l].gradient(params[l], batch));
  return out;
}

double RegressionObjective::full_loss(std::span<const Matrix> params) const {
  return loss(params, layers_.front().full_batch());
}

Matrix gen_powerlaw_matrix(double scale, double alpha, std::size_t p, std::size_t q,
                           std::uint64_t seed) {
  if (!(scale > 0.0) || !(alpha > 0.0))
    throw std::invalid_argument("gen_powerlaw_matrix: scale and alpha must be > 0");
  Rng rng(seed);
  return powerlaw_factors(scale, alpha, p, q, rng);
}

PowerLawOracle::PowerLawOracle(double scale, double alpha, std::size_t p, std::size_t q,
                               double kappa, std::uint64_t seed)
    : true_grad_(gen_powerlaw_matrix(scale, alpha, p, q, seed)), kappa_(kappa) {
  if (kappa < 0.0) throw std::invalid_argument("PowerLawOracle: kappa < 0");
}

Matrix PowerLawOracle::noisy_observation(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (kappa_ == 0.0) return true_grad_;
  const double cells = static_cast<double>(true_grad_.size());
  const double stddev = kappa_ / std::sqrt(static_cast<double>(batch_size) * cells);
  return true_grad_ + rng.gaussian(true_grad_.rows(), true_grad_.cols(), stddev);
}

}  // namespace lordo

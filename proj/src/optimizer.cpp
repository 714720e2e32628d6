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

#include "lordo/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lordo {
namespace {

void require_unit_interval(double x, const char* name, bool closed_top) {
  const bool ok = closed_top ? (x >= 0.0 && x <= 1.0) : (x >= 0.0 && x < 1.0);
  if (!ok) throw std::invalid_argument(std::string(name) + " out of range: " + std::to_string(x));
}

// sqrt(v / c2) + eps, entrywise.
Matrix adam_denominator(const Matrix& v, double c2, double eps) {
  Matrix d = v;
  for (double& x : d.data()) x = std::sqrt(x / c2) + eps;
  return d;
}

double bias_correction(double beta, std::int64_t t) {
  return 1.0 - std::pow(beta, static_cast<double>(t));
}

}  // namespace

std::string_view to_string(QhmMode mode) {
  switch (mode) {
    case QhmMode::kNone:
      return "none";
    case QhmMode::kLowRank:
      return "low_rank";
    case QhmMode::kFullRank:
      return "full_rank";
  }
  return "unknown";
}

std::string_view to_string(MuSemantics mu) {
  return mu == MuSemantics::kPerColumn ? "per_column" : "scalar";
}

void HyperParams::validate() const {
  require_unit_interval(beta1, "beta1", false);
  require_unit_interval(beta2, "beta2", false);
  require_unit_interval(omega, "omega", true);
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (!(clip_radius > 0.0)) throw std::invalid_argument("clip_radius must be > 0");
}

double LrSchedule::at(std::int64_t t) const {
  if (warmup_steps <= 0 || t + 1 >= warmup_steps) return peak;
  return peak * static_cast<double>(t + 1) / static_cast<double>(warmup_steps);
}

LowRankOptState LowRankOptState::create(Projection proj, std::size_t cols) {
  LowRankOptState s;
  s.u = Matrix(proj.rank(), cols);
  s.v = Matrix(proj.rank(), cols);
  s.error = Matrix(proj.dim(), cols);
  s.proj = std::move(proj);
  return s;
}

Compressed compress_gradient(const Matrix& grad, const LowRankOptState& state) {
  require_same_shape(grad, state.error, "compress_gradient");
  Matrix signal = grad + state.error;
  Matrix g = matmul_tn(state.proj.Q, signal);
  signal -= matmul(state.proj.Q, g);
  return {std::move(g), std::move(signal)};
}

Compressed compress_without_feedback(const Matrix& grad, const LowRankOptState& state) {
  if (grad.rows() != state.proj.dim())
    throw ShapeError("compress_without_feedback: gradient " + grad.shape_str() + " vs basis " +
                     state.proj.Q.shape_str());
  return {matmul_tn(state.proj.Q, grad), Matrix(grad.rows(), grad.cols())};
}

void update_moments(LowRankOptState& state, const Matrix& g, double beta1, double beta2) {
  require_same_shape(state.u, g, "update_moments");
  auto u = state.u.data();
  auto v = state.v.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < gd.size(); ++i) {
    u[i] = beta1 * u[i] + (1.0 - beta1) * gd[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * gd[i] * gd[i];
  }
  ++state.step;
}

Matrix compute_update(const LowRankOptState& state, const Matrix& grad, const Matrix& g,
                      QhmMode mode, const HyperParams& hp) {
  require_unit_interval(hp.omega, "omega", true);
  if (!(hp.eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (state.step < 1) throw std::logic_error("compute_update: moments not updated yet");
  require_same_shape(state.u, g, "compute_update");

  const double c1 = bias_correction(hp.beta1, state.step);
  const double c2 = bias_correction(hp.beta2, state.step);
  const Matrix denom = adam_denominator(state.v, c2, hp.eps);
  Matrix u_hat = state.u * (1.0 / c1);

  switch (mode) {
    case QhmMode::kNone:
      return matmul(state.proj.Q, hadamard_div(u_hat, denom));
    case QhmMode::kLowRank: {
      Matrix mixed = u_hat * hp.omega;
      if (hp.omega < 1.0) mixed += g * (1.0 - hp.omega);
      return matmul(state.proj.Q, hadamard_div(mixed, denom));
    }
    case QhmMode::kFullRank: {
      require_same_shape(grad, state.error, "compute_update");
      Matrix out = matmul(state.proj.Q, hadamard_div(u_hat, denom));
      if (hp.omega == 1.0) return out;
      out *= hp.omega;
      const std::size_t r = denom.rows();
      const std::size_t q = denom.cols();
      std::vector<double> mu(q, 0.0);
      if (hp.mu == MuSemantics::kPerColumn) {
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < q; ++j) mu[j] += denom(i, j);
        for (double& m : mu) m /= static_cast<double>(r);
      } else {
        double total = 0.0;
        for (double x : denom.data()) total += x;
        std::fill(mu.begin(), mu.end(), total / static_cast<double>(r * q));
      }
      const double w = 1.0 - hp.omega;
      for (std::size_t i = 0; i < grad.rows(); ++i)
        for (std::size_t j = 0; j < q; ++j) out(i, j) += w * grad(i, j) / mu[j];
      return out;
    }
  }
  throw std::invalid_argument("compute_update: unknown QHM mode");
}

AdamStep adam_reference_step(const Matrix& x, const Matrix& grad, const Matrix& u,
                             const Matrix& v, const HyperParams& hp, std::int64_t t, double lr) {
  require_same_shape(x, grad, "adam_reference_step");
  require_same_shape(x, u, "adam_reference_step");
  require_same_shape(x, v, "adam_reference_step");
  if (t < 1) throw std::invalid_argument("adam_reference_step: t must be >= 1");
  AdamStep out{x, u, v};
  const double c1 = bias_correction(hp.beta1, t);
  const double c2 = bias_correction(hp.beta2, t);
  auto xs = out.x.data();
  auto us = out.u.data();
  auto vs = out.v.data();
  auto gs = grad.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    us[i] = hp.beta1 * us[i] + (1.0 - hp.beta1) * gs[i];
    vs[i] = hp.beta2 * vs[i] + (1.0 - hp.beta2) * gs[i] * gs[i];
  }
  // Same operation order as the low-rank path so Q = I reproduces it bit-for-bit.
  Matrix u_hat = out.u * (1.0 / c1);
  const Matrix denom = adam_denominator(out.v, c2, hp.eps);
  const Matrix step = hadamard_div(u_hat, denom);
  out.x -= step * lr;
  return out;
}

}  // namespace lordo

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

#include "lordo/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lordo/linalg.hpp"

namespace lordo {
namespace {

// sigma_r below this fraction of sigma_1 counts as rank-deficient.
constexpr double kDegenerateRelTol = 1e-12;

void require_same_basis_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": basis shapes differ " + a.shape_str() + " vs " +
                     b.shape_str());
}

}  // namespace

std::string_view to_string(ProjectionSource source) {
  switch (source) {
    case ProjectionSource::kAggregatedPseudoGradient:
      return "aggregated_pseudo_gradient";
    case ProjectionSource::kLocalGradientWithEF:
      return "local_gradient_with_ef";
    case ProjectionSource::kRandomInit:
      return "random_init";
    case ProjectionSource::kIdentity:
      return "identity";
  }
  return "unknown";
}

ProjectionFit fit_projection(const Matrix& signal, std::size_t rank, std::int64_t step,
                             ProjectionSource source) {
  const std::size_t k = std::min(signal.rows(), signal.cols());
  if (rank < 1 || rank > k)
    throw std::invalid_argument("compute_projection: rank " + std::to_string(rank) +
                                " outside [1, " + std::to_string(k) + "]");
  auto dec = svd(signal);
  const double top = dec.S.front();
  if (top == 0.0) throw DegenerateSignalError("degenerate signal: zero matrix");
  if (dec.S[rank - 1] <= kDegenerateRelTol * top)
    throw DegenerateSignalError("degenerate signal: numerical rank below " +
                                std::to_string(rank));
  ProjectionFit fit;
  fit.projection.Q = dec.U.leading_cols(rank);
  fit.projection.computed_at_step = step;
  fit.projection.source = source;
  fit.spectrum = std::move(dec.S);
  return fit;
}

Projection compute_projection(const Matrix& signal, std::size_t rank, std::int64_t step,
                              ProjectionSource source) {
  return fit_projection(signal, rank, step, source).projection;
}

Projection random_projection(std::size_t dim, std::size_t rank, Rng& rng) {
  if (rank < 1 || rank > dim) throw std::invalid_argument("random_projection: bad rank");
  Projection p;
  p.Q = orthonormalize_columns(rng.gaussian(dim, rank));
  p.source = ProjectionSource::kRandomInit;
  return p;
}

Projection identity_projection(std::size_t dim, std::size_t rank) {
  if (rank < 1 || rank > dim) throw std::invalid_argument("identity_projection: bad rank");
  Projection p;
  p.Q = Matrix::identity(dim, rank);
  p.source = ProjectionSource::kIdentity;
  return p;
}

Matrix rotation_matrix(const Projection& q_new, const Projection& q_old) {
  require_same_basis_shape(q_new.Q, q_old.Q, "rotation_matrix");
  return matmul_tn(q_new.Q, q_old.Q);
}

double mssv(const Matrix& rotation) {
  if (rotation.rows() == 0) return 0.0;
  const double f = frobenius_norm(rotation);
  return f * f / static_cast<double>(rotation.rows());
}

StableRank stable_rank_from_spectrum(std::span<const double> s) {
  if (s.empty() || s.front() == 0.0) return {0.0, true};
  double fro2 = 0.0;
  for (double x : s) fro2 += x * x;
  return {fro2 / (s.front() * s.front()), false};
}

StableRank stable_rank(const Matrix& m) {
  if (frobenius_norm(m) == 0.0) return {0.0, true};
  return stable_rank_from_spectrum(svd(m).S);
}

double spectral_gap(std::span<const double> s, std::size_t rank) {
  if (rank < 1 || rank >= s.size())
    throw std::invalid_argument("spectral_gap: rank " + std::to_string(rank) +
                                " needs 1 <= r < " + std::to_string(s.size()));
  return s[rank - 1] - s[rank];
}

double sin_theta_distance(const Matrix& a, const Matrix& b) {
  require_same_basis_shape(a, b, "sin_theta_distance");
  // |(I - A A^T) B|_F equals sqrt(r - |A^T B|_F^2) for equal-rank
  // orthonormal bases but avoids the cancellation near zero.
  return frobenius_norm(b - matmul(a, matmul_tn(a, b)));
}

double sin_theta_distance(const Projection& a, const Projection& b) {
  return sin_theta_distance(a.Q, b.Q);
}

Matrix rotate_first_moment(const Matrix& rotation, const Matrix& u) {
  return matmul(rotation, u);
}

Matrix rotate_second_moment(const Matrix& rotation, const Matrix& u, const Matrix& v,
                            double beta1, double beta2, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("rotate_second_moment: step must be >= 1");
  require_same_shape(u, v, "rotate_second_moment");
  if (rotation.cols() != u.rows())
    throw ShapeError("rotate_second_moment: rotation " + rotation.shape_str() + " vs moment " +
                     u.shape_str());
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));

  const Matrix u_hat = u * (1.0 / c1);
  Matrix centered = v * (1.0 / c2);
  centered -= square(u_hat);
  const Matrix r2 = square(rotation);
  Matrix out = matmul(r2, centered);
  out += square(matmul(rotation, u_hat));
  for (double& x : out.data()) x = c2 * std::abs(x);
  return out;
}

double predicted_instability(double kappa, double batch_size, double alpha, double scale,
                             double rank) {
  if (!(kappa > 0 && batch_size > 0 && alpha > 0 && scale > 0 && rank > 0))
    throw std::invalid_argument("predicted_instability: all inputs must be positive");
  return kappa / (alpha * scale * std::sqrt(batch_size)) * std::pow(rank, alpha + 1.0);
}

SubspaceMetrics subspace_metrics(const ProjectionFit& fit, const Projection& old_projection) {
  SubspaceMetrics m;
  m.mssv = mssv(rotation_matrix(fit.projection, old_projection));
  m.sin_theta = sin_theta_distance(fit.projection, old_projection);
  m.stable_rank = stable_rank_from_spectrum(fit.spectrum).value;
  const std::size_t r = fit.projection.rank();
  m.spectral_gap = r < fit.spectrum.size() ? spectral_gap(fit.spectrum, r) : 0.0;
  return m;
}

}  // namespace lordo

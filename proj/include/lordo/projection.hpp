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
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "lordo/matrix.hpp"
#include "lordo/rng.hpp"

namespace lordo {

enum class ProjectionSource {
  kAggregatedPseudoGradient,
  kLocalGradientWithEF,
  kRandomInit,
  kIdentity,
};

std::string_view to_string(ProjectionSource source);

// Column-orthonormal p x r basis used for down-projection (Q^T G) and
// up-projection (Q g).
struct Projection {
  Matrix Q;
  std::int64_t computed_at_step = 0;
  ProjectionSource source = ProjectionSource::kIdentity;

  std::size_t dim() const { return Q.rows(); }
  std::size_t rank() const { return Q.cols(); }

  friend bool operator==(const Projection&, const Projection&) = default;
};

// Raised when the signal is zero or has fewer than r numerically non-zero
// singular values. Callers keep their previous basis.
class DegenerateSignalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProjectionFit {
  Projection projection;
  std::vector<double> spectrum;  // singular values of the signal, descending
};

// Top-r left singular vectors of `signal`, plus its spectrum.
ProjectionFit fit_projection(const Matrix& signal, std::size_t rank, std::int64_t step = 0,
                             ProjectionSource source = ProjectionSource::kAggregatedPseudoGradient);

Projection compute_projection(const Matrix& signal, std::size_t rank, std::int64_t step = 0,
                              ProjectionSource source = ProjectionSource::kAggregatedPseudoGradient);

// Gaussian p x r orthonormalized by Gram-Schmidt.
Projection random_projection(std::size_t dim, std::size_t rank, Rng& rng);
// First r columns of the p x p identity.
Projection identity_projection(std::size_t dim, std::size_t rank);

// R = Q_new^T Q_old.
Matrix rotation_matrix(const Projection& q_new, const Projection& q_old);

// Mean squared singular value (1/r) sum sigma_i^2 = |R|_F^2 / r.
double mssv(const Matrix& rotation);

struct StableRank {
  double value = 0.0;
  bool zero_matrix = false;  // value is defined as 0 in that case
};
StableRank stable_rank(const Matrix& m);
// Same quantity from a precomputed spectrum.
StableRank stable_rank_from_spectrum(std::span<const double> singular_values);

// sigma_r - sigma_{r+1} for 1-based r; requires 1 <= r < len(S).
double spectral_gap(std::span<const double> singular_values, std::size_t rank);

// |sin Theta|_F = |(I - Q1 Q1^T) Q2|_F, i.e. sqrt(r - |Q1^T Q2|_F^2).
double sin_theta_distance(const Projection& a, const Projection& b);
double sin_theta_distance(const Matrix& a, const Matrix& b);

Matrix rotate_first_moment(const Matrix& rotation, const Matrix& u);

// Re-expresses the second moment in the new basis:
//   (1 - b2^t) | (R o R)(v_hat - u_hat o u_hat) + (R u_hat) o (R u_hat) |
// with u_hat = u / (1 - b1^t), v_hat = v / (1 - b2^t). (R o R) is the
// entrywise square of R applied as a matrix product. Requires t >= 1.
Matrix rotate_second_moment(const Matrix& rotation, const Matrix& u, const Matrix& v,
                            double beta1, double beta2, std::int64_t t);

// kappa / (alpha C sqrt(B)) * r^(alpha + 1): first-order Davis-Kahan estimate
// of how far the top-r subspace of a power-law gradient moves under batch
// noise of Frobenius size kappa / sqrt(B).
double predicted_instability(double kappa, double batch_size, double alpha, double scale,
                             double rank);

struct SubspaceMetrics {
  double mssv = 0.0;
  double stable_rank = 0.0;
  double spectral_gap = 0.0;
  double sin_theta = 0.0;
};

// Metrics for a basis change old -> fit.projection.
SubspaceMetrics subspace_metrics(const ProjectionFit& fit, const Projection& old_projection);

}  // namespace lordo

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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lordo/linalg.hpp"
#include "lordo/problems.hpp"
#include "lordo/projection.hpp"
#include "oracles.hpp"

namespace lordo {
namespace {

Projection basis(std::size_t p, std::vector<std::size_t> axes) {
  Projection out;
  out.Q = Matrix(p, axes.size());
  for (std::size_t j = 0; j < axes.size(); ++j) out.Q(axes[j], j) = 1.0;
  return out;
}

Projection random_basis(std::size_t p, std::size_t r, std::uint64_t seed) {
  Rng rng(seed);
  return random_projection(p, r, rng);
}

TEST(ComputeProjection, DiagonalSignal) {
  const auto q = compute_projection(Matrix::diag(std::vector<double>{3, 2, 1}), 2);
  EXPECT_EQ(q.Q, basis(3, {0, 1}).Q);
}

TEST(ComputeProjection, IdentityFullRank) {
  EXPECT_EQ(compute_projection(Matrix::identity(5), 5).Q, Matrix::identity(5));
}

TEST(ComputeProjection, GaussianMatchesGramEigenvectors) {
  Rng rng(7);
  const Matrix s = rng.gaussian(8, 6);
  const auto q = compute_projection(s, 3);
  const auto eig = oracle::symmetric_eigen(oracle::gram(s));
  EXPECT_LT(oracle::sin_theta_via_projectors(q.Q, eig.vectors.leading_cols(3)), 1e-8);
  EXPECT_LT(orthonormality_defect(q.Q), 1e-10);
}

TEST(ComputeProjection, Errors) {
  EXPECT_THROW(compute_projection(Matrix::identity(3), 0), std::invalid_argument);
  EXPECT_THROW(compute_projection(Matrix::identity(3), 4), std::invalid_argument);
  try {
    compute_projection(Matrix(4, 4), 2);
    FAIL();
  } catch (const DegenerateSignalError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate signal"), std::string::npos);
  }
  // Rank one signal cannot support a rank two basis.
  EXPECT_THROW(compute_projection(Matrix::diag(std::vector<double>{1, 0, 0}), 2),
               DegenerateSignalError);
}

TEST(ComputeProjectionProperty, PositiveScalingKeepsSubspace) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const Matrix a = rng.gaussian(12, 9);
    const auto q1 = compute_projection(a, 4);
    const auto q2 = compute_projection(3.7 * a, 4);
    EXPECT_LT(sin_theta_distance(q1, q2), 1e-10);
  }
}

TEST(Rotation, Examples) {
  const auto a = random_basis(6, 3, 1);
  EXPECT_LT(oracle::max_abs_diff(rotation_matrix(a, a), Matrix::identity(3)), 1e-14);
  EXPECT_EQ(rotation_matrix(basis(4, {0, 1}), basis(4, {2, 3})), Matrix(2, 2));
  EXPECT_EQ(rotation_matrix(basis(4, {0, 2}), basis(4, {0, 1})), (Matrix{{1, 0}, {0, 0}}));
  EXPECT_THROW(rotation_matrix(basis(4, {0}), basis(4, {0, 1})), ShapeError);
}

TEST(Mssv, Examples) {
  EXPECT_DOUBLE_EQ(mssv(Matrix::identity(4)), 1.0);
  EXPECT_EQ(mssv(Matrix(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(mssv(Matrix::diag(std::vector<double>{1, 0.5})), 0.625);
}

TEST(MssvProperty, InUnitIntervalAndOneForSameSpan) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = random_basis(10, 4, 2 * seed);
    const auto b = random_basis(10, 4, 2 * seed + 1);
    const double m = mssv(rotation_matrix(a, b));
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0 + 1e-12);
    EXPECT_LT(m, 1.0 - 1e-3);
    // A rotated copy of the same span has MSSV one.
    Rng rng(seed + 999);
    const Matrix mix = orthonormalize_columns(rng.gaussian(4, 4));
    Projection c;
    c.Q = matmul(a.Q, mix);
    EXPECT_NEAR(mssv(rotation_matrix(c, a)), 1.0, 1e-8);
  }
}

TEST(StableRank, Examples) {
  EXPECT_DOUBLE_EQ(stable_rank(Matrix::identity(5)).value, 5.0);
  EXPECT_NEAR(stable_rank(matmul(Matrix{{1}, {2}}, Matrix{{3, 1, 2}})).value, 1.0, 1e-12);
  EXPECT_NEAR(stable_rank(Matrix::diag(std::vector<double>{2, 1})).value, 1.25, 1e-15);
  const auto z = stable_rank(Matrix(3, 3));
  EXPECT_EQ(z.value, 0.0);
  EXPECT_TRUE(z.zero_matrix);
}

TEST(SpectralGap, Examples) {
  const std::vector<double> s{3, 2, 1};
  EXPECT_EQ(spectral_gap(s, 1), 1.0);
  EXPECT_EQ(spectral_gap(s, 2), 1.0);
  EXPECT_THROW(spectral_gap(s, 3), std::invalid_argument);
  const std::vector<double> power{1.0, 0.5, 1.0 / 3.0};
  EXPECT_DOUBLE_EQ(spectral_gap(power, 1), 0.5);
}

TEST(SinTheta, Examples) {
  const auto a = random_basis(7, 3, 4);
  EXPECT_NEAR(sin_theta_distance(a, a), 0.0, 1e-7);
  EXPECT_NEAR(sin_theta_distance(basis(4, {0, 1}), basis(4, {2, 3})), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(sin_theta_distance(basis(4, {0, 1}), basis(4, {0, 2})), 1.0, 1e-15);
  EXPECT_THROW(sin_theta_distance(basis(4, {0}), basis(3, {0})), ShapeError);
}

TEST(SinThetaProperty, PythagoreanIdentity) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = random_basis(9, 3, 3 * seed);
    const auto b = random_basis(9, 3, 3 * seed + 1);
    const double s = sin_theta_distance(a, b);
    const double f = oracle::fro(matmul_tn(a.Q, b.Q));
    EXPECT_NEAR(s * s + f * f, 3.0, 1e-8);
    EXPECT_NEAR(s, oracle::sin_theta_via_projectors(a.Q, b.Q), 1e-8);
  }
}

TEST(RotateFirstMoment, Examples) {
  const Matrix u{{1, 2}, {3, 4}};
  EXPECT_EQ(rotate_first_moment(Matrix::identity(2), u), u);
  EXPECT_EQ(rotate_first_moment(Matrix(2, 2), u), Matrix(2, 2));
  EXPECT_EQ(rotate_first_moment(Matrix{{0, 1}, {1, 0}}, u), (Matrix{{3, 4}, {1, 2}}));
  EXPECT_THROW(rotate_first_moment(Matrix::identity(3), u), ShapeError);
}

TEST(RotateSecondMoment, ZeroMeanCase) {
  const Matrix r{{0.6, -0.8}, {0.8, 0.6}};
  const Matrix v{{0.5, 0.1}, {0.2, 0.3}};
  const Matrix out = rotate_second_moment(r, Matrix(2, 2), v, 0.9, 0.99, 3);
  // (R o R) v
  const Matrix expect{{0.36 * 0.5 + 0.64 * 0.2, 0.36 * 0.1 + 0.64 * 0.3},
                      {0.64 * 0.5 + 0.36 * 0.2, 0.64 * 0.1 + 0.36 * 0.3}};
  EXPECT_LT(oracle::max_abs_diff(out, expect), 1e-15);
}

// r = 2, q = 1, R swaps the two coordinates. Entry i of the result is
// c2 |v_hat_j - u_hat_j^2 + u_hat_j^2| = v_j with j the other index.
TEST(RotateSecondMoment, HandComputedSwap) {
  const Matrix r{{0, 1}, {1, 0}};
  const Matrix u{{0.1}, {0.2}};
  const Matrix v{{0.04}, {0.09}};
  const Matrix out = rotate_second_moment(r, u, v, 0.9, 0.99, 5);
  EXPECT_NEAR(out(0, 0), 0.09, 1e-15);
  EXPECT_NEAR(out(1, 0), 0.04, 1e-15);
}

// General 2x2 rotation, expanded by hand in scalars.
TEST(RotateSecondMoment, HandComputedRotation) {
  const double c = 0.6, s = 0.8, b1 = 0.9, b2 = 0.99;
  const int t = 5;
  const double u0 = 0.1, u1 = -0.2, v0 = 0.04, v1 = 0.09;
  const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
  const double uh0 = u0 / c1, uh1 = u1 / c1, vh0 = v0 / c2, vh1 = v1 / c2;
  const double var0 = vh0 - uh0 * uh0, var1 = vh1 - uh1 * uh1;
  const double m0 = c * uh0 - s * uh1;  // (R u_hat)_0
  const double m1 = s * uh0 + c * uh1;  // (R u_hat)_1
  const double e0 = c2 * std::abs(c * c * var0 + s * s * var1 + m0 * m0);
  const double e1 = c2 * std::abs(s * s * var0 + c * c * var1 + m1 * m1);
  const Matrix out = rotate_second_moment(Matrix{{c, -s}, {s, c}}, Matrix{{u0}, {u1}},
                                          Matrix{{v0}, {v1}}, b1, b2, t);
  EXPECT_NEAR(out(0, 0), e0, 1e-15);
  EXPECT_NEAR(out(1, 0), e1, 1e-15);
}

TEST(RotateSecondMoment, RejectsStepZero) {
  EXPECT_THROW(rotate_second_moment(Matrix::identity(1), Matrix(1, 1), Matrix(1, 1), 0.9, 0.9, 0),
               std::invalid_argument);
}

TEST(RotateSecondMomentProperty, IdentityRecoversV) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t r = 1 + rng.below(6), q = 1 + rng.below(6);
    const double b1 = 0.99 * rng.uniform();
    const double b2 = 0.9999 * rng.uniform();
    const auto t = static_cast<std::int64_t>(1 + rng.below(500));
    const Matrix u = rng.gaussian(r, q);
    Matrix v = rng.gaussian(r, q);
    for (double& x : v.data()) x = x * x;
    const Matrix out = rotate_second_moment(Matrix::identity(r), u, v, b1, b2, t);
    EXPECT_LT(oracle::max_abs_diff(out, v), 1e-12) << "trial " << trial;
  }
}

TEST(RotateSecondMomentProperty, NonNegative) {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const Matrix r = rng.gaussian(4, 4);
    const Matrix u = rng.gaussian(4, 3);
    Matrix v = rng.gaussian(4, 3, 0.1);
    for (double& x : v.data()) x = x * x;
    const Matrix out = rotate_second_moment(r, u, v, 0.9, 0.999, 1 + trial);
    for (double x : out.data()) EXPECT_GE(x, 0.0);
  }
}

TEST(PredictedInstability, Examples) {
  EXPECT_DOUBLE_EQ(predicted_instability(1, 1, 1, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(predicted_instability(1, 4, 1, 1, 2), 2.0);
  const double a = predicted_instability(0.7, 8, 1.3, 2.0, 5);
  const double b = predicted_instability(0.7, 16, 1.3, 2.0, 5);
  EXPECT_NEAR(a / b, std::sqrt(2.0), 1e-12);
  EXPECT_THROW(predicted_instability(0, 1, 1, 1, 1), std::invalid_argument);
  EXPECT_THROW(predicted_instability(1, 1, 1, -1, 1), std::invalid_argument);
}

TEST(Metrics, SubspaceMetricsFromFit) {
  const Matrix s = Matrix::diag(std::vector<double>{4, 3, 1, 0.5});
  const auto fit = fit_projection(s, 2);
  const auto m = subspace_metrics(fit, basis(4, {0, 2}));
  EXPECT_DOUBLE_EQ(m.mssv, 0.5);
  EXPECT_NEAR(m.sin_theta, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.spectral_gap, 2.0);
  EXPECT_NEAR(m.stable_rank, (16 + 9 + 1 + 0.25) / 16.0, 1e-15);
}

TEST(InitialProjections, RandomAndIdentity) {
  Rng rng(3);
  const auto r = random_projection(10, 4, rng);
  EXPECT_LT(orthonormality_defect(r.Q), 1e-12);
  EXPECT_EQ(r.source, ProjectionSource::kRandomInit);
  const auto i = identity_projection(10, 4);
  EXPECT_EQ(i.Q, Matrix::identity(10, 4));
  EXPECT_EQ(i.source, ProjectionSource::kIdentity);
}

}  // namespace
}  // namespace lordo

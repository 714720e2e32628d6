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

#include "lordo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lordo {
namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kMaxSweeps = 60;

using Column = std::vector<double>;

double dot(const Column& a, const Column& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void rotate(Column& x, Column& y, double c, double s) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xi = x[k];
    const double yi = y[k];
    x[k] = c * xi - s * yi;
    y[k] = s * xi + c * yi;
  }
}

// Projects `v` off every column in `basis` twice; returns the residual norm.
double gram_schmidt_residual(Column& v, const std::vector<Column>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      const double proj = dot(b, v);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] -= proj * b[k];
    }
  }
  return std::sqrt(dot(v, v));
}

// Appends standard basis vectors (lowest index first) until `basis` holds
// `target` orthonormal columns.
void complete_basis(std::vector<Column>& basis, std::size_t dim, std::size_t target) {
  for (std::size_t e = 0; e < dim && basis.size() < target; ++e) {
    Column v(dim, 0.0);
    v[e] = 1.0;
    const double norm = gram_schmidt_residual(v, basis);
    if (norm < 1e-8) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
}

}  // namespace

void require_finite(const Matrix& a, const char* what) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (!std::isfinite(a(r, c))) {
        throw NonFiniteError(std::string(what) + ": non-finite entry at (" + std::to_string(r) +
                             ", " + std::to_string(c) + ")");
      }
    }
  }
}

SvdResult svd(const Matrix& a) {
  require_finite(a, "svd");
  if (a.rows() == 0 || a.cols() == 0) throw ShapeError("svd: empty matrix");

  const bool flipped = a.cols() > a.rows();
  const Matrix& src = a;
  const std::size_t m = flipped ? a.cols() : a.rows();
  const std::size_t n = flipped ? a.rows() : a.cols();

  // Column-major working copy of the tall orientation.
  std::vector<Column> work(n, Column(m));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) work[j][i] = flipped ? src(j, i) : src(i, j);
  std::vector<Column> right(n, Column(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) right[j][j] = 1.0;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double alpha = dot(work[i], work[i]);
        const double beta = dot(work[j], work[j]);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = dot(work[i], work[j]);
        if (std::abs(gamma) <= kJacobiTol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(work[i], work[j], c, s);
        rotate(right[i], right[j], c, s);
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(work[j], work[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  std::vector<Column> left;
  left.reserve(n);
  std::vector<double> s_sorted(n);
  for (std::size_t k = 0; k < n; ++k) s_sorted[k] = sigma[order[k]];
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    if (sigma[j] == 0.0) break;  // remaining columns are zero too
    Column u = work[j];
    for (double& x : u) x /= sigma[j];
    left.push_back(std::move(u));
  }
  complete_basis(left, m, n);

  // Assemble in the caller's orientation.
  Matrix tall_u(m, n);
  Matrix tall_v(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) tall_u(i, k) = left[k][i];
    const std::size_t j = order[k];
    for (std::size_t i = 0; i < n; ++i) tall_v(i, k) = right[j][i];
  }
  // Completed U columns pair with zero singular values; V stays the
  // accumulated rotation and is orthonormal regardless.

  SvdResult out;
  out.S = std::move(s_sorted);
  if (flipped) {
    out.U = std::move(tall_v);
    out.V = std::move(tall_u);
  } else {
    out.U = std::move(tall_u);
    out.V = std::move(tall_v);
  }

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < out.U.rows(); ++i) {
      const double mag = std::abs(out.U(i, k));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (out.U(arg, k) < 0.0) {
      for (std::size_t i = 0; i < out.U.rows(); ++i) out.U(i, k) = -out.U(i, k);
      for (std::size_t i = 0; i < out.V.rows(); ++i) out.V(i, k) = -out.V(i, k);
    }
  }
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.empty()) return 0.0;
  return svd(a).S.front();
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

Matrix clip_frobenius(const Matrix& g, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("clip_frobenius: radius must be > 0");
  const double norm = frobenius_norm(g);
  if (norm <= radius) return g;
  return g * (radius / norm);
}

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
  const auto s = svd(a).S;
  if (s.empty() || s.front() == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](double x) { return x > rel_tol * s.front(); }));
}

Matrix orthonormalize_columns(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (n > m) throw ShapeError("orthonormalize_columns: more columns than rows " + a.shape_str());
  std::vector<Column> basis;
  basis.reserve(n);
  const double scale = std::max(frobenius_norm(a), 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    Column v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = a(i, j);
    const double norm = gram_schmidt_residual(v, basis);
    if (norm <= 1e-12 * scale) {
      complete_basis(basis, m, basis.size() + 1);
      continue;
    }
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  Matrix out(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) out(i, j) = basis[j][i];
  return out;
}

double orthonormality_defect(const Matrix& a) {
  Matrix gram = matmul_tn(a, a);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) -= 1.0;
  return frobenius_norm(gram);
}

}  // namespace lordo

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

#include <stdexcept>
#include <vector>

#include "lordo/matrix.hpp"

namespace lordo {

class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Thin SVD: A (p x q) = U diag(S) V^T with k = min(p, q).
struct SvdResult {
  Matrix U;               // p x k, orthonormal columns
  std::vector<double> S;  // k values, descending, non-negative
  Matrix V;               // q x k, orthonormal columns
};

// One-sided cyclic Jacobi on the taller orientation of `a`.
//
// Rotations are skipped once |a_i . a_j| <= 1e-12 * |a_i| |a_j|; at most 60
// sweeps. Columns are ordered by descending singular value (ties keep the
// lower original column first), and each U column is signed so its
// largest-magnitude entry is positive, the lowest row index winning exact ties.
// Left singular vectors for exactly-zero singular values are completed from
// the standard basis by Gram-Schmidt. The routine is sequential and therefore
// bit-reproducible.
//
// Throws NonFiniteError naming the first offending (row, col).
SvdResult svd(const Matrix& a);

// Largest singular value; 0 for the zero matrix.
double spectral_norm(const Matrix& a);
double frobenius_norm(const Matrix& a);

// Scales g onto the Frobenius ball of radius `radius` when it lies outside.
Matrix clip_frobenius(const Matrix& g, double radius);

// Number of singular values with sigma_i > rel_tol * sigma_1.
std::size_t numerical_rank(const Matrix& a, double rel_tol = 1e-10);

// Modified Gram-Schmidt with one re-orthogonalization pass. Columns that
// vanish against their predecessors are replaced by the next standard basis
// vector that survives, so the result is always column-orthonormal.
Matrix orthonormalize_columns(const Matrix& a);

// max |A^T A - I|_F for a column-orthonormal candidate.
double orthonormality_defect(const Matrix& a);

void require_finite(const Matrix& a, const char* what);

}  // namespace lordo

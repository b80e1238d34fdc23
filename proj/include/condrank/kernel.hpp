/*
 * Copyright 2026 The condrank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Turning raw similarity matrices into kernels, and the Kronecker
// pairwise-kernel operator.
//
// Sanitization runs three stages: symmetrize, clip eigenvalues below a
// threshold to zero, rescale to unit diagonal. It is applied once to the
// full object set (transductive); labels are never involved.
//
// Vectorization convention: vec(X) stacks the columns of X, so couple
// (query v, result w) with coefficient X(v, w) sits at index v + n * w.
// Under this convention (G kron G) vec(X) = vec(G X G^T).

#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "condrank/errors.hpp"
#include "condrank/matrix.hpp"

namespace condrank {

inline constexpr double kEigenvalueClip = 1e-10;
inline constexpr double kDiagonalFloor = 1e-12;

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw DataError("symmetrize: matrix is not square");
  // a + b == b + a in IEEE arithmetic, so the result is exactly symmetric.
  return (s + s.transpose()) * 0.5;
}

inline SimilarityMatrix symmetrize(const SimilarityMatrix& s) {
  return SimilarityMatrix(s.index(), symmetrize(s.values()));
}

// Reconstructs U diag(l) U^T after setting eigenvalues l_i < tol to zero.
// Eigenvectors are used as returned by the solver.
inline Eigen::MatrixXd psd_project(const Eigen::MatrixXd& s, double tol = kEigenvalueClip) {
  if (s.rows() != s.cols()) throw DataError("psd_project: matrix is not square");
  if (!s.allFinite()) throw DataError("psd_project: matrix contains non-finite entries");
  if (s.size() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw DataError("psd_project: eigendecomposition failed");
  Eigen::VectorXd lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) < tol) lambda(i) = 0.0;
  const Eigen::MatrixXd& u = es.eigenvectors();
  Eigen::MatrixXd out = u * lambda.asDiagonal() * u.transpose();
  return symmetrize(out);
}

// G(i,j) = S(i,j) / sqrt(S(i,i) S(j,j)). Diagonal entries are set to
// exactly one. Fails on any diagonal entry <= kDiagonalFloor.
inline Eigen::MatrixXd normalize_diagonal(const Eigen::MatrixXd& s, const IdIndex* ids = nullptr) {
  if (s.rows() != s.cols()) throw DataError("normalize_diagonal: matrix is not square");
  const Eigen::Index n = s.rows();
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(s(i, i) > kDiagonalFloor)) {
      const std::string who = ids != nullptr ? "'" + (*ids)[static_cast<std::size_t>(i)] + "'"
                                             : "at index " + std::to_string(i);
      throw DataError("normalize_diagonal: self-similarity of object " + who + " is " + std::to_string(s(i, i)) +
                      " (<= " + std::to_string(kDiagonalFloor) + ")");
    }
    scale(i) = 1.0 / std::sqrt(s(i, i));
  }
  Eigen::MatrixXd g = scale.asDiagonal() * s * scale.asDiagonal();
  g = symmetrize(g);
  g.diagonal().setOnes();
  return g;
}

inline KernelMatrix normalize_diagonal(const SimilarityMatrix& s) {
  return KernelMatrix::trusted(s.index(), normalize_diagonal(s.values(), &s.index()));
}

// symmetrize -> psd_project -> normalize_diagonal.
inline KernelMatrix sanitize(const SimilarityMatrix& s, double tol = kEigenvalueClip) {
  Eigen::MatrixXd m = psd_project(symmetrize(s.values()), tol);
  return KernelMatrix::trusted(s.index(), normalize_diagonal(m, &s.index()));
}

inline KernelMatrix sanitize(const KernelMatrix& k, double tol = kEigenvalueClip) {
  return sanitize(k.as_similarity(), tol);
}

// (G kron G) vec(X) without forming the n^2 x n^2 product.
inline Eigen::MatrixXd kron_matvec(const Eigen::MatrixXd& g, const Eigen::MatrixXd& x) {
  if (g.rows() != g.cols() || x.rows() != g.cols() || x.cols() != g.cols())
    throw DataError("kron_matvec: shape mismatch");
  Eigen::MatrixXd gx = g * x;
  return gx * g.transpose();
}

// Column-stacking vectorization and its inverse.
inline Eigen::VectorXd vec(const Eigen::MatrixXd& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw DataError("unvec: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

}  // namespace condrank

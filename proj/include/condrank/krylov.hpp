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

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace condrank {

struct KrylovResult {
  Eigen::VectorXd x;
  double relative_residual = 0.0;  // ||b - A x|| / ||b||, recomputed explicitly
  int iterations = 0;
  bool converged = false;
};

// Restarted GMRES with right preconditioning, modified Gram-Schmidt and
// Givens rotations. Starts from x = 0. `apply(v)` returns A v and
// `precond(v)` returns an approximation of A^{-1} v; both must be linear.
//
// Right preconditioning leaves the monitored residual equal to the true
// residual of A x = b, so `tol` bounds ||b - A x|| / ||b|| directly.
template <class Apply, class Precond>
KrylovResult gmres(const Apply& apply, const Precond& precond, const Eigen::VectorXd& b, double tol, int max_iters,
                   int restart) {
  KrylovResult out;
  const Eigen::Index n = b.size();
  out.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  restart = std::max(1, std::min<int>(restart, static_cast<int>(std::min<Eigen::Index>(n, 1 << 20))));

  Eigen::VectorXd r = b;
  double rnorm = bnorm;
  std::vector<Eigen::VectorXd> basis;
  std::vector<Eigen::VectorXd> zbasis;  // preconditioned directions
  Eigen::MatrixXd h(restart + 1, restart);
  Eigen::VectorXd cs(restart), sn(restart), g(restart + 1);

  while (out.iterations < max_iters) {
    basis.clear();
    zbasis.clear();
    h.setZero();
    g.setZero();
    g(0) = rnorm;
    basis.push_back(r / rnorm);

    int k = 0;
    for (; k < restart && out.iterations < max_iters; ++k) {
      zbasis.push_back(precond(basis[k]));
      Eigen::VectorXd w = apply(zbasis[k]);
      for (int i = 0; i <= k; ++i) {
        h(i, k) = basis[i].dot(w);
        w.noalias() -= h(i, k) * basis[i];
      }
      // One reorthogonalization pass keeps the basis usable at tight tolerances.
      for (int i = 0; i <= k; ++i) {
        const double c = basis[i].dot(w);
        h(i, k) += c;
        w.noalias() -= c * basis[i];
      }
      h(k + 1, k) = w.norm();

      for (int i = 0; i < k; ++i) {
        const double t = cs(i) * h(i, k) + sn(i) * h(i + 1, k);
        h(i + 1, k) = -sn(i) * h(i, k) + cs(i) * h(i + 1, k);
        h(i, k) = t;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs(k) = denom == 0.0 ? 1.0 : h(k, k) / denom;
      sn(k) = denom == 0.0 ? 0.0 : h(k + 1, k) / denom;
      const double hk1 = h(k + 1, k);
      h(k, k) = cs(k) * h(k, k) + sn(k) * hk1;
      h(k + 1, k) = 0.0;
      g(k + 1) = -sn(k) * g(k);
      g(k) = cs(k) * g(k);
      ++out.iterations;

      const double estimate = std::abs(g(k + 1)) / bnorm;
      if (estimate <= tol || hk1 == 0.0) {
        ++k;
        break;
      }
      basis.push_back(w / hk1);
    }

    // Back substitution on the k x k upper-triangular system.
    Eigen::VectorXd y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i) out.x.noalias() += y(i) * zbasis[i];

    r = b - apply(out.x);
    rnorm = r.norm();
    out.relative_residual = rnorm / bnorm;
    if (out.relative_residual <= tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace condrank

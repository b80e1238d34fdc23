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

// Conditional ranking with regularized least squares over couples
// (query v, result w) and the Kronecker pairwise kernel
//
//   K((v, w), (v', w')) = G(v, v') G(w, w').
//
// Scores are h = K vec(A) = vec(G A G^T) (vectorization convention in
// kernel.hpp). For each query v the result set E_v holds every training
// object except v itself. The pairwise squared loss
//
//   L(H, Y) = sum_v sum_{e, e' in E_v} (Y_e - Y_e' - H_e + H_e')^2
//
// equals 2 <R, Lap(R)> with R = Y - H and Lap the per-query Laplacian of
// laplacian_apply. The trainer minimizes
//
//   J(A) = L(G A G^T, Y) / 2 + lambda vec(A)^T K vec(A)
//
// whose stationarity condition is (Lap K + lambda I) vec(A) = Lap vec(Y).
// Self couples carry zero coefficients.

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "condrank/ec.hpp"
#include "condrank/errors.hpp"
#include "condrank/ids.hpp"
#include "condrank/kernel.hpp"
#include "condrank/krylov.hpp"
#include "condrank/matrix.hpp"

namespace condrank {

// Per-query pairwise-difference Laplacian applied row-wise:
//   out(v, w) = (n - 1) M(v, w) - sum_{u != v} M(v, u)   for w != v
//   out(v, v) = 0
inline Eigen::MatrixXd laplacian_apply(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DataError("laplacian_apply: matrix is not square");
  const Eigen::Index n = m.rows();
  Eigen::VectorXd masked_sum = m.rowwise().sum() - m.diagonal();
  Eigen::MatrixXd out = static_cast<double>(n - 1) * m;
  out.colwise() -= masked_sum;
  out.diagonal().setZero();
  return out;
}

// Pairwise squared rank loss over ordered couple pairs; diagonals ignored.
inline double rank_loss(const Eigen::MatrixXd& h, const Eigen::MatrixXd& y) {
  if (h.rows() != y.rows() || h.cols() != y.cols() || h.rows() != h.cols())
    throw DataError("rank_loss: shape mismatch");
  const Eigen::Index n = h.rows();
  if (n < 2) return 0.0;
  double loss = 0.0;
  for (Eigen::Index v = 0; v < n; ++v) {
    double sum = 0.0, sq = 0.0;
    for (Eigen::Index w = 0; w < n; ++w) {
      if (w == v) continue;
      const double r = y(v, w) - h(v, w);
      sum += r;
      sq += r * r;
    }
    loss += 2.0 * (static_cast<double>(n - 1) * sq - sum * sum);
  }
  return std::max(loss, 0.0);
}

struct TrainingSet {
  std::vector<std::string> ids;
  Eigen::MatrixXd kernel;  // G over the training objects
  Eigen::MatrixXd labels;  // Y(v, w) = Q(v, w)

  std::size_t size() const noexcept { return ids.size(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(ids.size());
    if (kernel.rows() != n || kernel.cols() != n || labels.rows() != n || labels.cols() != n)
      throw DataError("training set: kernel, labels and ids disagree in dimension");
  }
};

inline TrainingSet make_training_set(const KernelMatrix& k, const CatalyticSimilarityMatrix& q,
                                     std::span<const std::string> ids) {
  TrainingSet ts;
  ts.ids.assign(ids.begin(), ids.end());
  const auto kpos = k.index().positions(ids);
  const auto qpos = q.index().positions(ids);
  ts.kernel = k.slice(kpos, kpos);
  ts.labels = q.slice(qpos, qpos);
  return ts;
}

enum class SolverMode { kDirect, kIterative, kAuto };

inline std::string_view to_string(SolverMode m) {
  switch (m) {
    case SolverMode::kDirect: return "direct";
    case SolverMode::kIterative: return "iterative";
    case SolverMode::kAuto: return "auto";
  }
  return "auto";
}

inline SolverMode parse_solver_mode(std::string_view s) {
  if (s == "direct") return SolverMode::kDirect;
  if (s == "iterative") return SolverMode::kIterative;
  if (s == "auto") return SolverMode::kAuto;
  throw ConfigError("unknown solver mode '" + std::string(s) + "' (expected direct, iterative or auto)");
}

struct SolverOptions {
  SolverMode mode = SolverMode::kAuto;
  double cg_tol = 1e-6;        // relative residual at which the Krylov solver stops
  int max_iters = 5000;
  int direct_threshold = 4000;  // largest couple count solved densely in auto mode
  int restart = 200;            // GMRES restart length
  bool precondition = true;

  void validate() const {
    if (!(cg_tol > 0.0)) throw ConfigError("solver tolerance must be > 0");
    if (max_iters < 1) throw ConfigError("solver max_iters must be >= 1");
    if (direct_threshold < 0) throw ConfigError("direct_threshold must be >= 0");
    if (restart < 1) throw ConfigError("GMRES restart must be >= 1");
  }
};

struct RankModel {
  Eigen::MatrixXd coefficients;  // A(query, result) over training objects
  std::vector<std::string> train_ids;
  double lambda = 0.0;
  SolverMode solver = SolverMode::kDirect;
  double residual = 0.0;
  int iterations = 0;
};

// The linear system of one training set, reusable across lambda values.
class RankRlsSystem {
 public:
  explicit RankRlsSystem(const TrainingSet& ts) : n_(static_cast<Eigen::Index>(ts.size())), g_(ts.kernel) {
    ts.validate();
    if (!g_.allFinite()) throw DataError("training kernel contains non-finite entries");
    rhs_ = laplacian_apply(ts.labels);
  }

  Eigen::Index size() const noexcept { return n_; }
  const Eigen::MatrixXd& kernel() const noexcept { return g_; }
  const Eigen::MatrixXd& rhs() const noexcept { return rhs_; }

  // X -> Lap(G X G^T) + lambda X
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x, double lambda) const {
    return laplacian_apply(kron_matvec(g_, x)) + lambda * x;
  }

  double relative_residual(const Eigen::MatrixXd& a, double lambda) const {
    const double bnorm = rhs_.norm();
    const double r = (apply(a, lambda) - rhs_).norm();
    return bnorm == 0.0 ? r : r / bnorm;
  }

  Eigen::MatrixXd solve_direct(double lambda) const {
    const Eigen::Index m = n_ * n_;
    Eigen::MatrixXd sys(m, m);
    Eigen::MatrixXd column(n_, n_);
    for (Eigen::Index q = 0; q < n_; ++q)
      for (Eigen::Index p = 0; p < n_; ++p) {
        // Column (p, q) of G kron G reshaped: G(:, p) G(:, q)^T.
        column.noalias() = g_.col(p) * g_.col(q).transpose();
        sys.col(p + n_ * q) = vec(laplacian_apply(column));
      }
    sys.diagonal().array() += lambda;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
    const Eigen::VectorXd b = vec(rhs_);
    Eigen::VectorXd x = lu.solve(b);
    x += lu.solve(b - sys * x);  // one refinement step
    Eigen::MatrixXd a = unvec(x, n_, n_);
    a.diagonal().setZero();
    return a;
  }

  KrylovResult solve_iterative(double lambda, const SolverOptions& opts) const {
    auto op = [&](const Eigen::VectorXd& v) { return vec(apply(unvec(v, n_, n_), lambda)); };
    auto identity = [&](const Eigen::VectorXd& v) { return masked(v); };
    auto precond = [&](const Eigen::VectorXd& v) { return masked(vec(inverse_unmasked(unvec(v, n_, n_), lambda))); };
    if (opts.precondition) return gmres(op, precond, vec(rhs_), opts.cg_tol, opts.max_iters, opts.restart);
    return gmres(op, identity, vec(rhs_), opts.cg_tol, opts.max_iters, opts.restart);
  }

 private:
  // Zeroes the self-couple entries; keeps Krylov iterates in the subspace
  // the operator preserves.
  Eigen::VectorXd masked(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = v;
    for (Eigen::Index i = 0; i < n_; ++i) out(i + n_ * i) = 0.0;
    return out;
  }

  // Exact inverse of X -> (n - 1) G X G + lambda X, which drops the
  // self-couple mask and the per-query centering from the true operator.
  Eigen::MatrixXd inverse_unmasked(const Eigen::MatrixXd& r, double lambda) const {
    ensure_eigensystem();
    Eigen::MatrixXd t = evecs_.transpose() * r * evecs_;
    const double c = static_cast<double>(n_ - 1);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index i = 0; i < n_; ++i) t(i, j) /= c * evals_(i) * evals_(j) + lambda;
    return evecs_ * t * evecs_.transpose();
  }

  void ensure_eigensystem() const {
    if (evecs_.size() != 0 || n_ == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g_);
    if (es.info() != Eigen::Success) throw DataError("training kernel eigendecomposition failed");
    evecs_ = es.eigenvectors();
    evals_ = es.eigenvalues().cwiseMax(0.0);
  }

  Eigen::Index n_;
  Eigen::MatrixXd g_;
  Eigen::MatrixXd rhs_;
  mutable Eigen::MatrixXd evecs_;
  mutable Eigen::VectorXd evals_;
};

inline RankModel train(const RankRlsSystem& sys, std::span<const std::string> ids, double lambda,
                       const SolverOptions& opts) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("regularization lambda must be a finite value > 0");
  opts.validate();
  const Eigen::Index n = sys.size();

  RankModel model;
  model.train_ids.assign(ids.begin(), ids.end());
  model.lambda = lambda;
  SolverMode mode = opts.mode;
  if (mode == SolverMode::kAuto) mode = n * n <= opts.direct_threshold ? SolverMode::kDirect : SolverMode::kIterative;
  model.solver = mode;

  if (mode == SolverMode::kDirect) {
    model.coefficients = sys.solve_direct(lambda);
  } else {
    KrylovResult kr = sys.solve_iterative(lambda, opts);
    model.iterations = kr.iterations;
    if (!kr.converged) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "GMRES did not reach relative residual %g within %d iterations (final residual %g, lambda %g)",
                    opts.cg_tol, opts.max_iters, kr.relative_residual, lambda);
      throw SolverError(msg, kr.relative_residual);
    }
    model.coefficients = unvec(kr.x, n, n);
  }
  if (!model.coefficients.allFinite())
    throw SolverError("solver produced non-finite coefficients (lambda " + std::to_string(lambda) + ")",
                      std::numeric_limits<double>::infinity());
  model.residual = sys.relative_residual(model.coefficients, lambda);
  return model;
}

inline RankModel train(const TrainingSet& ts, double lambda, const SolverOptions& opts = {}) {
  return train(RankRlsSystem(ts), ts.ids, lambda, opts);
}

// J(A) = L(G A G^T, Y) / 2 + lambda vec(A)^T (G kron G) vec(A)
inline double objective(const TrainingSet& ts, const Eigen::MatrixXd& a, double lambda) {
  Eigen::MatrixXd h = kron_matvec(ts.kernel, a);
  return 0.5 * rank_loss(h, ts.labels) + lambda * a.cwiseProduct(h).sum();
}

// Analytic gradient of objective(): 2 (G kron G)(Lap(G A G^T - Y) + lambda A).
inline Eigen::MatrixXd objective_gradient(const TrainingSet& ts, const Eigen::MatrixXd& a, double lambda) {
  Eigen::MatrixXd h = kron_matvec(ts.kernel, a);
  return 2.0 * kron_matvec(ts.kernel, laplacian_apply(h - ts.labels) + lambda * a);
}

// H = G_query A G_db^T; rows are queries, columns database objects.
inline Eigen::MatrixXd predict(const RankModel& model, const Eigen::MatrixXd& g_query, const Eigen::MatrixXd& g_db) {
  const Eigen::Index n = model.coefficients.rows();
  if (g_query.cols() != n || g_db.cols() != n)
    throw DataError("predict: kernel slices have " + std::to_string(g_query.cols()) + " and " +
                    std::to_string(g_db.cols()) + " columns but the model has " + std::to_string(n) +
                    " training objects");
  return g_query * model.coefficients * g_db.transpose();
}

inline Eigen::MatrixXd predict(const RankModel& model, const KernelMatrix& k, std::span<const std::string> query_ids,
                               std::span<const std::string> db_ids) {
  const auto train_pos = k.index().positions(model.train_ids);
  const auto qpos = k.index().positions(query_ids);
  const auto dpos = k.index().positions(db_ids);
  return predict(model, k.slice(qpos, train_pos), k.slice(dpos, train_pos));
}

inline Eigen::MatrixXd symmetrize_predictions(const Eigen::MatrixXd& h) {
  if (h.rows() != h.cols()) throw DataError("symmetrize_predictions: score matrix is not square");
  return symmetrize(h);
}

struct ScoredItem {
  std::string id;
  double score;
};

// Similarity of the query to every other object, in kernel order.
inline std::vector<ScoredItem> unsupervised_scores(const KernelMatrix& k, std::string_view query_id) {
  const std::size_t qi = k.index().at(query_id);
  std::vector<ScoredItem> out;
  out.reserve(k.size() - 1);
  for (std::size_t j = 0; j < k.size(); ++j)
    if (j != qi) out.push_back({k.ids()[j], k(qi, j)});
  return out;
}

}  // namespace condrank

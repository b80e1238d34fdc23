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

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "condrank/kernel.hpp"
#include "condrank/krylov.hpp"
#include "condrank/model_io.hpp"
#include "condrank/random.hpp"
#include "condrank/rankrls.hpp"
#include "oracles.hpp"

namespace condrank {
namespace {

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

// Random unit-diagonal PSD kernel of rank min(n, rank) and random grades.
TrainingSet random_training_set(Rng& rng, Eigen::Index n, Eigen::Index rank = 4) {
  const Eigen::MatrixXd b = gaussian(rng, n, rank);
  TrainingSet ts;
  for (Eigen::Index i = 0; i < n; ++i) ts.ids.push_back("t" + std::to_string(i));
  ts.kernel = normalize_diagonal(Eigen::MatrixXd(b * b.transpose()));
  ts.labels = Eigen::MatrixXd(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ts.labels(i, i) = 4;
    for (Eigen::Index j = 0; j < i; ++j) ts.labels(i, j) = ts.labels(j, i) = static_cast<double>(rng.below(5));
  }
  return ts;
}

// Per-query Laplacian as an explicit n^2 x n^2 matrix from its definition.
Eigen::MatrixXd explicit_laplacian(Eigen::Index n) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index v = 0; v < n; ++v)
    for (Eigen::Index w = 0; w < n; ++w) {
      if (w == v) continue;
      for (Eigen::Index u = 0; u < n; ++u) {
        if (u == v) continue;
        l(v + n * w, v + n * u) = (u == w ? static_cast<double>(n - 1) : 0.0) - 1.0;
      }
    }
  return l;
}

TEST(Laplacian, MatchesExplicitOperator) {
  Rng rng(1);
  const Eigen::Index n = 6;
  const Eigen::MatrixXd m = gaussian(rng, n, n);
  const Eigen::VectorXd want = explicit_laplacian(n) * oracle::stack_columns(m);
  EXPECT_LE((vec(laplacian_apply(m)) - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RankLoss, MatchesPairwiseDefinition) {
  Rng rng(2);
  for (Eigen::Index n : {2, 3, 6, 11}) {
    const Eigen::MatrixXd h = gaussian(rng, n, n), y = gaussian(rng, n, n);
    const double want = oracle::pairwise_loss(h, y);
    EXPECT_NEAR(rank_loss(h, y), want, 1e-11 * (1.0 + want)) << n;
    const Eigen::MatrixXd r = y - h;
    EXPECT_NEAR(2.0 * r.cwiseProduct(laplacian_apply(r)).sum(), want, 1e-11 * (1.0 + want)) << n;
  }
  EXPECT_EQ(rank_loss(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Zero(1, 1)), 0.0);
}

TEST(RankLoss, InvariantUnderPerQueryShift) {
  Rng rng(3);
  const Eigen::Index n = 7;
  // Small integers keep every intermediate exact, so equality is exact.
  Eigen::MatrixXd h(n, n), y(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      h(i, j) = static_cast<double>(rng.below(21)) - 10.0;
      y(i, j) = static_cast<double>(rng.below(5));
    }
  Eigen::MatrixXd shifted = h;
  for (Eigen::Index v = 0; v < n; ++v) shifted.row(v).array() += static_cast<double>(rng.below(100)) - 50.0;
  EXPECT_EQ(rank_loss(shifted, y), rank_loss(h, y));
  EXPECT_EQ(oracle::pairwise_loss(shifted, y), oracle::pairwise_loss(h, y));
  // Diagonal entries never contribute.
  shifted.diagonal().array() += 1000.0;
  EXPECT_EQ(rank_loss(shifted, y), rank_loss(h, y));

  // Generic doubles: equal up to rounding.
  const Eigen::MatrixXd hg = gaussian(rng, n, n), yg = gaussian(rng, n, n);
  Eigen::MatrixXd hs = hg;
  for (Eigen::Index v = 0; v < n; ++v) hs.row(v).array() += rng.normal() * 10.0;
  EXPECT_NEAR(rank_loss(hs, yg), rank_loss(hg, yg), 1e-10 * rank_loss(hg, yg));
}

TEST(RankLoss, PerfectScoresUpToShiftGiveZero) {
  Rng rng(4);
  const Eigen::MatrixXd y = gaussian(rng, 5, 5);
  Eigen::MatrixXd h = y;
  h.row(2).array() += 3.0;
  EXPECT_NEAR(rank_loss(h, y), 0.0, 1e-12);
}

TEST(Objective, MatchesExplicitDefinition) {
  Rng rng(5);
  const TrainingSet ts = random_training_set(rng, 5);
  const Eigen::MatrixXd a = gaussian(rng, 5, 5);
  const double lambda = 0.3;
  const Eigen::VectorXd va = oracle::stack_columns(a);
  const Eigen::MatrixXd h = oracle::explicit_kron(ts.kernel) * va;
  Eigen::MatrixXd hm(5, 5);
  for (Eigen::Index j = 0; j < 5; ++j)
    for (Eigen::Index i = 0; i < 5; ++i) hm(i, j) = h(i + 5 * j);
  const double want =
      0.5 * oracle::pairwise_loss(hm, ts.labels) + lambda * va.dot(oracle::explicit_kron(ts.kernel) * va);
  EXPECT_NEAR(objective(ts, a, lambda), want, 1e-10 * want);
}

TEST(Objective, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  const TrainingSet ts = random_training_set(rng, 6);
  const Eigen::MatrixXd a = gaussian(rng, 6, 6);
  const double lambda = 0.05, step = 1e-6;
  const Eigen::MatrixXd grad = objective_gradient(ts, a, lambda);
  for (Eigen::Index j = 0; j < 6; ++j)
    for (Eigen::Index i = 0; i < 6; ++i) {
      Eigen::MatrixXd p = a, m = a;
      p(i, j) += step;
      m(i, j) -= step;
      const double fd = (objective(ts, p, lambda) - objective(ts, m, lambda)) / (2 * step);
      EXPECT_NEAR(grad(i, j), fd, 1e-5 * (1.0 + std::abs(fd))) << i << "," << j;
    }
}

TEST(Solver, DirectMatchesExplicitSystem) {
  Rng rng(7);
  const Eigen::Index n = 5;
  const TrainingSet ts = random_training_set(rng, n);
  const double lambda = 0.7;
  const RankModel model = train(ts, lambda, {.mode = SolverMode::kDirect});
  const Eigen::MatrixXd lap = explicit_laplacian(n);
  Eigen::MatrixXd sys = lap * oracle::explicit_kron(ts.kernel);
  sys.diagonal().array() += lambda;
  const Eigen::VectorXd want = sys.fullPivLu().solve(lap * oracle::stack_columns(ts.labels));
  EXPECT_LE((oracle::stack_columns(model.coefficients) - want).norm(), 1e-10 * (1.0 + want.norm()));
  EXPECT_EQ(model.solver, SolverMode::kDirect);
}

TEST(Solver, DirectAndIterativeAgree) {
  Rng rng(8);
  for (int t = 0; t < 5; ++t) {
    const TrainingSet ts = random_training_set(rng, 8, 3 + t);
    for (double lambda : {1e-3, 1.0, 100.0}) {
      const RankRlsSystem sys(ts);
      const RankModel d = train(sys, ts.ids, lambda, {.mode = SolverMode::kDirect});
      const RankModel it = train(sys, ts.ids, lambda, {.mode = SolverMode::kIterative, .cg_tol = 1e-10});
      EXPECT_LE((d.coefficients - it.coefficients).norm(), 1e-6 * d.coefficients.norm()) << lambda;
      EXPECT_LE(d.residual, 1e-10);
      EXPECT_LE(it.residual, 1e-10);
      EXPECT_GT(it.iterations, 0);
      for (Eigen::Index i = 0; i < 8; ++i) {
        EXPECT_EQ(d.coefficients(i, i), 0.0);
        EXPECT_EQ(it.coefficients(i, i), 0.0);
      }
    }
  }
}

TEST(Solver, SolutionIsStationaryPoint) {
  Rng rng(9);
  const TrainingSet ts = random_training_set(rng, 8);
  const double lambda = 0.1;
  const RankModel m = train(ts, lambda, {.mode = SolverMode::kDirect});
  const Eigen::MatrixXd grad = objective_gradient(ts, m.coefficients, lambda);
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-9 * (1.0 + m.coefficients.norm()));
}

TEST(Solver, UnpreconditionedIterativeStillConverges) {
  Rng rng(10);
  const TrainingSet ts = random_training_set(rng, 7);
  const RankRlsSystem sys(ts);
  const RankModel d = train(sys, ts.ids, 1.0, {.mode = SolverMode::kDirect});
  const RankModel u =
      train(sys, ts.ids, 1.0, {.mode = SolverMode::kIterative, .cg_tol = 1e-12, .precondition = false});
  EXPECT_LE((d.coefficients - u.coefficients).norm(), 1e-6 * d.coefficients.norm());
}

TEST(Solver, AutoModeFollowsThreshold) {
  Rng rng(11);
  const TrainingSet ts = random_training_set(rng, 6);
  EXPECT_EQ(train(ts, 1.0, {.direct_threshold = 36}).solver, SolverMode::kDirect);
  EXPECT_EQ(train(ts, 1.0, {.direct_threshold = 35}).solver, SolverMode::kIterative);
}

TEST(Solver, ErrorPaths) {
  Rng rng(12);
  const TrainingSet ts = random_training_set(rng, 6);
  EXPECT_THROW(train(ts, 0.0), ConfigError);
  EXPECT_THROW(train(ts, -1.0), ConfigError);
  EXPECT_THROW(train(ts, std::numeric_limits<double>::quiet_NaN()), ConfigError);
  EXPECT_THROW(train(ts, std::numeric_limits<double>::infinity()), ConfigError);
  EXPECT_THROW(train(ts, 1.0, {.cg_tol = 0.0}), ConfigError);
  try {
    train(ts, 1e-4, {.mode = SolverMode::kIterative, .cg_tol = 1e-14, .max_iters = 1, .precondition = false});
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), 1e-14);
  }
  TrainingSet bad = ts;
  bad.labels = Eigen::MatrixXd::Zero(5, 5);
  EXPECT_THROW(RankRlsSystem{bad}, DataError);
}

TEST(SolverMode, ParseAndPrint) {
  for (auto m : {SolverMode::kDirect, SolverMode::kIterative, SolverMode::kAuto})
    EXPECT_EQ(parse_solver_mode(to_string(m)), m);
  EXPECT_THROW(parse_solver_mode("cg"), ConfigError);
}

TEST(Gmres, SolvesGeneralSystem) {
  Rng rng(13);
  const Eigen::Index n = 40;
  Eigen::MatrixXd a = gaussian(rng, n, n) + 12.0 * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd b = gaussian(rng, n, 1);
  auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a * v; };
  auto id = [](const Eigen::VectorXd& v) { return v; };
  const KrylovResult r = gmres(op, id, b, 1e-12, 500, 10);  // forces restarts
  ASSERT_TRUE(r.converged);
  EXPECT_LE((a * r.x - b).norm(), 1e-11 * b.norm());
  EXPECT_LE(r.relative_residual, 1e-12);
  const KrylovResult zero = gmres(op, id, Eigen::VectorXd::Zero(n), 1e-12, 10, 10);
  EXPECT_TRUE(zero.converged);
  EXPECT_EQ(zero.x.norm(), 0.0);
}

TEST(Predict, ShapesAndSymmetrization) {
  Rng rng(14);
  const TrainingSet ts = random_training_set(rng, 6);
  const RankModel m = train(ts, 1.0);
  const Eigen::MatrixXd gq = gaussian(rng, 3, 6), gd = gaussian(rng, 4, 6);
  const Eigen::MatrixXd h = predict(m, gq, gd);
  ASSERT_EQ(h.rows(), 3);
  ASSERT_EQ(h.cols(), 4);
  EXPECT_NEAR(h(1, 2), (gq.row(1) * m.coefficients * gd.row(2).transpose())(0, 0), 1e-12);
  EXPECT_THROW(predict(m, gaussian(rng, 3, 5), gd), DataError);
  EXPECT_THROW(symmetrize_predictions(h), DataError);
  const Eigen::MatrixXd sq = predict(m, gq, gq);
  const Eigen::MatrixXd s = symmetrize_predictions(sq);
  EXPECT_TRUE((s.array() == s.transpose().array()).all());
}

TEST(Predict, InSampleFitImprovesWithSmallLambda) {
  Rng rng(15);
  const TrainingSet ts = random_training_set(rng, 8, 8);
  const double loose = rank_loss(kron_matvec(ts.kernel, train(ts, 1e3).coefficients), ts.labels);
  const double tight = rank_loss(kron_matvec(ts.kernel, train(ts, 1e-3).coefficients), ts.labels);
  EXPECT_LT(tight, loose);
}

TEST(UnsupervisedScores, ExcludesQueryAndKeepsOrder) {
  IdIndex ids(std::vector<std::string>{"a", "b", "c"});
  Eigen::MatrixXd g(3, 3);
  g << 1, 0.2, 0.7, 0.2, 1, 0.1, 0.7, 0.1, 1;
  const auto k = KernelMatrix::checked(ids, g);
  const auto s = unsupervised_scores(k, "b");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].id, "a");
  EXPECT_EQ(s[0].score, 0.2);
  EXPECT_EQ(s[1].id, "c");
  EXPECT_THROW(unsupervised_scores(k, "z"), DataError);
}

TEST(ModelIo, RoundTripAndHashCheck) {
  Rng rng(16);
  const TrainingSet ts = random_training_set(rng, 5);
  const RankModel m = train(ts, 0.5);
  std::ostringstream csv, meta;
  write_model_coefficients(csv, m);
  meta << model_metadata(m).dump();
  std::istringstream csv_in(csv.str()), meta_in(meta.str());
  const RankModel back = read_model(csv_in, meta_in);
  EXPECT_EQ(back.train_ids, m.train_ids);
  EXPECT_TRUE((back.coefficients.array() == m.coefficients.array()).all());
  EXPECT_EQ(back.lambda, m.lambda);
  EXPECT_EQ(back.solver, m.solver);

  nlohmann::json j = model_metadata(m);
  j["train_ids_hash"] = "0000000000000000";
  std::istringstream csv_again(csv.str()), bad_meta(j.dump());
  EXPECT_THROW(read_model(csv_again, bad_meta), DataError);
}

}  // namespace
}  // namespace condrank

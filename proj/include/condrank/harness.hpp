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

// Experiment protocol: seeded outer/inner fold plans, the unsupervised
// baseline, and nested cross-validation for the supervised ranker.
//
// Within an outer fold every test object is a query against the other
// test objects; no training object is ranked and no test label reaches a
// solver. Inner folds do the same with validation objects.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "condrank/ec.hpp"
#include "condrank/errors.hpp"
#include "condrank/kernel.hpp"
#include "condrank/matrix.hpp"
#include "condrank/metrics.hpp"
#include "condrank/parallel.hpp"
#include "condrank/random.hpp"
#include "condrank/rankrls.hpp"

namespace condrank {

// Powers of ten from 1e-4 to 1e5, written out so every value is exact.
inline std::vector<double> default_lambda_grid() {
  return {1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3, 1e4, 1e5};
}

struct ExperimentConfig {
  std::string similarity_path;
  std::string labels_path;
  std::string output_dir;
  std::string method;  // report column name; empty picks a default
  std::vector<double> lambda_grid = default_lambda_grid();
  int outer_folds = 4;
  int inner_folds = 10;
  int relevance_threshold = kDefaultRelevanceThreshold;
  GainFunction gain = GainFunction::kLinear;
  std::uint64_t seed = 42;
  SolverOptions solver;
  unsigned workers = 1;  // 0 = one per hardware thread

  void validate() const {
    if (outer_folds < 2) throw ConfigError("outer_folds must be >= 2");
    if (inner_folds < 2) throw ConfigError("inner_folds must be >= 2");
    if (lambda_grid.empty()) throw ConfigError("lambda_grid must not be empty");
    for (double l : lambda_grid)
      if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambda_grid values must be finite and > 0");
    if (relevance_threshold < 1 || relevance_threshold > kMaxGrade)
      throw ConfigError("relevance_threshold must be in 1..4");
    solver.validate();
  }

  MetricOptions metric_options() const { return {relevance_threshold, gain}; }
};

inline std::string_view to_string(GainFunction g) { return g == GainFunction::kLinear ? "linear" : "exponential"; }

inline GainFunction parse_gain(std::string_view s) {
  if (s == "linear") return GainFunction::kLinear;
  if (s == "exponential") return GainFunction::kExponential;
  throw ConfigError("unknown gain '" + std::string(s) + "' (expected linear or exponential)");
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"similarity", c.similarity_path},
          {"labels", c.labels_path},
          {"output_dir", c.output_dir},
          {"method", c.method},
          {"lambda_grid", c.lambda_grid},
          {"outer_folds", c.outer_folds},
          {"inner_folds", c.inner_folds},
          {"relevance_threshold", c.relevance_threshold},
          {"gain", std::string(to_string(c.gain))},
          {"seed", c.seed},
          {"workers", c.workers},
          {"solver",
           {{"mode", std::string(to_string(c.solver.mode))},
            {"tol", c.solver.cg_tol},
            {"max_iters", c.solver.max_iters},
            {"direct_threshold", c.solver.direct_threshold},
            {"restart", c.solver.restart},
            {"precondition", c.solver.precondition}}}};
}

// Reads the keys present in `j` over `base`; unknown keys are rejected so
// typos do not silently fall back to defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  static const std::vector<std::string> kKeys{"similarity", "labels",    "output_dir",          "method",
                                              "lambda_grid", "outer_folds", "inner_folds",       "relevance_threshold",
                                              "gain",       "seed",      "workers",             "solver"};
  static const std::vector<std::string> kSolverKeys{"mode", "tol", "max_iters", "direct_threshold", "restart",
                                                    "precondition"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, _] : j.items())
      if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) throw ConfigError("unknown config key '" + key + "'");
    if (j.contains("similarity")) base.similarity_path = j["similarity"].get<std::string>();
    if (j.contains("labels")) base.labels_path = j["labels"].get<std::string>();
    if (j.contains("output_dir")) base.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("method")) base.method = j["method"].get<std::string>();
    if (j.contains("lambda_grid")) base.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    if (j.contains("outer_folds")) base.outer_folds = j["outer_folds"].get<int>();
    if (j.contains("inner_folds")) base.inner_folds = j["inner_folds"].get<int>();
    if (j.contains("relevance_threshold")) base.relevance_threshold = j["relevance_threshold"].get<int>();
    if (j.contains("gain")) base.gain = parse_gain(j["gain"].get<std::string>());
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) base.workers = j["workers"].get<unsigned>();
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      if (!s.is_object()) throw ConfigError("config 'solver' must be an object");
      for (const auto& [key, _] : s.items())
        if (std::find(kSolverKeys.begin(), kSolverKeys.end(), key) == kSolverKeys.end())
          throw ConfigError("unknown solver config key '" + key + "'");
      if (s.contains("mode")) base.solver.mode = parse_solver_mode(s["mode"].get<std::string>());
      if (s.contains("tol")) base.solver.cg_tol = s["tol"].get<double>();
      if (s.contains("max_iters")) base.solver.max_iters = s["max_iters"].get<int>();
      if (s.contains("direct_threshold")) base.solver.direct_threshold = s["direct_threshold"].get<int>();
      if (s.contains("restart")) base.solver.restart = s["restart"].get<int>();
      if (s.contains("precondition")) base.solver.precondition = s["precondition"].get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return base;
}

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;  // test ids of an outer fold, validation ids of an inner fold
};

struct OuterFold {
  Split split;
  std::vector<Split> inner;  // empty when the lambda grid has a single entry
};

struct FoldPlan {
  std::vector<OuterFold> folds;
};

namespace detail {

// Shuffles positions [0, n) and cuts them into k near-equal parts, larger
// parts first. Each part and its complement are returned in input order.
inline std::vector<Split> partition(const std::vector<std::string>& ids, int k, std::uint64_t seed) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n = ids.size(), base = n / static_cast<std::size_t>(k), extra = n % static_cast<std::size_t>(k);
  std::vector<int> part(n);
  std::size_t at = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) part[order[at++]] = f;
  }
  std::vector<Split> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (int f = 0; f < k; ++f) (part[i] == f ? out[f].test : out[f].train).push_back(ids[i]);
  return out;
}

}  // namespace detail

inline FoldPlan make_folds(const std::vector<std::string>& ids, const ExperimentConfig& cfg) {
  cfg.validate();
  if (ids.size() < 2 * static_cast<std::size_t>(cfg.outer_folds))
    throw DataError("too few objects: " + std::to_string(ids.size()) + " ids for " + std::to_string(cfg.outer_folds) +
                    " outer folds (need at least two per fold)");
  FoldPlan plan;
  auto outer = detail::partition(ids, cfg.outer_folds, derive_seed(cfg.seed, 0));
  for (std::size_t f = 0; f < outer.size(); ++f) {
    OuterFold fold;
    fold.split = std::move(outer[f]);
    if (cfg.lambda_grid.size() > 1) {
      if (fold.split.train.size() < 2 * static_cast<std::size_t>(cfg.inner_folds))
        throw DataError("too few objects: outer fold " + std::to_string(f) + " has " +
                        std::to_string(fold.split.train.size()) + " training ids for " +
                        std::to_string(cfg.inner_folds) + " inner folds");
      fold.inner = detail::partition(fold.split.train, cfg.inner_folds, derive_seed(cfg.seed, 1 + f));
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

// A sanitized kernel and the labels of the same objects.
struct Dataset {
  KernelMatrix kernel;
  CatalyticSimilarityMatrix labels;
};

// Sanitizes the full similarity matrix once (transductive: test objects'
// similarities are visible, their labels are not) and checks that every
// object has exactly one label.
inline Dataset prepare_dataset(const SimilarityMatrix& s, const std::vector<EcLabel>& labels) {
  CatalyticSimilarityMatrix q = catalytic_matrix(labels);
  for (const auto& id : s.ids())
    if (!q.index().contains(id)) throw DataError("object '" + id + "' has no EC label");
  if (q.size() != s.ids().size()) {
    for (const auto& id : q.ids())
      if (!s.index().contains(id)) throw DataError("labelled object '" + id + "' is missing from the similarity matrix");
  }
  return {sanitize(s), std::move(q)};
}

namespace detail {

// QueryEvals for a square score matrix over `ids`: row i is the query,
// every other column its database.
inline std::vector<QueryEval> query_evals(const std::vector<std::string>& ids, const Eigen::MatrixXd& scores,
                                          const CatalyticSimilarityMatrix& q) {
  const auto pos = q.index().positions(ids);
  std::vector<QueryEval> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    QueryEval e;
    e.query_id = ids[i];
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (j == i) continue;
      e.db_ids.push_back(ids[j]);
      e.scores.push_back(scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      e.grades.push_back(q(pos[i], pos[j]));
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string default_method(const ExperimentConfig& cfg, const char* fallback) {
  return cfg.method.empty() ? fallback : cfg.method;
}

}  // namespace detail

inline EvalReport run_unsupervised(const Dataset& data, const FoldPlan& plan, const ExperimentConfig& cfg) {
  std::vector<QueryEval> all;
  for (const auto& fold : plan.folds) {
    const auto& ids = fold.split.test;
    const auto pos = data.kernel.index().positions(ids);
    auto qs = detail::query_evals(ids, data.kernel.slice(pos, pos), data.labels);
    all.insert(all.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
  }
  return evaluate(detail::default_method(cfg, "unsupervised"), all, cfg.metric_options());
}

struct InnerSelection {
  std::vector<double> mean_ra;  // validation RA per grid lambda; -inf when undefined
  double best_lambda = 0.0;
};

struct FoldOutcome {
  std::vector<InnerSelection> inner;
  double lambda = 0.0;  // lower median of the inner bests, or the single grid value
  RankModel model;
};

struct SupervisedResult {
  EvalReport report;
  std::vector<FoldOutcome> folds;
};

namespace detail {

inline TrainingSet training_set(const Dataset& data, const std::vector<std::string>& ids) {
  return make_training_set(data.kernel, data.labels, ids);
}

// Square symmetrized score matrix over `ids` from a model.
inline Eigen::MatrixXd predict_square(const RankModel& model, const KernelMatrix& k,
                                      const std::vector<std::string>& ids) {
  return symmetrize_predictions(predict(model, k, ids, ids));
}

inline double mean_ra(const std::vector<QueryEval>& qs) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& q : qs)
    if (auto v = ranking_accuracy(q)) {
      sum += *v;
      ++count;
    }
  return count == 0 ? -std::numeric_limits<double>::infinity() : sum / static_cast<double>(count);
}

inline SolverError annotate(const SolverError& e, const std::string& where) {
  return SolverError(where + ": " + e.what(), e.residual());
}

// Lower median: stays on the grid for an even count.
inline double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace detail

inline InnerSelection select_lambda(const Dataset& data, const Split& split, const ExperimentConfig& cfg) {
  const TrainingSet ts = detail::training_set(data, split.train);
  const RankRlsSystem sys(ts);
  InnerSelection sel;
  for (double lambda : cfg.lambda_grid) {
    const RankModel model = train(sys, ts.ids, lambda, cfg.solver);
    const auto qs = detail::query_evals(split.test, detail::predict_square(model, data.kernel, split.test), data.labels);
    sel.mean_ra.push_back(detail::mean_ra(qs));
  }
  // First maximum in grid order wins ties.
  const auto best = std::max_element(sel.mean_ra.begin(), sel.mean_ra.end());
  sel.best_lambda = cfg.lambda_grid[static_cast<std::size_t>(best - sel.mean_ra.begin())];
  return sel;
}

inline SupervisedResult run_supervised(const Dataset& data, const FoldPlan& plan, const ExperimentConfig& cfg) {
  cfg.validate();
  SupervisedResult result;
  result.folds.resize(plan.folds.size());

  // Inner model selection: (outer, inner) tasks write their own slots.
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    result.folds[f].inner.resize(plan.folds[f].inner.size());
    for (std::size_t i = 0; i < plan.folds[f].inner.size(); ++i) tasks.push_back({f, i});
  }
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t t) {
    const auto [f, i] = tasks[t];
    try {
      result.folds[f].inner[i] = select_lambda(data, plan.folds[f].inner[i], cfg);
    } catch (const SolverError& e) {
      throw detail::annotate(e, "outer fold " + std::to_string(f) + ", inner fold " + std::to_string(i));
    }
  });

  parallel_for(plan.folds.size(), cfg.workers, [&](std::size_t f) {
    FoldOutcome& out = result.folds[f];
    if (out.inner.empty()) {
      out.lambda = cfg.lambda_grid.front();
    } else {
      std::vector<double> bests;
      for (const auto& s : out.inner) bests.push_back(s.best_lambda);
      out.lambda = detail::lower_median(bests);
    }
    try {
      out.model = train(detail::training_set(data, plan.folds[f].split.train), out.lambda, cfg.solver);
    } catch (const SolverError& e) {
      throw detail::annotate(e, "outer fold " + std::to_string(f));
    }
  });

  std::vector<QueryEval> all;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& ids = plan.folds[f].split.test;
    auto qs = detail::query_evals(ids, detail::predict_square(result.folds[f].model, data.kernel, ids), data.labels);
    all.insert(all.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
  }
  result.report = evaluate(detail::default_method(cfg, "supervised"), all, cfg.metric_options());
  return result;
}

}  // namespace condrank

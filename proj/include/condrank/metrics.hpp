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

// Per-query ranking metrics against graded relevance Q in {0..4}.
//
// Tie handling:
//  * pairwise metrics (RA, AUC, ROC area) count a tied score pair as 1/2;
//  * position metrics (MAP, nDCG) sort by descending score and break ties
//    by ascending database id.
//
// RA counts, over all database pairs with grade(e) > grade(e'), the
// fraction ordered concordantly: 1 if score(e) > score(e'), 1/2 on a tie.
// A perfect ranking scores 1. AUC, MAP and the ROC curve use bipartite
// relevance grade >= threshold (default 3). nDCG uses the raw grade as
// gain with a log2(rank + 1) discount unless configured otherwise.
//
// A metric that is undefined for a query (no discordant grades, a single
// relevance class, no relevant object, all-zero grades) yields nullopt;
// the query is skipped and counted, never imputed.
//
// ROC curves pool every (query, object) score into one list (micro
// average); reported AUC values are per-query means (macro average).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "condrank/ec.hpp"
#include "condrank/errors.hpp"

namespace condrank {

inline constexpr int kDefaultRelevanceThreshold = 3;

struct QueryEval {
  std::string query_id;
  std::vector<std::string> db_ids;
  std::vector<double> scores;
  std::vector<int> grades;

  void validate() const {
    if (scores.size() != grades.size() || scores.size() != db_ids.size())
      throw DataError("query '" + query_id + "': ids, scores and grades differ in length");
    if (scores.empty()) throw DataError("query '" + query_id + "': empty database");
    for (std::size_t i = 0; i < grades.size(); ++i) {
      if (grades[i] < 0 || grades[i] > kMaxGrade)
        throw DataError("query '" + query_id + "': grade " + std::to_string(grades[i]) + " outside 0..4");
      if (!std::isfinite(scores[i])) throw DataError("query '" + query_id + "': non-finite score");
      if (db_ids[i] == query_id) throw DataError("query '" + query_id + "' appears in its own database");
    }
  }
};

namespace detail {

// Doubled concordance count over pairs with grade[a] > grade[b]:
// 2 per concordant pair, 1 per tie. Returns {doubled, pairs}.
inline std::pair<long long, long long> concordance(const std::vector<double>& scores, const std::vector<int>& grades,
                                                   int levels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<long long> below(levels, 0), total(levels, 0), group(levels, 0);
  long long doubled = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) ++end;
    std::fill(group.begin(), group.end(), 0);
    for (std::size_t k = start; k < end; ++k) ++group[grades[order[k]]];
    for (int g = 0; g < levels; ++g) {
      if (group[g] == 0) continue;
      long long lower_below = 0, lower_tied = 0;
      for (int h = 0; h < g; ++h) {
        lower_below += below[h];
        lower_tied += group[h];
      }
      doubled += group[g] * (2 * lower_below + lower_tied);
    }
    for (int g = 0; g < levels; ++g) below[g] += group[g];
    start = end;
  }
  for (int g : grades) ++total[g];
  long long pairs = 0, seen = 0;
  for (int g = 0; g < levels; ++g) {
    pairs += total[g] * seen;
    seen += total[g];
  }
  return {doubled, pairs};
}

// Positions sorted by descending score, ties by ascending id.
inline std::vector<std::size_t> ranked_positions(const QueryEval& q) {
  std::vector<std::size_t> order(q.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (q.scores[a] != q.scores[b]) return q.scores[a] > q.scores[b];
    return q.db_ids[a] < q.db_ids[b];
  });
  return order;
}

}  // namespace detail

inline std::optional<double> ranking_accuracy(const QueryEval& q) {
  q.validate();
  auto [doubled, pairs] = detail::concordance(q.scores, q.grades, kMaxGrade + 1);
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(doubled) / static_cast<double>(2 * pairs);
}

// Mann-Whitney statistic with mid-ranks for ties.
inline std::optional<double> auc_bipartite(const QueryEval& q, int threshold = kDefaultRelevanceThreshold) {
  q.validate();
  const std::size_t m = q.scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q.scores[a] < q.scores[b]; });
  // Doubled ranks keep mid-ranks integral: rank r in 1..m maps to 2r.
  long long doubled_rank_sum = 0, positives = 0;
  for (std::size_t start = 0; start < m;) {
    std::size_t end = start;
    while (end < m && q.scores[order[end]] == q.scores[order[start]]) ++end;
    const long long doubled_mid = static_cast<long long>(start + 1 + end);  // 2 * (start+1 + end)/2
    for (std::size_t k = start; k < end; ++k)
      if (q.grades[order[k]] >= threshold) {
        doubled_rank_sum += doubled_mid;
        ++positives;
      }
    start = end;
  }
  const long long negatives = static_cast<long long>(m) - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const long long doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) / static_cast<double>(2 * positives * negatives);
}

inline std::optional<double> mean_average_precision_query(const QueryEval& q,
                                                          int threshold = kDefaultRelevanceThreshold) {
  q.validate();
  const auto order = detail::ranked_positions(q);
  double sum = 0.0;
  int hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (q.grades[order[k]] >= threshold) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / hits;
}

enum class GainFunction { kLinear, kExponential };

inline double gain(int grade, GainFunction f) {
  return f == GainFunction::kLinear ? static_cast<double>(grade) : std::exp2(grade) - 1.0;
}

inline double dcg(const std::vector<int>& ranked_grades, GainFunction f) {
  double total = 0.0;
  for (std::size_t k = 0; k < ranked_grades.size(); ++k)
    total += gain(ranked_grades[k], f) / std::log2(static_cast<double>(k) + 2.0);
  return total;
}

inline std::optional<double> ndcg_query(const QueryEval& q, GainFunction f = GainFunction::kLinear) {
  q.validate();
  const auto order = detail::ranked_positions(q);
  std::vector<int> ranked, ideal(q.grades);
  ranked.reserve(order.size());
  for (auto i : order) ranked.push_back(q.grades[i]);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  if (ideal.front() == 0) return std::nullopt;
  return dcg(ranked, f) / dcg(ideal, f);
}

struct RocPoint {
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double pooled_auc = 0.0;  // rank-sum AUC of the pooled scores

  double area() const {
    double a = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      a += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
    return a;
  }
};

// Pooled curve; one point per distinct score threshold, so tied scores
// produce a diagonal segment.
inline RocCurve roc_curve(const std::vector<QueryEval>& qs, int threshold = kDefaultRelevanceThreshold) {
  std::vector<std::pair<double, bool>> pool;
  for (const auto& q : qs) {
    q.validate();
    for (std::size_t i = 0; i < q.scores.size(); ++i) pool.push_back({q.scores[i], q.grades[i] >= threshold});
  }
  long long pos = 0;
  for (const auto& p : pool) pos += p.second;
  const long long neg = static_cast<long long>(pool.size()) - pos;
  if (pos == 0 || neg == 0) throw DataError("ROC curve needs both relevant and irrelevant objects in the pool");

  std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  long long tp = 0, fp = 0;
  // Doubled Mann-Whitney count accumulated alongside the sweep.
  long long doubled = 0;
  for (std::size_t start = 0; start < pool.size();) {
    std::size_t end = start;
    long long gp = 0, gn = 0;
    while (end < pool.size() && pool[end].first == pool[start].first) {
      (pool[end].second ? gp : gn) += 1;
      ++end;
    }
    doubled += gn * (2 * tp + gp);
    tp += gp;
    fp += gn;
    curve.points.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    start = end;
  }
  curve.points.back() = {1.0, 1.0};
  curve.pooled_auc = static_cast<double>(doubled) / static_cast<double>(2 * pos * neg);
  return curve;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

inline Summary aggregate(const std::vector<double>& values) {
  if (values.empty()) throw DataError("cannot aggregate an empty list of metric values");
  Summary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

enum class Metric { kRankingAccuracy, kAuc, kMap, kNdcg };

inline constexpr std::array<Metric, 4> kAllMetrics{Metric::kRankingAccuracy, Metric::kAuc, Metric::kMap,
                                                    Metric::kNdcg};

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kRankingAccuracy: return "RA";
    case Metric::kAuc: return "AUC";
    case Metric::kMap: return "MAP";
    case Metric::kNdcg: return "nDCG";
  }
  return "?";
}

struct MetricOptions {
  int threshold = kDefaultRelevanceThreshold;
  GainFunction gain = GainFunction::kLinear;
};

inline std::optional<double> evaluate_metric(Metric m, const QueryEval& q, const MetricOptions& opts = {}) {
  switch (m) {
    case Metric::kRankingAccuracy: return ranking_accuracy(q);
    case Metric::kAuc: return auc_bipartite(q, opts.threshold);
    case Metric::kMap: return mean_average_precision_query(q, opts.threshold);
    case Metric::kNdcg: return ndcg_query(q, opts.gain);
  }
  return std::nullopt;
}

struct QueryValue {
  std::string query;
  double value;
};

struct MetricReport {
  std::vector<QueryValue> per_query;
  std::vector<std::string> skipped;
  Summary summary;
  bool defined = false;  // false when every query was skipped
};

struct EvalReport {
  std::string method;
  std::array<MetricReport, 4> metrics;  // indexed by Metric
  std::vector<RocPoint> roc;
  double pooled_auc = 0.0;
  std::size_t queries = 0;

  const MetricReport& metric(Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
  MetricReport& metric(Metric m) { return metrics[static_cast<std::size_t>(m)]; }
};

// Evaluates every query in order; aggregation follows the input order so
// reports are bitwise stable for fixed inputs.
inline EvalReport evaluate(std::string method, const std::vector<QueryEval>& qs, const MetricOptions& opts = {}) {
  EvalReport r;
  r.method = std::move(method);
  r.queries = qs.size();
  for (Metric m : kAllMetrics) {
    MetricReport& mr = r.metric(m);
    std::vector<double> values;
    for (const auto& q : qs) {
      if (auto v = evaluate_metric(m, q, opts)) {
        mr.per_query.push_back({q.query_id, *v});
        values.push_back(*v);
      } else {
        mr.skipped.push_back(q.query_id);
      }
    }
    if (!values.empty()) {
      mr.summary = aggregate(values);
      mr.defined = true;
    }
  }
  if (!qs.empty()) {
    try {
      RocCurve curve = roc_curve(qs, opts.threshold);
      r.roc = std::move(curve.points);
      r.pooled_auc = curve.pooled_auc;
    } catch (const DataError&) {
      r.roc.clear();  // one-class pool: no curve
    }
  }
  return r;
}

}  // namespace condrank

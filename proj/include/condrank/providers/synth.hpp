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

// Synthetic benchmark with EC-structured similarities.
//
// Every EC prefix (level 1 "a", level 2 "a.b", ...) owns a latent unit
// vector. Level-1 vectors are mutually orthonormal; deeper ones are drawn
// independently. An object's embedding is
//
//   e = sum_l w_l u(prefix_l) + sigma * N(0, I_d)
//
// and S(i, j) = cos(e_i, e_j) + obs_noise * N(0, 1), drawn independently
// for each ordered off-diagonal pair (S is therefore not symmetric).
// Expected similarity grows with the number of shared EC levels.
//
// Defaults: level weights (4, 2, 1, 0.5) for levels 1..4, sigma 0.5,
// obs_noise 0.6, dim 32. The class list
// defaults to the 21 enzyme classes of the reference benchmark with the
// counts of its second, curated data set (561 enzymes); `total` rescales
// those counts proportionally.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "condrank/ec.hpp"
#include "condrank/errors.hpp"
#include "condrank/matrix.hpp"
#include "condrank/random.hpp"

namespace condrank {

struct ClassCount {
  EcNumber ec;
  int count;
};

// The 21 classes with counts of the first (1556) and second (561) set.
inline std::vector<ClassCount> reference_classes(bool curated_set = true) {
  struct Row {
    std::array<int, 4> ec;
    int set1, set2;
  };
  static constexpr Row rows[] = {
      {{1, 1, 1, 1}, 23, 15},    {{1, 1, 1, 21}, 35, 30},  {{1, 5, 1, 3}, 110, 6},   {{1, 11, 1, 5}, 92, 31},
      {{1, 14, 15, 1}, 30, 36},  {{2, 1, 1, 45}, 63, 22},  {{2, 1, 1, 98}, 5, 43},   {{2, 4, 1, 1}, 43, 40},
      {{2, 4, 2, 29}, 32, 16},   {{2, 7, 11, 1}, 304, 24}, {{3, 1, 1, 7}, 23, 13},   {{3, 1, 3, 48}, 151, 28},
      {{3, 4, 21, 4}, 118, 72},  {{3, 4, 21, 5}, 87, 51},  {{3, 5, 2, 6}, 153, 8},   {{4, 1, 2, 13}, 48, 4},
      {{4, 2, 1, 1}, 186, 76},   {{4, 2, 1, 20}, 13, 7},   {{5, 3, 1, 5}, 18, 21},   {{5, 3, 3, 1}, 14, 10},
      {{6, 3, 2, 1}, 8, 8},
  };
  std::vector<ClassCount> out;
  for (const auto& r : rows)
    out.push_back({EcNumber(r.ec[0], r.ec[1], r.ec[2], r.ec[3]), curated_set ? r.set2 : r.set1});
  return out;
}

// Largest-remainder rescaling of class counts to `total`, keeping every
// class at >= 1 member.
inline std::vector<ClassCount> rescale_counts(std::vector<ClassCount> classes, int total) {
  if (classes.empty()) throw ConfigError("synthetic benchmark needs at least one class");
  if (total < static_cast<int>(classes.size()))
    throw ConfigError("cannot rescale " + std::to_string(classes.size()) + " classes to " + std::to_string(total) +
                      " objects with every class non-empty");
  double sum = 0.0;
  for (const auto& c : classes) sum += c.count;
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const double exact = classes[i].count * total / sum;
    int base = std::max(1, static_cast<int>(std::floor(exact)));
    remainders.push_back({exact - std::floor(exact), i});
    classes[i].count = base;
    assigned += base;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % remainders.size()) {
    ++classes[remainders[k].second].count;
    ++assigned;
  }
  // Classes lifted to 1 may overshoot; take back from the largest classes.
  while (assigned > total) {
    auto it = std::max_element(classes.begin(), classes.end(),
                               [](const ClassCount& a, const ClassCount& b) { return a.count < b.count; });
    --it->count;
    --assigned;
  }
  return classes;
}

struct SynthConfig {
  std::vector<ClassCount> classes = reference_classes();
  int total = 0;  // > 0 rescales class counts to this many objects
  int dim = 32;
  std::array<double, 4> level_weights{4.0, 2.0, 1.0, 0.5};
  double sigma = 0.5;
  double obs_noise = 0.6;
  std::uint64_t seed = 42;

  void validate() const {
    if (classes.empty()) throw ConfigError("synthetic benchmark needs at least one class");
    for (const auto& c : classes)
      if (c.count < 1) throw ConfigError("class " + c.ec.str() + " has count < 1");
    if (total < 0) throw ConfigError("total must be >= 0");
    if (!(sigma >= 0.0) || !(obs_noise >= 0.0)) throw ConfigError("noise levels must be >= 0");
    for (double w : level_weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("level weights must be finite and >= 0");
    int top = 0;
    std::vector<int> seen;
    for (const auto& c : classes)
      if (std::find(seen.begin(), seen.end(), c.ec.level(0)) == seen.end()) {
        seen.push_back(c.ec.level(0));
        ++top;
      }
    if (dim < top) throw ConfigError("dim must be at least the number of distinct top-level classes (" +
                                     std::to_string(top) + ")");
  }
};

struct SynthData {
  std::vector<EcLabel> labels;
  SimilarityMatrix similarity;
};

inline SynthData synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto classes = cfg.total > 0 ? rescale_counts(cfg.classes, cfg.total) : cfg.classes;
  Rng rng(cfg.seed);
  const int d = cfg.dim;

  auto gaussian = [&]() {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    return v;
  };

  // Latent vectors keyed by (level, prefix digits), created in class order.
  std::map<std::vector<int>, Eigen::VectorXd> latent;
  std::vector<Eigen::VectorXd> top_level;
  for (const auto& c : classes) {
    for (int level = 1; level <= kEcLevels; ++level) {
      std::vector<int> key(c.ec.digits().begin(), c.ec.digits().begin() + level);
      if (latent.count(key)) continue;
      Eigen::VectorXd v = gaussian();
      if (level == 1) {
        for (const auto& u : top_level) v -= u.dot(v) * u;
        top_level.push_back(v.normalized());
        latent[key] = top_level.back();
      } else {
        latent[key] = v.normalized();
      }
    }
  }

  std::vector<EcLabel> labels;
  std::vector<Eigen::VectorXd> emb;
  int serial = 0;
  char idbuf[32];
  for (const auto& c : classes) {
    for (int k = 0; k < c.count; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
      for (int level = 1; level <= kEcLevels; ++level) {
        std::vector<int> key(c.ec.digits().begin(), c.ec.digits().begin() + level);
        e += cfg.level_weights[level - 1] * latent.at(key);
      }
      if (cfg.sigma > 0.0) e += cfg.sigma * gaussian();
      std::snprintf(idbuf, sizeof idbuf, "E%04d", ++serial);
      labels.push_back({idbuf, c.ec});
      emb.push_back(std::move(e));
    }
  }

  const auto n = static_cast<Eigen::Index>(emb.size());
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    norms(i) = emb[i].norm();
    if (!(norms(i) > 0.0)) throw ConfigError("synthetic embedding collapsed to zero; use non-zero level weights");
  }
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        s(i, j) = 1.0;
        continue;
      }
      s(i, j) = emb[i].dot(emb[j]) / (norms(i) * norms(j));
      if (cfg.obs_noise > 0.0) s(i, j) += cfg.obs_noise * rng.normal();
    }

  std::vector<std::string> ids;
  for (const auto& l : labels) ids.push_back(l.id);
  return {std::move(labels), SimilarityMatrix(std::move(ids), std::move(s))};
}

}  // namespace condrank

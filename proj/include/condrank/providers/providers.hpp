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

// Pairwise similarity matrices from sequences and point clouds, and the
// point-cloud JSON format:
//
//   {"id": "1abc", "centers": [{"x": 1.0, "y": 2.0, "z": 3.0, "label": "donor"}, ...]}
//
// A file holds one such object or an array of them.

#pragma once

#include <istream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "condrank/matrix.hpp"
#include "condrank/parallel.hpp"
#include "condrank/providers/cavity.hpp"
#include "condrank/providers/smith_waterman.hpp"

namespace condrank {

// Every unordered pair (i, j), i <= j, in row-major order.
inline std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(n * (n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) out.push_back({i, j});
  return out;
}

inline SimilarityMatrix sw_similarity_matrix(std::span<const Sequence> seqs, const AlignmentParams& params = {},
                                             unsigned workers = 0) {
  std::vector<std::string> ids;
  for (const auto& s : seqs) ids.push_back(s.id);
  IdIndex index(std::move(ids));
  const auto pairs = upper_pairs(seqs.size());
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t p) {
    values[p] = smith_waterman_identity(seqs[pairs[p].first], seqs[pairs[p].second], params).identity;
  });
  const auto n = static_cast<Eigen::Index>(seqs.size());
  Eigen::MatrixXd m(n, n);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(pairs[p].first), j = static_cast<Eigen::Index>(pairs[p].second);
    m(i, j) = m(j, i) = values[p];
  }
  return SimilarityMatrix(std::move(index), std::move(m));
}

struct McsMatrix {
  SimilarityMatrix similarity;
  // Object-id pairs whose clique search hit the budget (values are lower bounds).
  std::vector<std::pair<std::string, std::string>> truncated;
};

inline McsMatrix mcs_similarity_matrix(std::span<const LabeledPointCloud> clouds,
                                       double epsilon = kDefaultEdgeTolerance,
                                       long long budget = kDefaultCliqueBudget, unsigned workers = 0) {
  std::vector<std::string> ids;
  std::vector<CavityGraph> graphs;
  for (const auto& c : clouds) {
    ids.push_back(c.id);
    graphs.push_back(cloud_to_graph(c));
  }
  IdIndex index(std::move(ids));
  // Self pairs are exactly 1 (the identity mapping) and skip the search.
  auto pairs = upper_pairs(clouds.size());
  std::erase_if(pairs, [](const auto& p) { return p.first == p.second; });
  std::vector<McsResult> results(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t p) {
    results[p] = mcs_similarity(graphs[pairs[p].first], graphs[pairs[p].second], epsilon, budget);
  });
  const auto n = static_cast<Eigen::Index>(clouds.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  McsMatrix out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = results[p].similarity;
    if (results[p].lower_bound) out.truncated.push_back({index[i], index[j]});
  }
  out.similarity = SimilarityMatrix(std::move(index), std::move(m));
  return out;
}

inline SimilarityMatrix fp_similarity_matrix(std::span<const LabeledPointCloud> clouds,
                                             double bin_width = kDefaultBinWidth,
                                             double max_dist = kDefaultMaxDistance, unsigned workers = 0) {
  std::vector<std::string> ids;
  std::vector<Fingerprint> fps(clouds.size());
  for (const auto& c : clouds) ids.push_back(c.id);
  IdIndex index(std::move(ids));
  parallel_for(clouds.size(), workers,
               [&](std::size_t i) { fps[i] = fingerprint(cloud_to_graph(clouds[i]), bin_width, max_dist); });
  const auto n = static_cast<Eigen::Index>(clouds.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) m(i, j) = m(j, i) = jaccard(fps[i], fps[j]);
  return SimilarityMatrix(std::move(index), std::move(m));
}

inline LabeledPointCloud point_cloud_from_json(const nlohmann::json& j) {
  try {
    LabeledPointCloud c;
    c.id = j.at("id").get<std::string>();
    for (const auto& p : j.at("centers"))
      c.centers.push_back({p.at("x").get<double>(), p.at("y").get<double>(), p.at("z").get<double>(),
                           parse_pseudocenter(p.at("label").get<std::string>())});
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("point cloud JSON: ") + e.what());
  }
}

inline nlohmann::json point_cloud_to_json(const LabeledPointCloud& c) {
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& p : c.centers)
    centers.push_back({{"x", p.x}, {"y", p.y}, {"z", p.z}, {"label", std::string(to_string(p.label))}});
  return {{"id", c.id}, {"centers", std::move(centers)}};
}

inline std::vector<LabeledPointCloud> read_point_clouds(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("point cloud JSON: ") + e.what());
  }
  std::vector<LabeledPointCloud> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(point_cloud_from_json(item));
  } else {
    out.push_back(point_cloud_from_json(j));
  }
  return out;
}

}  // namespace condrank

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

// Binding-site representations: labelled point clouds of pseudocenters
// and the complete node-labelled, distance-weighted graphs built on them.
//
// Two graph similarities are provided:
//  * maximum common subgraph under epsilon-tolerant edge matching, found as
//    a maximum clique of the modular product graph. The common subgraph
//    need not be connected;
//  * triangle fingerprints compared by Jaccard similarity.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "condrank/errors.hpp"

namespace condrank {

enum class Pseudocenter : std::uint8_t {
  kDonor,
  kAcceptor,
  kDonorAcceptor,
  kAliphatic,
  kMetal,
  kPi,
  kAromatic,
};

inline constexpr int kPseudocenterTypes = 7;

inline std::string_view to_string(Pseudocenter p) {
  switch (p) {
    case Pseudocenter::kDonor: return "donor";
    case Pseudocenter::kAcceptor: return "acceptor";
    case Pseudocenter::kDonorAcceptor: return "donor-acceptor";
    case Pseudocenter::kAliphatic: return "aliphatic";
    case Pseudocenter::kMetal: return "metal";
    case Pseudocenter::kPi: return "pi";
    case Pseudocenter::kAromatic: return "aromatic";
  }
  return "?";
}

inline Pseudocenter parse_pseudocenter(std::string_view s) {
  for (int i = 0; i < kPseudocenterTypes; ++i) {
    auto p = static_cast<Pseudocenter>(i);
    if (s == to_string(p)) return p;
  }
  throw DataError("unknown pseudocenter label '" + std::string(s) +
                  "' (expected donor, acceptor, donor-acceptor, aliphatic, metal, pi or aromatic)");
}

struct Center {
  double x, y, z;
  Pseudocenter label;
};

struct LabeledPointCloud {
  std::string id;
  std::vector<Center> centers;

  void validate() const {
    if (centers.empty()) throw DataError("point cloud '" + id + "' has no centers");
    for (const auto& c : centers)
      if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(c.z))
        throw DataError("point cloud '" + id + "' has a non-finite coordinate");
  }
};

struct CavityGraph {
  std::vector<Pseudocenter> labels;
  Eigen::MatrixXd weights;  // symmetric, zero diagonal, Angstrom

  std::size_t size() const noexcept { return labels.size(); }
};

inline CavityGraph cloud_to_graph(const LabeledPointCloud& c) {
  c.validate();
  CavityGraph g;
  const auto n = static_cast<Eigen::Index>(c.centers.size());
  g.labels.reserve(c.centers.size());
  for (const auto& p : c.centers) g.labels.push_back(p.label);
  g.weights = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& p = c.centers[i];
      const auto& q = c.centers[j];
      const double d = std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) + (p.z - q.z) * (p.z - q.z));
      g.weights(i, j) = g.weights(j, i) = d;
    }
  return g;
}

// ---------------------------------------------------------------------------
// Maximum common subgraph

inline constexpr double kDefaultEdgeTolerance = 0.2;           // Angstrom
inline constexpr long long kDefaultCliqueBudget = 10'000'000;  // node expansions

struct McsResult {
  double similarity = 0.0;      // clique size / max(|g1|, |g2|)
  std::size_t common_nodes = 0;
  bool lower_bound = false;     // search budget exhausted; value may be low
  long long expansions = 0;
  // Matched node pairs (index in g1, index in g2).
  std::vector<std::pair<std::size_t, std::size_t>> mapping;
};

namespace detail {

class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t n) : words_((n + 63) / 64, 0) {}

  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  bool any() const {
    for (auto w : words_)
      if (w) return true;
    return false;
  }
  std::size_t first() const {
    for (std::size_t w = 0; w < words_.size(); ++w)
      if (words_[w]) return w * 64 + static_cast<std::size_t>(__builtin_ctzll(words_[w]));
    return std::numeric_limits<std::size_t>::max();
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }
  void intersect(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
  }
  void subtract(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
  }
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        const int b = __builtin_ctzll(bits);
        f(w * 64 + static_cast<std::size_t>(b));
        bits &= bits - 1;
      }
    }
  }

 private:
  std::vector<std::uint64_t> words_;
};

// Branch-and-bound maximum clique with a greedy colouring bound
// (Tomita-Seki style). Vertex order within each colour class follows
// vertex index, so the search is deterministic.
class MaxClique {
 public:
  MaxClique(std::vector<Bitset> adj, long long budget) : adj_(std::move(adj)), budget_(budget) {}

  std::vector<std::size_t> run() {
    const std::size_t n = adj_.size();
    Bitset all(n);
    for (std::size_t v = 0; v < n; ++v) all.set(v);
    if (n > 0) expand(all);
    return best_;
  }

  bool exhausted() const noexcept { return exhausted_; }
  long long expansions() const noexcept { return expansions_; }

 private:
  void colour_sort(const Bitset& p, std::vector<std::size_t>& order, std::vector<int>& colour) const {
    Bitset uncoloured = p;
    int k = 0;
    while (uncoloured.any()) {
      ++k;
      Bitset candidates = uncoloured;
      while (candidates.any()) {
        const std::size_t v = candidates.first();
        candidates.reset(v);
        uncoloured.reset(v);
        candidates.subtract(adj_[v]);
        order.push_back(v);
        colour.push_back(k);
      }
    }
  }

  void expand(Bitset p) {
    if (exhausted_) return;
    if (++expansions_ > budget_) {
      exhausted_ = true;
      return;
    }
    std::vector<std::size_t> order;
    std::vector<int> colour;
    colour_sort(p, order, colour);
    for (std::size_t idx = order.size(); idx-- > 0;) {
      if (current_.size() + static_cast<std::size_t>(colour[idx]) <= best_.size()) return;
      const std::size_t v = order[idx];
      current_.push_back(v);
      Bitset next = p;
      next.intersect(adj_[v]);
      if (!next.any()) {
        if (current_.size() > best_.size()) best_ = current_;
      } else {
        expand(next);
      }
      current_.pop_back();
      if (exhausted_) return;
      p.reset(v);
    }
  }

  std::vector<Bitset> adj_;
  long long budget_;
  long long expansions_ = 0;
  bool exhausted_ = false;
  std::vector<std::size_t> current_;
  std::vector<std::size_t> best_;
};

}  // namespace detail

inline McsResult mcs_similarity(const CavityGraph& g1, const CavityGraph& g2, double epsilon = kDefaultEdgeTolerance,
                                long long budget = kDefaultCliqueBudget) {
  if (g1.size() == 0 || g2.size() == 0) throw DataError("mcs_similarity: empty graph");
  if (!(epsilon >= 0.0)) throw ConfigError("mcs_similarity: epsilon must be >= 0");
  if (budget < 1) throw ConfigError("mcs_similarity: budget must be >= 1");

  std::vector<std::pair<std::size_t, std::size_t>> nodes;
  for (std::size_t i = 0; i < g1.size(); ++i)
    for (std::size_t k = 0; k < g2.size(); ++k)
      if (g1.labels[i] == g2.labels[k]) nodes.push_back({i, k});

  McsResult r;
  if (nodes.empty()) return r;

  std::vector<detail::Bitset> adj(nodes.size(), detail::Bitset(nodes.size()));
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      const auto [i, k] = nodes[a];
      const auto [j, l] = nodes[b];
      if (i == j || k == l) continue;
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      const auto kk = static_cast<Eigen::Index>(k), ll = static_cast<Eigen::Index>(l);
      if (std::abs(g1.weights(ii, jj) - g2.weights(kk, ll)) <= epsilon) {
        adj[a].set(b);
        adj[b].set(a);
      }
    }

  detail::MaxClique search(std::move(adj), budget);
  const auto clique = search.run();
  r.common_nodes = clique.size();
  r.lower_bound = search.exhausted();
  r.expansions = search.expansions();
  for (auto v : clique) r.mapping.push_back(nodes[v]);
  std::sort(r.mapping.begin(), r.mapping.end());
  r.similarity = static_cast<double>(clique.size()) / static_cast<double>(std::max(g1.size(), g2.size()));
  return r;
}

// ---------------------------------------------------------------------------
// Triangle fingerprints
//
// A feature is the isomorphism class of a labelled triangle with binned
// edge lengths: the lexicographically smallest tuple
//   (label_a, label_b, label_c, bin(ab), bin(ac), bin(bc))
// over the six orderings of its vertices. Bins are half-open
// [k w, (k + 1) w); every distance >= max_dist falls in bin floor(max_dist / w).

inline constexpr double kDefaultBinWidth = 1.0;   // Angstrom
inline constexpr double kDefaultMaxDistance = 20.0;

using TriangleFeature = std::array<int, 6>;

// Sorted, duplicate-free feature list.
struct Fingerprint {
  std::vector<TriangleFeature> features;

  std::size_t size() const noexcept { return features.size(); }
  bool empty() const noexcept { return features.empty(); }
};

inline int distance_bin(double w, double bin_width, double max_dist) {
  const int cap = static_cast<int>(std::floor(max_dist / bin_width));
  if (w >= max_dist) return cap;
  return std::min(cap, static_cast<int>(std::floor(w / bin_width)));
}

inline TriangleFeature canonical_triangle(std::array<int, 3> label, int bin01, int bin02, int bin12) {
  // bins[x][y] for vertex slots x, y
  int bins[3][3] = {{0, bin01, bin02}, {bin01, 0, bin12}, {bin02, bin12, 0}};
  static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  TriangleFeature best{};
  bool first = true;
  for (const auto& p : perms) {
    TriangleFeature t{label[p[0]], label[p[1]], label[p[2]], bins[p[0]][p[1]], bins[p[0]][p[2]], bins[p[1]][p[2]]};
    if (first || t < best) best = t;
    first = false;
  }
  return best;
}

inline Fingerprint fingerprint(const CavityGraph& g, double bin_width = kDefaultBinWidth,
                               double max_dist = kDefaultMaxDistance) {
  if (!(bin_width > 0.0) || !(max_dist > 0.0)) throw ConfigError("fingerprint: bin width and max distance must be > 0");
  Fingerprint fp;
  const std::size_t n = g.size();
  if (n < 3) return fp;
  auto bin = [&](std::size_t i, std::size_t j) {
    return distance_bin(g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), bin_width, max_dist);
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        std::array<int, 3> lab{static_cast<int>(g.labels[a]), static_cast<int>(g.labels[b]),
                               static_cast<int>(g.labels[c])};
        fp.features.push_back(canonical_triangle(lab, bin(a, b), bin(a, c), bin(b, c)));
      }
  std::sort(fp.features.begin(), fp.features.end());
  fp.features.erase(std::unique(fp.features.begin(), fp.features.end()), fp.features.end());
  return fp;
}

// |A n B| / |A u B|; two empty fingerprints have similarity 1.
inline double jaccard(const Fingerprint& f1, const Fingerprint& f2) {
  if (f1.empty() && f2.empty()) return 1.0;
  std::size_t common = 0;
  auto i = f1.features.begin(), j = f2.features.begin();
  while (i != f1.features.end() && j != f2.features.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = f1.size() + f2.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

}  // namespace condrank

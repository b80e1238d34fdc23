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

// Enzyme Commission labels and the graded catalytic similarity derived
// from them. Two enzymes have catalytic similarity k when the first k
// levels of their EC numbers agree; k = 4 means the same class.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "condrank/errors.hpp"
#include "condrank/ids.hpp"

namespace condrank {

inline constexpr int kEcLevels = 4;
inline constexpr int kMaxGrade = kEcLevels;

class EcNumber {
 public:
  EcNumber() = default;

  EcNumber(int l1, int l2, int l3, int l4) : digits_{l1, l2, l3, l4} {
    for (int i = 0; i < kEcLevels; ++i)
      if (digits_[i] < 1)
        throw DataError("EC level " + std::to_string(i + 1) + " must be >= 1");
  }

  int level(int i) const { return digits_.at(i); }
  const std::array<int, kEcLevels>& digits() const noexcept { return digits_; }

  std::string str() const {
    return std::to_string(digits_[0]) + '.' + std::to_string(digits_[1]) + '.' +
           std::to_string(digits_[2]) + '.' + std::to_string(digits_[3]);
  }

  friend bool operator==(const EcNumber&, const EcNumber&) = default;
  friend auto operator<=>(const EcNumber&, const EcNumber&) = default;

 private:
  std::array<int, kEcLevels> digits_{1, 1, 1, 1};
};

// Accepts "a.b.c.d" with an optional leading "EC" tag and surrounding
// whitespace. Partial labels ("2.4.-.-", "3.5.1.n1") are rejected.
inline EcNumber parse_ec(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  std::string_view s = trim(text);
  if (s.size() >= 2 && (s[0] == 'E' || s[0] == 'e') && (s[1] == 'C' || s[1] == 'c')) {
    s.remove_prefix(2);
    if (!s.empty() && s.front() == ':') s.remove_prefix(1);
    s = trim(s);
  }
  if (s.empty()) throw DataError("empty EC label");

  std::array<int, kEcLevels> d{};
  int field = 0;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = s.find('.', start);
    std::string_view part = s.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (field >= kEcLevels)
      throw DataError("EC label '" + std::string(text) + "' has more than 4 fields");
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
      throw DataError("EC label '" + std::string(text) + "': field " + std::to_string(field + 1) +
                      " ('" + std::string(part) + "') is not an integer");
    if (value < 1)
      throw DataError("EC label '" + std::string(text) + "': field " + std::to_string(field + 1) +
                      " must be >= 1");
    d[field++] = value;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (field != kEcLevels)
    throw DataError("EC label '" + std::string(text) + "' has " + std::to_string(field) +
                    " fields, expected 4");
  return EcNumber(d[0], d[1], d[2], d[3]);
}

// Length of the common prefix of the two labels, in {0, ..., 4}.
inline int catalytic_similarity(const EcNumber& a, const EcNumber& b) {
  int k = 0;
  while (k < kEcLevels && a.level(k) == b.level(k)) ++k;
  return k;
}

struct EcLabel {
  std::string id;
  EcNumber ec;
};

class CatalyticSimilarityMatrix {
 public:
  CatalyticSimilarityMatrix(IdIndex ids, Eigen::MatrixXi grades)
      : ids_(std::move(ids)), grades_(std::move(grades)) {
    if (grades_.rows() != grades_.cols() || static_cast<std::size_t>(grades_.rows()) != ids_.size())
      throw DataError("catalytic matrix shape does not match its ids");
  }

  const IdIndex& index() const noexcept { return ids_; }
  const std::vector<std::string>& ids() const noexcept { return ids_.ids(); }
  const Eigen::MatrixXi& grades() const noexcept { return grades_; }
  std::size_t size() const noexcept { return ids_.size(); }

  int operator()(std::size_t i, std::size_t j) const { return grades_(i, j); }
  int grade(std::string_view a, std::string_view b) const { return grades_(ids_.at(a), ids_.at(b)); }

  // Sub-matrix restricted to the given positions, in the given order.
  Eigen::MatrixXd slice(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = grades_(rows[i], cols[j]);
    return out;
  }

 private:
  IdIndex ids_;
  Eigen::MatrixXi grades_;
};

inline CatalyticSimilarityMatrix catalytic_matrix(std::span<const EcLabel> labels) {
  std::vector<std::string> ids;
  ids.reserve(labels.size());
  for (const auto& l : labels) ids.push_back(l.id);
  IdIndex index(std::move(ids));  // rejects duplicates

  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXi q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q(i, i) = kMaxGrade;
    for (Eigen::Index j = 0; j < i; ++j) q(i, j) = q(j, i) = catalytic_similarity(labels[i].ec, labels[j].ec);
  }
  return CatalyticSimilarityMatrix(std::move(index), std::move(q));
}

struct GradedItem {
  std::string id;
  int grade;
};

// Database objects ordered by descending grade relative to the query.
// Ties keep the order of db_ids. The query itself is dropped if present.
inline std::vector<GradedItem> ground_truth_order(std::string_view query_id, std::span<const std::string> db_ids,
                                                  const CatalyticSimilarityMatrix& q) {
  const std::size_t qi = q.index().at(query_id);
  std::vector<GradedItem> out;
  out.reserve(db_ids.size());
  for (const auto& id : db_ids) {
    const std::size_t j = q.index().at(id);
    if (j == qi) continue;
    out.push_back({id, q(qi, j)});
  }
  std::stable_sort(out.begin(), out.end(), [](const GradedItem& a, const GradedItem& b) { return a.grade > b.grade; });
  return out;
}

// Label file: "id<TAB>ec" per line; '#' comments and blank lines ignored.
inline std::vector<EcLabel> read_labels(std::istream& in) {
  std::vector<EcLabel> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw DataError("label file line " + std::to_string(lineno) + ": expected exactly two tab-separated columns");
    std::string id = line.substr(0, tab);
    if (id.empty()) throw DataError("label file line " + std::to_string(lineno) + ": empty id");
    try {
      out.push_back({std::move(id), parse_ec(std::string_view(line).substr(tab + 1))});
    } catch (const DataError& e) {
      throw DataError("label file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_labels(std::ostream& out, std::span<const EcLabel> labels) {
  for (const auto& l : labels) out << l.id << '\t' << l.ec.str() << '\n';
}

}  // namespace condrank

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

// Id-labelled square matrices and their CSV serialization:
//
//   id,<id1>,<id2>,...,<idn>
//   <id1>,v11,v12,...,v1n
//   ...
//
// Rows must appear in header order. Values are written with 17
// significant digits so a write/read cycle is lossless.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "condrank/errors.hpp"
#include "condrank/ids.hpp"

namespace condrank {

struct LabeledMatrix {
  IdIndex ids;
  Eigen::MatrixXd values;

  std::size_t size() const noexcept { return ids.size(); }
};

// Raw pairwise similarity scores. Square, finite, aligned with ids.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;

  SimilarityMatrix(IdIndex ids, Eigen::MatrixXd values) : ids_(std::move(ids)), values_(std::move(values)) {
    if (values_.rows() != values_.cols())
      throw DataError("similarity matrix is not square (" + std::to_string(values_.rows()) + "x" +
                      std::to_string(values_.cols()) + ")");
    if (static_cast<std::size_t>(values_.rows()) != ids_.size())
      throw DataError("similarity matrix has " + std::to_string(values_.rows()) + " rows but " +
                      std::to_string(ids_.size()) + " ids");
    if (!values_.allFinite()) throw DataError("similarity matrix contains non-finite entries");
  }

  SimilarityMatrix(std::vector<std::string> ids, Eigen::MatrixXd values)
      : SimilarityMatrix(IdIndex(std::move(ids)), std::move(values)) {}

  const IdIndex& index() const noexcept { return ids_; }
  const std::vector<std::string>& ids() const noexcept { return ids_.ids(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  IdIndex ids_;
  Eigen::MatrixXd values_;
};

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPsdTol = 1e-8;
inline constexpr double kDiagonalTol = 1e-12;

// A sanitized kernel: symmetric, numerically PSD, unit diagonal.
class KernelMatrix {
 public:
  KernelMatrix() = default;

  // Verifies all three invariants; throws DataError on violation.
  static KernelMatrix checked(IdIndex ids, Eigen::MatrixXd g) {
    if (g.rows() != g.cols() || static_cast<std::size_t>(g.rows()) != ids.size())
      throw DataError("kernel matrix shape does not match its ids");
    if (!g.allFinite()) throw DataError("kernel matrix contains non-finite entries");
    const double asym = g.size() == 0 ? 0.0 : (g - g.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol) throw DataError("kernel matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      if (std::abs(g(i, i) - 1.0) > kDiagonalTol)
        throw DataError("kernel diagonal entry for '" + ids[static_cast<std::size_t>(i)] + "' is not 1");
    if (g.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw DataError("kernel eigendecomposition failed");
      if (es.eigenvalues().minCoeff() < -kPsdTol)
        throw DataError("kernel matrix is not positive semidefinite (min eigenvalue " +
                        std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    return KernelMatrix(std::move(ids), std::move(g));
  }

  // Skips the spectral check; the caller guarantees the invariants.
  static KernelMatrix trusted(IdIndex ids, Eigen::MatrixXd g) { return KernelMatrix(std::move(ids), std::move(g)); }

  const IdIndex& index() const noexcept { return ids_; }
  const std::vector<std::string>& ids() const noexcept { return ids_.ids(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return ids_.size(); }

  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  Eigen::MatrixXd slice(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(rows[i], cols[j]);
    return out;
  }

  SimilarityMatrix as_similarity() const { return SimilarityMatrix(ids_, values_); }

 private:
  KernelMatrix(IdIndex ids, Eigen::MatrixXd g) : ids_(std::move(ids)), values_(std::move(g)) {}

  IdIndex ids_;
  Eigen::MatrixXd values_;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, int line, std::size_t col) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError("matrix CSV line " + std::to_string(line) + " column " + std::to_string(col + 1) +
                    ": '" + std::string(s) + "' is not a finite number");
  return v;
}

}  // namespace detail

inline LabeledMatrix read_matrix_csv(std::istream& in) {
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw DataError("matrix CSV is empty");
  auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "id")
    throw DataError("matrix CSV header must start with 'id' followed by at least one object id");
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < header.size(); ++i) ids.emplace_back(header[i]);
  IdIndex index(ids);
  const auto n = static_cast<Eigen::Index>(ids.size());

  Eigen::MatrixXd m(n, n);
  Eigen::Index row = 0;
  while (next_line()) {
    if (row >= n) throw DataError("matrix CSV line " + std::to_string(lineno) + ": more rows than header ids");
    auto cells = detail::split_csv_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != n + 1)
      throw DataError("matrix CSV line " + std::to_string(lineno) + ": expected " + std::to_string(n + 1) +
                      " fields, got " + std::to_string(cells.size()));
    if (cells[0] != ids[row])
      throw DataError("matrix CSV line " + std::to_string(lineno) + ": row id '" + std::string(cells[0]) +
                      "' does not match header id '" + ids[row] + "'");
    for (Eigen::Index j = 0; j < n; ++j) m(row, j) = detail::parse_double(cells[j + 1], lineno, j + 1);
    ++row;
  }
  if (row != n)
    throw DataError("matrix CSV has " + std::to_string(row) + " rows, expected " + std::to_string(n));
  return {std::move(index), std::move(m)};
}

inline void write_matrix_csv(std::ostream& out, std::span<const std::string> ids, const Eigen::MatrixXd& m) {
  if (static_cast<std::size_t>(m.rows()) != ids.size() || m.rows() != m.cols())
    throw DataError("cannot write matrix: shape does not match ids");
  char buf[32];
  out << "id";
  for (const auto& id : ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << ids[i];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline SimilarityMatrix read_similarity_csv(std::istream& in) {
  auto lm = read_matrix_csv(in);
  return SimilarityMatrix(std::move(lm.ids), std::move(lm.values));
}

inline void write_similarity_csv(std::ostream& out, const SimilarityMatrix& s) {
  write_matrix_csv(out, s.ids(), s.values());
}

inline void write_kernel_csv(std::ostream& out, const KernelMatrix& k) { write_matrix_csv(out, k.ids(), k.values()); }

}  // namespace condrank

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

// Local alignment with affine gaps (Gotoh recurrences) and the sequence
// identity of one optimal alignment.
//
// A gap of length k costs gap_open + k * gap_extend (BLAST convention, so
// the defaults 11/1 charge 12 for a single-residue gap).
//
// Traceback rule, which fixes the reported identity:
//  1. The operands are put in canonical order (shorter first, then
//     lexicographically smaller first); this makes identity symmetric.
//  2. The alignment ends at the first cell of maximal score in row-major
//     order (rows follow the first operand).
//  3. From a match state the diagonal move is preferred, then a gap in the
//     first operand (horizontal), then a gap in the second (vertical).
//  4. Inside a gap the shortest gap consistent with the score is taken.
// The alignment stops at the first cell whose score is zero. A zero score
// yields the empty alignment with identity 0.

#pragma once

#include <algorithm>
#include <iosfwd>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "condrank/errors.hpp"
#include "condrank/providers/blosum62.hpp"

namespace condrank {

struct Sequence {
  std::string id;
  std::string residues;  // uppercase, over "ARNDCQEGHILKMFPSTWYVX"
};

// Uppercases and validates; throws DataError naming the first bad position.
inline Sequence make_sequence(std::string id, std::string_view residues) {
  if (residues.empty()) throw DataError("sequence '" + id + "' is empty");
  Sequence s{std::move(id), {}};
  s.residues.reserve(residues.size());
  for (std::size_t i = 0; i < residues.size(); ++i) {
    const char c = residues[i];
    const int idx = blosum_index(c);
    if (idx < 0)
      throw DataError("sequence '" + s.id + "': unknown residue '" + std::string(1, c) + "' at position " +
                      std::to_string(i + 1));
    s.residues.push_back(kBlosumAlphabet[idx]);
  }
  return s;
}

enum class IdentityDenominator {
  kAlignmentLength,  // aligned columns including gap columns
  kShorterSequence,
};

struct AlignmentParams {
  int gap_open = 11;
  int gap_extend = 1;
  IdentityDenominator denominator = IdentityDenominator::kAlignmentLength;

  void validate() const {
    if (gap_open < 0 || gap_extend < 0) throw ConfigError("gap penalties must be >= 0");
  }
};

struct AlignmentResult {
  int score = 0;
  double identity = 0.0;
  int matches = 0;
  int length = 0;  // alignment columns
  // Aligned strings with '-' for gaps, in canonical operand order.
  std::string aligned_first;
  std::string aligned_second;
};

namespace detail {

inline std::vector<int> encode(std::string_view s) {
  std::vector<int> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int idx = blosum_index(s[i]);
    if (idx < 0)
      throw DataError("unknown residue '" + std::string(1, s[i]) + "' at position " + std::to_string(i + 1));
    out.push_back(idx);
  }
  return out;
}

}  // namespace detail

inline AlignmentResult smith_waterman_identity(std::string_view a, std::string_view b,
                                               const AlignmentParams& params = {}) {
  params.validate();
  if (a.empty() || b.empty()) throw DataError("cannot align an empty sequence");
  if (b.size() < a.size() || (b.size() == a.size() && b < a)) std::swap(a, b);
  const auto x = detail::encode(a);
  const auto y = detail::encode(b);
  const int m = static_cast<int>(x.size());
  const int n = static_cast<int>(y.size());
  const int open = params.gap_open + params.gap_extend;
  const int ext = params.gap_extend;
  constexpr int kNeg = -(1 << 28);

  const auto w = static_cast<std::size_t>(n + 1);
  std::vector<int> h((m + 1) * w, 0), e((m + 1) * w, kNeg), f((m + 1) * w, kNeg);
  auto at = [w](int i, int j) { return static_cast<std::size_t>(i) * w + static_cast<std::size_t>(j); };

  int best = 0, bi = 0, bj = 0;
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= n; ++j) {
      e[at(i, j)] = std::max(h[at(i, j - 1)] - open, e[at(i, j - 1)] - ext);
      f[at(i, j)] = std::max(h[at(i - 1, j)] - open, f[at(i - 1, j)] - ext);
      const int diag = h[at(i - 1, j - 1)] + blosum62(x[i - 1], y[j - 1]);
      const int v = std::max({0, diag, e[at(i, j)], f[at(i, j)]});
      h[at(i, j)] = v;
      if (v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  }

  AlignmentResult r;
  r.score = best;
  if (best == 0) return r;

  enum class State { kMatch, kGapFirst, kGapSecond };
  State state = State::kMatch;
  int i = bi, j = bj;
  std::string ra, rb;
  while (true) {
    if (state == State::kMatch) {
      const int v = h[at(i, j)];
      if (v == 0) break;
      if (i > 0 && j > 0 && v == h[at(i - 1, j - 1)] + blosum62(x[i - 1], y[j - 1])) {
        ra.push_back(a[i - 1]);
        rb.push_back(b[j - 1]);
        if (x[i - 1] == y[j - 1]) ++r.matches;
        --i;
        --j;
      } else if (v == e[at(i, j)]) {
        state = State::kGapFirst;
      } else {
        state = State::kGapSecond;
      }
    } else if (state == State::kGapFirst) {
      ra.push_back('-');
      rb.push_back(b[j - 1]);
      if (e[at(i, j)] == h[at(i, j - 1)] - open) state = State::kMatch;
      --j;
    } else {
      ra.push_back(a[i - 1]);
      rb.push_back('-');
      if (f[at(i, j)] == h[at(i - 1, j)] - open) state = State::kMatch;
      --i;
    }
  }
  std::reverse(ra.begin(), ra.end());
  std::reverse(rb.begin(), rb.end());
  r.length = static_cast<int>(ra.size());
  r.aligned_first = std::move(ra);
  r.aligned_second = std::move(rb);
  const int denom = params.denominator == IdentityDenominator::kAlignmentLength ? r.length : m;
  r.identity = denom > 0 ? static_cast<double>(r.matches) / denom : 0.0;
  return r;
}

inline AlignmentResult smith_waterman_identity(const Sequence& a, const Sequence& b,
                                               const AlignmentParams& params = {}) {
  return smith_waterman_identity(std::string_view(a.residues), std::string_view(b.residues), params);
}

// FASTA: '>' lines start records, the id is the first whitespace-delimited
// token; residue lines are concatenated, a trailing '*' is dropped.
inline std::vector<Sequence> read_fasta(std::istream& in) {
  std::vector<Sequence> out;
  std::string line, id, residues;
  bool open_record = false;
  int lineno = 0;
  auto flush = [&]() {
    if (!open_record) return;
    if (!residues.empty() && residues.back() == '*') residues.pop_back();
    try {
      out.push_back(make_sequence(id, residues));
    } catch (const DataError& e) {
      throw DataError(std::string("FASTA: ") + e.what());
    }
    residues.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ';') continue;
    if (line[0] == '>') {
      flush();
      auto start = line.find_first_not_of(" \t", 1);
      if (start == std::string::npos) throw DataError("FASTA line " + std::to_string(lineno) + ": empty header");
      id = line.substr(start, line.find_first_of(" \t", start) - start);
      open_record = true;
      continue;
    }
    if (!open_record) throw DataError("FASTA line " + std::to_string(lineno) + ": sequence data before header");
    for (char c : line)
      if (c != ' ' && c != '\t') residues.push_back(c);
  }
  flush();
  return out;
}

}  // namespace condrank

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

// BLOSUM62 substitution scores in half-bit units.
//
// Provenance: Henikoff & Henikoff (1992), "Amino acid substitution
// matrices from protein blocks", PNAS 89:10915, as distributed by NCBI
// (ftp.ncbi.nih.gov/blast/matrices/BLOSUM62). Only the 20 standard
// residues and the unknown residue X are kept; the ambiguity codes B, Z
// and the stop symbol are not accepted by the aligner.

#pragma once

#include <array>
#include <cstdint>

namespace condrank {

// Residue order of the table below.
inline constexpr char kBlosumAlphabet[] = "ARNDCQEGHILKMFPSTWYVX";
inline constexpr int kBlosumSize = 21;

// Lower triangle, row r holds scores against residues 0..r.
inline constexpr std::int8_t kBlosum62Lower[] = {
     4,                                                               // A
    -1,  5,                                                           // R
    -2,  0,  6,                                                       // N
    -2, -2,  1,  6,                                                   // D
     0, -3, -3, -3,  9,                                               // C
    -1,  1,  0,  0, -3,  5,                                           // Q
    -1,  0,  0,  2, -4,  2,  5,                                       // E
     0, -2,  0, -1, -3, -2, -2,  6,                                   // G
    -2,  0,  1, -1, -3,  0,  0, -2,  8,                               // H
    -1, -3, -3, -3, -1, -3, -3, -4, -3,  4,                           // I
    -1, -2, -3, -4, -1, -2, -3, -4, -3,  2,  4,                       // L
    -1,  2,  0, -1, -3,  1,  1, -2, -1, -3, -2,  5,                   // K
    -1, -1, -2, -3, -1,  0, -2, -3, -2,  1,  2, -1,  5,               // M
    -2, -3, -3, -3, -2, -3, -3, -3, -1,  0,  0, -3,  0,  6,           // F
    -1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4,  7,       // P
     1, -1,  1,  0, -1,  0,  0,  0, -1, -2, -2,  0, -1, -2, -1,  4,   // S
     0, -1,  0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1,  1,  5,                   // T
    -3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1,  1, -4, -3, -2, 11,               // W
    -2, -2, -2, -3, -2, -1, -2, -3,  2, -1, -1, -2, -1,  3, -3, -2, -2,  2,  7,           // Y
     0, -3, -3, -3, -1, -2, -2, -3, -3,  3,  1, -2,  1, -1, -2, -2,  0, -3, -1,  4,       // V
     0, -1, -1, -1, -2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -2,  0,  0, -2, -1, -1, -1,   // X
};

static_assert(sizeof(kBlosum62Lower) == kBlosumSize * (kBlosumSize + 1) / 2);

// Residue letter -> table index, or -1. Lowercase letters are accepted.
inline constexpr int blosum_index(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (int i = 0; i < kBlosumSize; ++i)
    if (kBlosumAlphabet[i] == c) return i;
  return -1;
}

inline constexpr int blosum62(int a, int b) {
  if (a < b) {
    const int t = a;
    a = b;
    b = t;
  }
  return kBlosum62Lower[a * (a + 1) / 2 + b];
}

}  // namespace condrank

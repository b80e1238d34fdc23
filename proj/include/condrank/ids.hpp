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

#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "condrank/errors.hpp"

namespace condrank {

// Ordered list of unique object identifiers with O(1) reverse lookup.
class IdIndex {
 public:
  IdIndex() = default;

  explicit IdIndex(std::vector<std::string> ids) : ids_(std::move(ids)) {
    lookup_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i].empty()) throw DataError("empty object id at position " + std::to_string(i));
      if (!lookup_.emplace(ids_[i], i).second) throw DataError("duplicate object id '" + ids_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& operator[](std::size_t i) const { return ids_[i]; }

  bool contains(std::string_view id) const { return lookup_.count(std::string(id)) != 0; }

  std::size_t at(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) throw DataError("unknown object id '" + std::string(id) + "'");
    return it->second;
  }

  std::vector<std::size_t> positions(std::span<const std::string> ids) const {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(at(id));
    return out;
  }

  bool operator==(const IdIndex& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

// FNV-1a over the newline-joined ids; stable fingerprint of a training set.
inline std::string hash_ids(std::span<const std::string> ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& id : ids) {
    for (unsigned char c : id) mix(c);
    mix('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace condrank

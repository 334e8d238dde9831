// Copyright 2026 The metasolve Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metasolve/common.hpp"

namespace metasolve {

using Bits = std::vector<std::uint8_t>;

/// energy(x) = sum_{i<=j} Q_ij x_i x_j + offset over x in {0,1}^n.
struct QuboModel {
  std::size_t n = 0;
  std::map<std::pair<std::size_t, std::size_t>, double> coeffs;
  double offset = 0.0;

  QuboModel() = default;
  explicit QuboModel(std::size_t num_vars) : n(num_vars) {}

  /// Accumulates `value` onto Q_ij; (i, j) is normalized to i <= j.
  void add(std::size_t i, std::size_t j, double value) {
    if (i >= n || j >= n) {
      throw Error(Errc::IndexOutOfRange,
                  "qubo index (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") with n=" + std::to_string(n));
    }
    if (i > j) std::swap(i, j);
    coeffs[{i, j}] += value;
  }

  double coefficient(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    auto it = coeffs.find({i, j});
    return it == coeffs.end() ? 0.0 : it->second;
  }

  double energy(std::span<const std::uint8_t> bits) const {
    if (bits.size() != n) {
      throw Error(Errc::DimensionMismatch,
                  "expected " + std::to_string(n) + " bits, got " +
                      std::to_string(bits.size()));
    }
    double e = offset;
    for (const auto& [key, value] : coeffs) {
      if (bits[key.first] && bits[key.second]) e += value;
    }
    return e;
  }

  bool operator==(const QuboModel&) const = default;
};

/// Compact adjacency form used by the hot loops: diagonal plus symmetric
/// neighbour lists (each off-diagonal coefficient appears in both rows).
struct QuboAdjacency {
  std::vector<double> diag;
  std::vector<std::vector<std::pair<std::size_t, double>>> neighbours;

  explicit QuboAdjacency(const QuboModel& model)
      : diag(model.n, 0.0), neighbours(model.n) {
    for (const auto& [key, value] : model.coeffs) {
      if (value == 0.0) continue;
      if (key.first == key.second) {
        diag[key.first] += value;
      } else {
        neighbours[key.first].emplace_back(key.second, value);
        neighbours[key.second].emplace_back(key.first, value);
      }
    }
  }

  /// Energy change of flipping bit i in `bits`.
  double flip_delta(std::span<const std::uint8_t> bits, std::size_t i) const {
    double field = diag[i];
    for (const auto& [j, q] : neighbours[i]) {
      if (bits[j]) field += q;
    }
    return bits[i] ? -field : field;
  }
};

}  // namespace metasolve

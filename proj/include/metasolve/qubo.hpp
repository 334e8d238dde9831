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

// QUBO reformulations (TSP, MaxCut), the QUBO/Ising change of
// variables, simulated annealing and the exhaustive QUBO oracle.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "metasolve/common.hpp"
#include "metasolve/formats.hpp"
#include "metasolve/qubo_model.hpp"
#include "metasolve/routing.hpp"

namespace metasolve {

struct Sample {
  Bits bits;
  double energy = 0.0;
  std::size_t count = 1;
  bool operator==(const Sample&) const = default;
};

/// energy(s) = sum h_i s_i + sum_{i<j} J_ij s_i s_j + offset, s in {-1,+1}^n.
struct IsingModel {
  std::size_t n = 0;
  std::vector<double> h;
  std::map<std::pair<std::size_t, std::size_t>, double> J;
  double offset = 0.0;

  /// Energy of the spin configuration encoded by `bits` (bit 1 <-> spin +1).
  double energy_of_bits(std::span<const std::uint8_t> bits) const {
    double e = offset;
    for (std::size_t i = 0; i < n; ++i) e += bits[i] ? h[i] : -h[i];
    for (const auto& [key, value] : J) {
      e += (bits[key.first] == bits[key.second]) ? value : -value;
    }
    return e;
  }
};

// ---------------------------------------------------------------------------
// TSP encoding
// ---------------------------------------------------------------------------

struct TspEncoding {
  std::size_t cities = 0;       // n
  double penalty_weight = 0.0;  // A
  /// cost = energy - cost_offset for penalty-free assignments. The penalty
  /// constant is folded into the model offset, so this is 0.
  double cost_offset = 0.0;
  DistanceMatrix dist;

  /// Variable index of "city v (1..n-1) at position p (1..n-1)".
  std::size_t var(std::size_t city, std::size_t position) const {
    return (city - 1) * (cities - 1) + (position - 1);
  }
  std::size_t num_vars() const { return (cities - 1) * (cities - 1); }
};

struct TspQubo {
  QuboModel model;
  TspEncoding encoding;
};

inline constexpr std::size_t kDefaultEncodingCap = 400;
inline constexpr double kDefaultPenaltyScale = 2.0;

/// Position encoding with city 0 pinned to position 0: (n-1)^2 variables,
/// energy = A*(one city per position + one position per city) + tour length,
/// A = penalty_scale * max distance.
inline TspQubo tsp_to_qubo(const TspInstance& instance, double penalty_scale = kDefaultPenaltyScale,
                           std::size_t max_vars = kDefaultEncodingCap) {
  const std::size_t n = instance.size();
  if (n == 0) throw Error(Errc::InvalidArgument, "empty TSP instance");
  if (!(penalty_scale >= 1.0)) throw Error(Errc::InvalidArgument, "penalty_scale must be >= 1");
  const std::size_t m = n - 1;
  if (m * m > max_vars) {
    throw Error(Errc::TooLargeForEncoding, "encoding needs " + std::to_string(m * m) +
                                               " variables, cap is " + std::to_string(max_vars));
  }
  TspQubo out;
  auto& enc = out.encoding;
  enc.cities = n;
  enc.dist = DistanceMatrix(instance);
  enc.penalty_weight = penalty_scale * static_cast<double>(std::max<std::int64_t>(1, enc.dist.max()));
  auto& q = out.model;
  q = QuboModel(m * m);
  const double A = enc.penalty_weight;

  // A * (1 - sum x)^2 = A * (1 - sum x + 2 sum_{a<b} x_a x_b) per constraint group.
  const auto one_hot = [&](const std::vector<std::size_t>& group) {
    q.offset += A;
    for (std::size_t a = 0; a < group.size(); ++a) {
      q.add(group[a], group[a], -A);
      for (std::size_t b = a + 1; b < group.size(); ++b) q.add(group[a], group[b], 2 * A);
    }
  };
  for (std::size_t p = 1; p <= m; ++p) {
    std::vector<std::size_t> group;
    for (std::size_t v = 1; v <= m; ++v) group.push_back(enc.var(v, p));
    one_hot(group);
  }
  for (std::size_t v = 1; v <= m; ++v) {
    std::vector<std::size_t> group;
    for (std::size_t p = 1; p <= m; ++p) group.push_back(enc.var(v, p));
    one_hot(group);
  }

  // Tour length: depot -> position 1, position n-1 -> depot, consecutive positions.
  for (std::size_t v = 1; v <= m; ++v) {
    q.add(enc.var(v, 1), enc.var(v, 1), static_cast<double>(enc.dist(0, v)));
    q.add(enc.var(v, m), enc.var(v, m), static_cast<double>(enc.dist(v, 0)));
  }
  for (std::size_t p = 1; p < m; ++p) {
    for (std::size_t u = 1; u <= m; ++u) {
      for (std::size_t v = 1; v <= m; ++v) {
        if (u == v) continue;
        q.add(enc.var(u, p), enc.var(v, p + 1), static_cast<double>(enc.dist(u, v)));
      }
    }
  }
  return out;
}

/// Rebuilds the tour from a position assignment; nullopt unless the bits
/// form a permutation matrix.
inline std::optional<Tour> decode_tsp_sample(std::span<const std::uint8_t> bits,
                                             const TspEncoding& enc) {
  if (bits.size() != enc.num_vars()) {
    throw Error(Errc::DimensionMismatch, "sample has " + std::to_string(bits.size()) +
                                             " bits, encoding has " + std::to_string(enc.num_vars()));
  }
  const std::size_t m = enc.cities - 1;
  Tour tour;
  tour.order.push_back(0);
  std::vector<int> city_uses(enc.cities, 0);
  for (std::size_t p = 1; p <= m; ++p) {
    std::size_t found = 0, city = 0;
    for (std::size_t v = 1; v <= m; ++v) {
      if (bits[enc.var(v, p)]) {
        ++found;
        city = v;
      }
    }
    if (found != 1) return std::nullopt;
    if (++city_uses[city] > 1) return std::nullopt;
    tour.order.push_back(city);
  }
  tour.cost = tour_cost(enc.dist, tour.order);
  return tour;
}

/// Sum of the one-hot penalty terms at `bits` (0 iff the assignment decodes).
inline double tsp_penalty(std::span<const std::uint8_t> bits, const TspEncoding& enc) {
  const std::size_t m = enc.cities - 1;
  double penalty = 0.0;
  for (std::size_t p = 1; p <= m; ++p) {
    double s = 0;
    for (std::size_t v = 1; v <= m; ++v) s += bits[enc.var(v, p)];
    penalty += enc.penalty_weight * (1 - s) * (1 - s);
  }
  for (std::size_t v = 1; v <= m; ++v) {
    double s = 0;
    for (std::size_t p = 1; p <= m; ++p) s += bits[enc.var(v, p)];
    penalty += enc.penalty_weight * (1 - s) * (1 - s);
  }
  return penalty;
}

// ---------------------------------------------------------------------------
// MaxCut
// ---------------------------------------------------------------------------

/// Minimizing the QUBO maximizes the cut: cut value = -energy.
inline QuboModel maxcut_to_qubo(const MaxCutGraph& graph) {
  QuboModel q(graph.n);
  for (const auto& e : graph.edges) {
    if (e.u == e.v) throw Error(Errc::SelfLoop, "self-loop on node " + std::to_string(e.u));
    if (!std::isfinite(e.weight)) throw Error(Errc::InvalidArgument, "non-finite edge weight");
    q.add(e.u, e.u, -e.weight);
    q.add(e.v, e.v, -e.weight);
    q.add(e.u, e.v, 2 * e.weight);
  }
  return q;
}

inline double cut_value(const MaxCutGraph& graph, std::span<const std::uint8_t> bits) {
  double cut = 0;
  for (const auto& e : graph.edges) {
    if (bits[e.u] != bits[e.v]) cut += e.weight;
  }
  return cut;
}

// ---------------------------------------------------------------------------
// Ising
// ---------------------------------------------------------------------------

/// Substitutes x_i = (1 + s_i) / 2.
inline IsingModel qubo_to_ising(const QuboModel& model) {
  IsingModel ising;
  ising.n = model.n;
  ising.h.assign(model.n, 0.0);
  ising.offset = model.offset;
  for (const auto& [key, value] : model.coeffs) {
    const auto [i, j] = key;
    if (i == j) {
      ising.h[i] += value / 2;
      ising.offset += value / 2;
    } else {
      ising.h[i] += value / 4;
      ising.h[j] += value / 4;
      ising.J[{i, j}] += value / 4;
      ising.offset += value / 4;
    }
  }
  return ising;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

inline constexpr std::size_t kBruteForceQuboLimit = 20;

/// Bits ordered with x_0 as the most significant digit.
inline std::uint64_t bitstring_value(std::span<const std::uint8_t> bits) {
  std::uint64_t v = 0;
  for (auto b : bits) v = (v << 1) | (b ? 1u : 0u);
  return v;
}

/// Exact minimum over all 2^n assignments via a Gray-code walk. Ties go to
/// the lowest bitstring value (x_0 most significant).
inline Sample brute_force_qubo(const QuboModel& model) {
  const std::size_t n = model.n;
  if (n > kBruteForceQuboLimit) {
    throw Error(Errc::TooLarge, "brute-force QUBO supports n <= 20, got " + std::to_string(n));
  }
  const QuboAdjacency adj(model);
  Bits bits(n, 0);
  double energy = model.offset;
  Sample best{bits, energy, 1};
  std::uint64_t best_value = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const auto flip = static_cast<std::size_t>(__builtin_ctzll(k));
    energy += adj.flip_delta(bits, flip);
    bits[flip] ^= 1;
    const double tol = 1e-9 * std::max(1.0, std::abs(best.energy));
    if (energy < best.energy - tol) {
      best.bits = bits;
      best.energy = model.energy(bits);
      best_value = bitstring_value(bits);
    } else if (energy <= best.energy + tol) {
      const double exact = model.energy(bits);
      const auto value = bitstring_value(bits);
      if (exact < best.energy - tol || (exact <= best.energy + tol && value < best_value)) {
        best.bits = bits;
        best.energy = exact;
        best_value = value;
      }
    }
  }
  best.energy = model.energy(best.bits);
  return best;
}

// ---------------------------------------------------------------------------
// Simulated annealing
// ---------------------------------------------------------------------------

struct AnnealingSchedule {
  std::size_t sweeps = 100;
  double beta_start = 0.1;
  double beta_end = 10.0;
  std::size_t trials = 10;
};

struct AnnealingResult {
  Sample best;
  std::vector<Sample> trials;  // lowest-energy state seen in each trial
  AnnealingSchedule schedule;
};

/// Single-bit-flip Metropolis sweeps under a geometric inverse-temperature
/// schedule, one random start per trial (trial seeds derived from `seed`).
inline AnnealingResult simulated_annealing(const QuboModel& model, AnnealingSchedule schedule,
                                           std::uint64_t seed) {
  if (schedule.trials == 0) throw Error(Errc::InvalidArgument, "trials must be >= 1");
  if (schedule.sweeps == 0) throw Error(Errc::InvalidArgument, "sweeps must be >= 1");
  if (!(schedule.beta_start > 0) || !(schedule.beta_end > 0)) {
    throw Error(Errc::InvalidArgument, "inverse temperatures must be positive");
  }
  const std::size_t n = model.n;
  const QuboAdjacency adj(model);
  AnnealingResult result;
  result.schedule = schedule;
  const double ratio = schedule.sweeps > 1
                           ? std::pow(schedule.beta_end / schedule.beta_start,
                                      1.0 / static_cast<double>(schedule.sweeps - 1))
                           : 1.0;
  for (std::size_t t = 0; t < schedule.trials; ++t) {
    Rng rng(derive_seed(seed, "anneal", t, 0));
    Bits bits(n);
    for (auto& b : bits) b = rng.coin() ? 1 : 0;
    double energy = model.energy(bits);
    Bits best_bits = bits;
    double best_energy = energy;
    double beta = schedule.beta_start;
    for (std::size_t sweep = 0; sweep < schedule.sweeps; ++sweep, beta *= ratio) {
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = adj.flip_delta(bits, i);
        if (delta <= 0 || rng.uniform() < std::exp(-beta * delta)) {
          bits[i] ^= 1;
          energy += delta;
          if (energy < best_energy - 1e-12) {
            best_energy = energy;
            best_bits = bits;
          }
        }
      }
    }
    Sample s{best_bits, model.energy(best_bits), 1};
    result.trials.push_back(s);
  }
  result.best = *std::min_element(result.trials.begin(), result.trials.end(),
                                  [](const Sample& a, const Sample& b) { return a.energy < b.energy; });
  return result;
}

}  // namespace metasolve

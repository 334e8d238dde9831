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

// Native TSP and CVRP solvers plus the exhaustive TSP oracle.
//
// The TSP solver is nearest-neighbour construction followed by 2-opt and
// Or-opt descent. The CVRP solver is Clarke-Wright parallel savings followed
// by intra-route 2-opt, inter-route relocate/swap descent and a seeded
// ruin-and-recreate loop that re-runs the descent from perturbed solutions.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "metasolve/common.hpp"
#include "metasolve/formats.hpp"

namespace metasolve {

struct Tour {
  std::vector<std::size_t> order;
  std::int64_t cost = 0;
  bool operator==(const Tour&) const = default;
};

/// Routes list customers only; the depot is implicit at both ends.
struct VrpSolution {
  std::vector<std::vector<std::size_t>> routes;
  std::int64_t cost = 0;
  bool feasible = false;
  bool operator==(const VrpSolution&) const = default;
};

inline std::int64_t tour_cost(const DistanceMatrix& dist,
                              const std::vector<std::size_t>& order) {
  if (order.size() < 2) return 0;
  std::int64_t cost = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cost += dist(order[i], order[(i + 1) % order.size()]);
  }
  return cost;
}

inline std::int64_t tour_cost(const TspInstance& instance,
                              const std::vector<std::size_t>& order) {
  return tour_cost(DistanceMatrix(instance), order);
}

inline bool is_permutation_of_n(const std::vector<std::size_t>& order,
                                std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto v : order) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

inline std::int64_t route_cost(const DistanceMatrix& dist, std::size_t depot,
                               const std::vector<std::size_t>& route) {
  if (route.empty()) return 0;
  std::int64_t cost = dist(depot, route.front()) + dist(route.back(), depot);
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    cost += dist(route[i], route[i + 1]);
  }
  return cost;
}

struct VrpCheck {
  bool coverage_exact = false;
  bool capacity_ok = false;
  bool fleet_ok = false;
  std::int64_t cost = 0;
  bool feasible() const { return coverage_exact && capacity_ok && fleet_ok; }
};

/// Independent feasibility and cost recomputation for a route list.
inline VrpCheck check_vrp_routes(
    const VrpInstance& vrp,
    const std::vector<std::vector<std::size_t>>& routes) {
  VrpCheck check;
  const DistanceMatrix dist(vrp.graph);
  std::vector<int> visits(vrp.size(), 0);
  check.capacity_ok = true;
  bool in_range = true;
  std::size_t nonempty = 0;
  for (const auto& route : routes) {
    std::int64_t load = 0;
    for (auto c : route) {
      if (c >= vrp.size() || c == vrp.depot) {
        in_range = false;
        continue;
      }
      ++visits[c];
      load += vrp.demands[c];
    }
    if (load > vrp.capacity) check.capacity_ok = false;
    if (!route.empty()) ++nonempty;
  }
  check.coverage_exact = in_range;
  for (std::size_t i = 0; i < vrp.size(); ++i) {
    if (i != vrp.depot && visits[i] != 1) check.coverage_exact = false;
  }
  check.fleet_ok = nonempty <= static_cast<std::size_t>(vrp.vehicles);
  if (in_range) {
    for (const auto& route : routes) check.cost += route_cost(dist, vrp.depot, route);
  }
  return check;
}

// ---------------------------------------------------------------------------
// TSP
// ---------------------------------------------------------------------------

namespace detail {

/// First-improvement 2-opt pass. Returns true after applying one move.
inline bool two_opt_move(const DistanceMatrix& dist, std::vector<std::size_t>& t) {
  const std::size_t n = t.size();
  for (std::size_t i = 0; i + 2 < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const auto a = t[i], b = t[i + 1], c = t[j], d = t[(j + 1) % n];
      const auto delta = dist(a, c) + dist(b, d) - dist(a, b) - dist(c, d);
      if (delta < 0) {
        std::reverse(t.begin() + static_cast<std::ptrdiff_t>(i + 1),
                     t.begin() + static_cast<std::ptrdiff_t>(j + 1));
        return true;
      }
    }
  }
  return false;
}

/// First-improvement Or-opt: move a segment of 1..3 cities (optionally
/// reversed) to another edge of the tour.
inline bool or_opt_move(const DistanceMatrix& dist, std::vector<std::size_t>& t) {
  const std::size_t n = t.size();
  for (std::size_t len = 1; len <= 3 && len + 2 <= n; ++len) {
    for (std::size_t s = 0; s < n; ++s) {
      // Segment occupies positions s .. s+len-1 (cyclic).
      const auto first = t[s];
      const auto last = t[(s + len - 1) % n];
      const auto prev = t[(s + n - 1) % n];
      const auto next = t[(s + len) % n];
      const auto removal = dist(prev, first) + dist(last, next) - dist(prev, next);
      for (std::size_t k = 0; k + len + 1 < n; ++k) {
        // Candidate edge (x, y) among the remaining cities, walking forward from next.
        const auto x = t[(s + len + k) % n];
        const auto y = t[(s + len + k + 1) % n];
        const auto forward = dist(x, first) + dist(last, y) - dist(x, y);
        const auto backward = dist(x, last) + dist(first, y) - dist(x, y);
        const bool rev = backward < forward;
        if (std::min(forward, backward) - removal < 0) {
          std::vector<std::size_t> segment, rest;
          for (std::size_t q = 0; q < len; ++q) segment.push_back(t[(s + q) % n]);
          if (rev) std::reverse(segment.begin(), segment.end());
          for (std::size_t q = 0; q < n - len; ++q) rest.push_back(t[(s + len + q) % n]);
          // rest starts at `next`; x is rest[k], insert after it.
          std::vector<std::size_t> out(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(k + 1));
          out.insert(out.end(), segment.begin(), segment.end());
          out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(k + 1), rest.end());
          t = std::move(out);
          return true;
        }
      }
    }
  }
  return false;
}

inline void rotate_to(std::vector<std::size_t>& order, std::size_t city) {
  auto it = std::find(order.begin(), order.end(), city);
  if (it != order.end()) std::rotate(order.begin(), it, order.end());
}

}  // namespace detail

/// Is there any improving 2-opt move left? O(n^2).
inline bool has_improving_two_opt(const DistanceMatrix& dist,
                                  const std::vector<std::size_t>& order) {
  auto copy = order;
  return detail::two_opt_move(dist, copy);
}

struct TspOptions {
  std::size_t max_iterations = 100000;  // improving moves applied
};

/// Nearest-neighbour start from a seed-chosen city, then 2-opt and Or-opt to
/// a joint local optimum or the iteration budget. The tour is rotated to
/// start at city 0.
inline Tour solve_tsp_native(const TspInstance& instance, std::uint64_t seed,
                             TspOptions options = {}) {
  const std::size_t n = instance.size();
  if (n == 0) throw Error(Errc::InvalidArgument, "empty TSP instance");
  const DistanceMatrix dist(instance);
  Tour tour;
  if (n <= 3) {
    tour.order.resize(n);
    std::iota(tour.order.begin(), tour.order.end(), std::size_t{0});
    tour.cost = tour_cost(dist, tour.order);
    return tour;
  }

  Rng rng(seed);
  std::vector<bool> used(n, false);
  std::size_t current = static_cast<std::size_t>(rng.below(n));
  tour.order.push_back(current);
  used[current] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (!used[c] && (best == n || dist(current, c) < dist(current, best))) best = c;
    }
    used[best] = true;
    tour.order.push_back(best);
    current = best;
  }

  std::size_t iterations = 0;
  while (iterations < options.max_iterations) {
    if (detail::two_opt_move(dist, tour.order) || detail::or_opt_move(dist, tour.order)) {
      ++iterations;
      continue;
    }
    break;
  }
  detail::rotate_to(tour.order, 0);
  tour.cost = tour_cost(dist, tour.order);
  return tour;
}

inline constexpr std::size_t kBruteForceTspLimit = 10;

/// Exact optimum by enumerating the (n-1)!/2 distinct tours (city 0 fixed,
/// one orientation per cycle). Ties keep the lexicographically first order.
inline Tour brute_force_tsp(const TspInstance& instance) {
  const std::size_t n = instance.size();
  if (n > kBruteForceTspLimit) {
    throw Error(Errc::TooLarge, "brute-force TSP supports n <= 10, got " + std::to_string(n));
  }
  if (n == 0) throw Error(Errc::InvalidArgument, "empty TSP instance");
  const DistanceMatrix dist(instance);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Tour best{order, tour_cost(dist, order)};
  if (n <= 3) return best;
  do {
    if (order[1] > order[n - 1]) continue;
    const auto cost = tour_cost(dist, order);
    if (cost < best.cost) best = {order, cost};
  } while (std::next_permutation(order.begin() + 1, order.end()));
  return best;
}

// ---------------------------------------------------------------------------
// CVRP
// ---------------------------------------------------------------------------

struct VrpOptions {
  std::size_t max_iterations = 100000;  // improving local-search moves
  std::size_t perturbations = 150;      // ruin-and-recreate rounds
};

namespace detail {

class VrpSearch {
 public:
  VrpSearch(const VrpInstance& vrp, const DistanceMatrix& dist)
      : vrp_(vrp), dist_(dist) {}

  using Routes = std::vector<std::vector<std::size_t>>;

  std::int64_t load(const std::vector<std::size_t>& route) const {
    std::int64_t total = 0;
    for (auto c : route) total += vrp_.demands[c];
    return total;
  }

  std::int64_t cost(const Routes& routes) const {
    std::int64_t total = 0;
    for (const auto& r : routes) total += route_cost(dist_, vrp_.depot, r);
    return total;
  }

  /// Parallel savings. Positive savings first; if the fleet is still too
  /// large, non-positive savings are merged too.
  Routes clarke_wright() const {
    const auto customers = vrp_.customers();
    const std::size_t n = vrp_.size();
    const std::size_t depot = vrp_.depot;
    std::vector<std::vector<std::size_t>> routes;
    std::vector<std::size_t> route_of(n, 0);
    std::vector<std::int64_t> loads;
    for (auto c : customers) {
      route_of[c] = routes.size();
      routes.push_back({c});
      loads.push_back(vrp_.demands[c]);
    }
    struct Saving {
      std::int64_t value;
      std::size_t i, j;
    };
    std::vector<Saving> savings;
    for (std::size_t a = 0; a < customers.size(); ++a) {
      for (std::size_t b = a + 1; b < customers.size(); ++b) {
        const auto i = customers[a], j = customers[b];
        savings.push_back({dist_(depot, i) + dist_(depot, j) - dist_(i, j), i, j});
      }
    }
    std::stable_sort(savings.begin(), savings.end(), [](const Saving& x, const Saving& y) {
      return x.value > y.value;
    });
    std::size_t live = routes.size();
    const auto merge_pass = [&](bool positive_only) {
      for (const auto& s : savings) {
        if (positive_only && s.value <= 0) break;
        if (!positive_only && live <= static_cast<std::size_t>(vrp_.vehicles)) break;
        const auto ri = route_of[s.i], rj = route_of[s.j];
        if (ri == rj) continue;
        auto& a = routes[ri];
        auto& b = routes[rj];
        if (loads[ri] + loads[rj] > vrp_.capacity) continue;
        const bool i_end = a.back() == s.i, i_front = a.front() == s.i;
        const bool j_end = b.back() == s.j, j_front = b.front() == s.j;
        if (!(i_end || i_front) || !(j_end || j_front)) continue;
        if (!i_end) std::reverse(a.begin(), a.end());
        if (!j_front) std::reverse(b.begin(), b.end());
        a.insert(a.end(), b.begin(), b.end());
        loads[ri] += loads[rj];
        for (auto c : b) route_of[c] = ri;
        b.clear();
        loads[rj] = 0;
        --live;
      }
    };
    merge_pass(true);
    merge_pass(false);
    Routes out;
    for (auto& r : routes) {
      if (!r.empty()) out.push_back(std::move(r));
    }
    return out;
  }

  /// First-fit-decreasing packing into at most `vehicles` trucks, each truck
  /// ordered by nearest neighbour. Empty optional if FFD fails.
  std::optional<Routes> packing_fallback() const {
    auto customers = vrp_.customers();
    std::stable_sort(customers.begin(), customers.end(), [&](auto x, auto y) {
      return vrp_.demands[x] > vrp_.demands[y];
    });
    Routes bins(static_cast<std::size_t>(vrp_.vehicles));
    std::vector<std::int64_t> loads(bins.size(), 0);
    for (auto c : customers) {
      bool placed = false;
      for (std::size_t b = 0; b < bins.size(); ++b) {
        if (loads[b] + vrp_.demands[c] <= vrp_.capacity) {
          bins[b].push_back(c);
          loads[b] += vrp_.demands[c];
          placed = true;
          break;
        }
      }
      if (!placed) return std::nullopt;
    }
    Routes out;
    for (auto& bin : bins) {
      if (bin.empty()) continue;
      std::vector<std::size_t> ordered;
      std::size_t at = vrp_.depot;
      while (!bin.empty()) {
        auto best = std::min_element(bin.begin(), bin.end(), [&](auto x, auto y) {
          return dist_(at, x) < dist_(at, y);
        });
        at = *best;
        ordered.push_back(at);
        bin.erase(best);
      }
      out.push_back(std::move(ordered));
    }
    return out;
  }

  bool intra_two_opt(std::vector<std::size_t>& r) const {
    const std::size_t m = r.size();
    if (m < 3) return false;
    const auto at = [&](std::size_t p) { return p == 0 || p == m + 1 ? vrp_.depot : r[p - 1]; };
    // Extended sequence: depot, r[0..m-1], depot (positions 0..m+1).
    for (std::size_t i = 0; i + 2 <= m; ++i) {
      for (std::size_t j = i + 2; j <= m; ++j) {
        const auto delta = dist_(at(i), at(j)) + dist_(at(i + 1), at(j + 1)) -
                           dist_(at(i), at(i + 1)) - dist_(at(j), at(j + 1));
        if (delta < 0) {
          std::reverse(r.begin() + static_cast<std::ptrdiff_t>(i),
                       r.begin() + static_cast<std::ptrdiff_t>(j));
          return true;
        }
      }
    }
    return false;
  }

  std::size_t node_at(const std::vector<std::size_t>& r, std::size_t p) const {
    // p in [0, r.size()+1]: 0 and size+1 are the depot.
    return p == 0 || p == r.size() + 1 ? vrp_.depot : r[p - 1];
  }

  bool relocate(Routes& routes, std::vector<std::int64_t>& loads) const {
    for (std::size_t a = 0; a < routes.size(); ++a) {
      for (std::size_t p = 0; p < routes[a].size(); ++p) {
        const auto c = routes[a][p];
        const auto prev = node_at(routes[a], p), next = node_at(routes[a], p + 2);
        const auto gain = dist_(prev, c) + dist_(c, next) - dist_(prev, next);
        for (std::size_t b = 0; b < routes.size(); ++b) {
          if (b == a || loads[b] + vrp_.demands[c] > vrp_.capacity) continue;
          for (std::size_t q = 0; q <= routes[b].size(); ++q) {
            const auto x = node_at(routes[b], q), y = node_at(routes[b], q + 1);
            const auto add = dist_(x, c) + dist_(c, y) - dist_(x, y);
            if (add - gain < 0) {
              routes[a].erase(routes[a].begin() + static_cast<std::ptrdiff_t>(p));
              routes[b].insert(routes[b].begin() + static_cast<std::ptrdiff_t>(q), c);
              loads[a] -= vrp_.demands[c];
              loads[b] += vrp_.demands[c];
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  bool swap(Routes& routes, std::vector<std::int64_t>& loads) const {
    for (std::size_t a = 0; a < routes.size(); ++a) {
      for (std::size_t b = a + 1; b < routes.size(); ++b) {
        for (std::size_t p = 0; p < routes[a].size(); ++p) {
          const auto c1 = routes[a][p];
          const auto p1 = node_at(routes[a], p), n1 = node_at(routes[a], p + 2);
          for (std::size_t q = 0; q < routes[b].size(); ++q) {
            const auto c2 = routes[b][q];
            const auto la = loads[a] - vrp_.demands[c1] + vrp_.demands[c2];
            const auto lb = loads[b] - vrp_.demands[c2] + vrp_.demands[c1];
            if (la > vrp_.capacity || lb > vrp_.capacity) continue;
            const auto p2 = node_at(routes[b], q), n2 = node_at(routes[b], q + 2);
            const auto delta = dist_(p1, c2) + dist_(c2, n1) - dist_(p1, c1) - dist_(c1, n1) +
                               dist_(p2, c1) + dist_(c1, n2) - dist_(p2, c2) - dist_(c2, n2);
            if (delta < 0) {
              routes[a][p] = c2;
              routes[b][q] = c1;
              loads[a] = la;
              loads[b] = lb;
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  /// Descent to a joint local optimum of the three neighbourhoods.
  void local_search(Routes& routes, std::size_t& budget) const {
    std::vector<std::int64_t> loads;
    for (const auto& r : routes) loads.push_back(load(r));
    while (budget > 0) {
      bool improved = false;
      for (auto& r : routes) {
        while (budget > 0 && intra_two_opt(r)) {
          --budget;
          improved = true;
        }
      }
      if (budget > 0 && relocate(routes, loads)) {
        --budget;
        improved = true;
      } else if (budget > 0 && swap(routes, loads)) {
        --budget;
        improved = true;
      }
      if (!improved) break;
    }
    std::erase_if(routes, [](const auto& r) { return r.empty(); });
  }

  /// Removes a random subset of customers and reinserts each at its cheapest
  /// capacity-feasible position. Returns false if some customer cannot be
  /// reinserted without exceeding the fleet.
  bool ruin_and_recreate(Routes& routes, Rng& rng) const {
    auto customers = vrp_.customers();
    const std::size_t count = std::max<std::size_t>(2, customers.size() / 8);
    std::vector<std::size_t> removed;
    for (std::size_t k = 0; k < count && !customers.empty(); ++k) {
      const auto pick = static_cast<std::size_t>(rng.below(customers.size()));
      removed.push_back(customers[pick]);
      customers.erase(customers.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    for (auto& r : routes) {
      std::erase_if(r, [&](auto c) {
        return std::find(removed.begin(), removed.end(), c) != removed.end();
      });
    }
    std::vector<std::int64_t> loads;
    for (const auto& r : routes) loads.push_back(load(r));
    for (auto c : removed) {
      std::int64_t best_delta = 0;
      std::size_t best_route = routes.size(), best_pos = 0;
      for (std::size_t b = 0; b < routes.size(); ++b) {
        if (loads[b] + vrp_.demands[c] > vrp_.capacity) continue;
        for (std::size_t q = 0; q <= routes[b].size(); ++q) {
          const auto x = node_at(routes[b], q), y = node_at(routes[b], q + 1);
          const auto delta = dist_(x, c) + dist_(c, y) - dist_(x, y);
          if (best_route == routes.size() || delta < best_delta) {
            best_delta = delta;
            best_route = b;
            best_pos = q;
          }
        }
      }
      if (best_route == routes.size()) {
        if (routes.size() >= static_cast<std::size_t>(vrp_.vehicles)) return false;
        routes.push_back({c});
        loads.push_back(vrp_.demands[c]);
        continue;
      }
      routes[best_route].insert(routes[best_route].begin() + static_cast<std::ptrdiff_t>(best_pos), c);
      loads[best_route] += vrp_.demands[c];
    }
    std::erase_if(routes, [](const auto& r) { return r.empty(); });
    return true;
  }

 private:
  const VrpInstance& vrp_;
  const DistanceMatrix& dist_;
};

}  // namespace detail

/// Clarke-Wright savings, then descent and seeded ruin-and-recreate rounds.
/// When no construction respects the fleet size the best-effort solution is
/// returned with feasible = false.
inline VrpSolution solve_vrp_native(const VrpInstance& vrp, std::uint64_t seed,
                                    VrpOptions options = {}) {
  for (std::size_t i = 0; i < vrp.size(); ++i) {
    if (i != vrp.depot && vrp.demands[i] > vrp.capacity) {
      throw Error(Errc::Infeasible, "customer " + std::to_string(i) + " demand exceeds capacity");
    }
  }
  const DistanceMatrix dist(vrp.graph);
  detail::VrpSearch search(vrp, dist);
  auto routes = search.clarke_wright();
  if (routes.size() > static_cast<std::size_t>(vrp.vehicles)) {
    if (auto packed = search.packing_fallback()) routes = std::move(*packed);
  }
  std::size_t budget = options.max_iterations;
  search.local_search(routes, budget);
  auto best = routes;
  auto best_cost = search.cost(best);

  Rng rng(seed);
  for (std::size_t round = 0; round < options.perturbations && budget > 0; ++round) {
    auto candidate = best;
    if (!search.ruin_and_recreate(candidate, rng)) continue;
    search.local_search(candidate, budget);
    const auto c = search.cost(candidate);
    if (c < best_cost) {
      best = std::move(candidate);
      best_cost = c;
    }
  }

  VrpSolution solution;
  solution.routes = std::move(best);
  const auto check = check_vrp_routes(vrp, solution.routes);
  solution.cost = check.cost;
  solution.feasible = check.feasible();
  return solution;
}

}  // namespace metasolve

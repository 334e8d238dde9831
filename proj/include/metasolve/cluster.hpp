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

// Cluster-first decompositions of a CVRP and the recomposition of
// per-cluster solutions.
//
// Two decompositions exist:
//  - k-means on customer coordinates, each cluster a smaller CVRP;
//  - two-phase clustering: an angular sweep (creation phase) packs
//    customers into truck-sized groups, then best-improvement relocate and
//    swap moves (improvement phase) reduce the sum of nearest-neighbour tour
//    estimates. Each group becomes a TSP that one truck can serve.
//
// In every sub-instance local node 0 is the depot and local node i >= 1 is
// clusters[c][i - 1].

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metasolve/common.hpp"
#include "metasolve/external.hpp"
#include "metasolve/formats.hpp"
#include "metasolve/routing.hpp"

namespace metasolve {

enum class ClusteringKind { KMeansVrp, TwoPhaseTsp };

inline std::string_view clustering_kind_name(ClusteringKind kind) {
  return kind == ClusteringKind::KMeansVrp ? "kmeans-vrp" : "two-phase-tsp";
}

struct ClusterSlot {
  std::size_t cluster = 0;
  std::size_t local = 0;
  bool operator==(const ClusterSlot&) const = default;
};

struct ClusteringResult {
  ClusteringKind kind = ClusteringKind::TwoPhaseTsp;
  std::vector<std::vector<std::size_t>> clusters;  // original customer ids
  std::vector<RoutingInstance> sub_instances;
  std::map<std::size_t, ClusterSlot> membership;
};

/// Materializes sub-instances and membership for a given partition.
inline ClusteringResult build_clustering(const VrpInstance& vrp, ClusteringKind kind,
                                         std::vector<std::vector<std::size_t>> clusters) {
  ClusteringResult out;
  out.kind = kind;
  out.clusters = std::move(clusters);
  for (std::size_t c = 0; c < out.clusters.size(); ++c) {
    const auto& members = out.clusters[c];
    std::vector<std::size_t> nodes{vrp.depot};
    nodes.insert(nodes.end(), members.begin(), members.end());
    TspInstance graph;
    graph.name = vrp.graph.name + "-c" + std::to_string(c + 1);
    graph.kind = vrp.graph.kind;
    if (graph.kind == EdgeWeightKind::Euc2d) {
      for (auto v : nodes) graph.coords.push_back(vrp.graph.coords[v]);
    } else {
      graph.matrix.assign(nodes.size(), std::vector<std::int64_t>(nodes.size(), 0));
      for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = 0; j < nodes.size(); ++j)
          graph.matrix[i][j] = vrp.graph.matrix[nodes[i]][nodes[j]];
    }
    for (std::size_t i = 0; i < members.size(); ++i) out.membership[members[i]] = {c, i + 1};
    if (kind == ClusteringKind::TwoPhaseTsp) {
      out.sub_instances.emplace_back(std::move(graph));
    } else {
      VrpInstance sub;
      sub.graph = std::move(graph);
      sub.capacity = vrp.capacity;
      sub.depot = 0;
      for (auto v : nodes) sub.demands.push_back(v == vrp.depot ? 0 : vrp.demands[v]);
      sub.vehicles = static_cast<int>(
          std::max<std::int64_t>(1, (sub.total_demand() + vrp.capacity - 1) / vrp.capacity));
      out.sub_instances.emplace_back(std::move(sub));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansOptions {
  std::size_t max_iterations = 300;
  std::size_t initializations = 10;  // k-means++ restarts; lowest inertia wins
};

namespace detail {

inline double squared(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct KMeansRun {
  std::vector<std::size_t> assignment;
  double inertia = 0;
};

inline KMeansRun lloyd(const std::vector<Point>& pts, std::size_t k, Rng& rng,
                       std::size_t max_iterations) {
  const std::size_t m = pts.size();
  // k-means++ seeding.
  std::vector<Point> centroids{pts[rng.below(m)]};
  std::vector<double> d2(m);
  while (centroids.size() < k) {
    double total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) d2[i] = std::min(d2[i], squared(pts[i], c));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < m && u >= d2[pick]; ++pick) u -= d2[pick];
      while (d2[pick] == 0 && pick > 0) --pick;
    } else {
      pick = rng.below(m);
    }
    centroids.push_back(pts[pick]);
  }

  KMeansRun run;
  run.assignment.assign(m, k);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (squared(pts[i], centroids[c]) < squared(pts[i], centroids[best])) best = c;
      }
      if (run.assignment[i] != best) {
        run.assignment[i] = best;
        changed = true;
      }
    }
    // Empty clusters take the customer farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<std::size_t> sizes(k, 0);
      for (auto a : run.assignment) ++sizes[a];
      if (sizes[c] > 0) continue;
      std::size_t far = m;
      for (std::size_t i = 0; i < m; ++i) {
        if (sizes[run.assignment[i]] < 2) continue;
        if (far == m || squared(pts[i], centroids[run.assignment[i]]) >
                            squared(pts[far], centroids[run.assignment[far]])) {
          far = i;
        }
      }
      run.assignment[far] = c;
      centroids[c] = pts[far];
      changed = true;
    }
    std::vector<Point> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      sums[run.assignment[i]].x += pts[i].x;
      sums[run.assignment[i]].y += pts[i].y;
      ++counts[run.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      centroids[c] = {sums[c].x / static_cast<double>(counts[c]), sums[c].y / static_cast<double>(counts[c])};
    }
    if (!changed) break;
  }
  for (std::size_t i = 0; i < m; ++i) run.inertia += squared(pts[i], centroids[run.assignment[i]]);
  return run;
}

inline std::vector<std::vector<std::size_t>> canonical_clusters(std::vector<std::vector<std::size_t>> clusters) {
  std::erase_if(clusters, [](const auto& c) { return c.empty(); });
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return clusters;
}

}  // namespace detail

/// Lloyd iterations on customer coordinates; every cluster becomes a CVRP
/// with the depot, the parent capacity and ceil(demand / Q) vehicles.
inline ClusteringResult kmeans_cluster(const VrpInstance& vrp, std::size_t k_clusters,
                                       std::uint64_t seed, KMeansOptions options = {}) {
  if (vrp.graph.kind != EdgeWeightKind::Euc2d) {
    throw Error(Errc::NotEuclidean, "k-means needs node coordinates");
  }
  const auto customers = vrp.customers();
  if (k_clusters < 1 || k_clusters > customers.size()) {
    throw Error(Errc::InvalidArgument, "cluster count must be in 1.." + std::to_string(customers.size()));
  }
  std::vector<Point> pts;
  for (auto c : customers) pts.push_back(vrp.graph.coords[c]);
  Rng rng(seed);
  std::optional<detail::KMeansRun> best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, options.initializations); ++r) {
    auto run = detail::lloyd(pts, k_clusters, rng, options.max_iterations);
    if (!best || run.inertia < best->inertia - 1e-9) best = std::move(run);
  }
  std::vector<std::vector<std::size_t>> clusters(k_clusters);
  for (std::size_t i = 0; i < customers.size(); ++i) clusters[best->assignment[i]].push_back(customers[i]);
  return build_clustering(vrp, ClusteringKind::KMeansVrp, detail::canonical_clusters(std::move(clusters)));
}

// ---------------------------------------------------------------------------
// Two-phase clustering
// ---------------------------------------------------------------------------

struct TwoPhaseOptions {
  std::size_t max_moves = 1000;
  std::size_t start_angles = 8;
};

namespace detail {

/// Nearest-neighbour closed tour from the depot through `members`.
inline std::int64_t nn_tour_estimate(const DistanceMatrix& dist, std::size_t depot,
                                     const std::vector<std::size_t>& members) {
  if (members.empty()) return 0;
  std::vector<bool> used(members.size(), false);
  std::size_t at = depot;
  std::int64_t cost = 0;
  for (std::size_t step = 0; step < members.size(); ++step) {
    std::size_t best = members.size();
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (used[i]) continue;
      if (best == members.size() || dist(at, members[i]) < dist(at, members[best])) best = i;
    }
    used[best] = true;
    cost += dist(at, members[best]);
    at = members[best];
  }
  return cost + dist(at, depot);
}

inline std::optional<std::vector<std::vector<std::size_t>>> sweep(const VrpInstance& vrp, double start) {
  const auto& depot = vrp.graph.coords[vrp.depot];
  auto customers = vrp.customers();
  const double two_pi = 2 * std::numbers::pi;
  const auto key = [&](std::size_t c) {
    const auto& p = vrp.graph.coords[c];
    double a = std::atan2(p.y - depot.y, p.x - depot.x) - start;
    a = std::fmod(a, two_pi);
    if (a < 0) a += two_pi;
    if (a >= two_pi) a -= two_pi;
    return std::pair{a, squared(p, depot)};
  };
  std::stable_sort(customers.begin(), customers.end(), [&](auto a, auto b) { return key(a) < key(b); });
  std::vector<std::vector<std::size_t>> clusters(1);
  std::int64_t load = 0;
  for (auto c : customers) {
    if (load + vrp.demands[c] > vrp.capacity) {
      clusters.emplace_back();
      load = 0;
    }
    clusters.back().push_back(c);
    load += vrp.demands[c];
  }
  if (clusters.size() > static_cast<std::size_t>(vrp.vehicles)) return std::nullopt;
  return clusters;
}

}  // namespace detail

/// Creation phase: angular sweep from up to 8 evenly spaced start angles,
/// closing a cluster when the next customer would exceed Q. Improvement
/// phase: best-improvement relocate/swap between clusters that keep capacity
/// and reduce the summed nearest-neighbour tour estimate. Deterministic; the
/// seed is accepted for interface uniformity with the other steps.
inline ClusteringResult two_phase_cluster(const VrpInstance& vrp, [[maybe_unused]] std::uint64_t seed,
                                          TwoPhaseOptions options = {}) {
  if (vrp.graph.kind != EdgeWeightKind::Euc2d) {
    throw Error(Errc::NotEuclidean, "the angular sweep needs node coordinates");
  }
  if (!vrp.capacity_feasible()) {
    throw Error(Errc::Infeasible, "total demand " + std::to_string(vrp.total_demand()) +
                                      " exceeds fleet capacity " +
                                      std::to_string(static_cast<std::int64_t>(vrp.vehicles) * vrp.capacity));
  }
  std::optional<std::vector<std::vector<std::size_t>>> clusters;
  const std::size_t attempts = std::max<std::size_t>(1, options.start_angles);
  for (std::size_t a = 0; a < attempts && !clusters; ++a) {
    clusters = detail::sweep(vrp, 2 * std::numbers::pi * static_cast<double>(a) / static_cast<double>(attempts));
  }
  if (!clusters) {
    throw Error(Errc::Infeasible, "sweep could not pack customers into " + std::to_string(vrp.vehicles) +
                                      " clusters from " + std::to_string(attempts) + " start angles");
  }

  const DistanceMatrix dist(vrp.graph);
  auto& cl = *clusters;
  std::vector<std::int64_t> loads, est;
  for (const auto& c : cl) {
    std::int64_t l = 0;
    for (auto v : c) l += vrp.demands[v];
    loads.push_back(l);
    est.push_back(detail::nn_tour_estimate(dist, vrp.depot, c));
  }

  for (std::size_t moves = 0; moves < options.max_moves; ++moves) {
    std::int64_t best_delta = 0;
    enum class Move { None, Relocate, Swap } kind = Move::None;
    std::size_t ba = 0, bb = 0, bi = 0, bj = 0;
    std::int64_t best_ea = 0, best_eb = 0;
    for (std::size_t a = 0; a < cl.size(); ++a) {
      for (std::size_t i = 0; i < cl[a].size(); ++i) {
        const auto c = cl[a][i];
        auto without = cl[a];
        without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
        const auto ea = detail::nn_tour_estimate(dist, vrp.depot, without);
        for (std::size_t b = 0; b < cl.size(); ++b) {
          if (b == a) continue;
          if (loads[b] + vrp.demands[c] <= vrp.capacity) {
            auto with = cl[b];
            with.push_back(c);
            const auto eb = detail::nn_tour_estimate(dist, vrp.depot, with);
            const auto delta = ea + eb - est[a] - est[b];
            if (delta < best_delta) {
              best_delta = delta;
              kind = Move::Relocate;
              ba = a, bb = b, bi = i, best_ea = ea, best_eb = eb;
            }
          }
          if (b < a) continue;  // each swap pair once
          for (std::size_t j = 0; j < cl[b].size(); ++j) {
            const auto d = cl[b][j];
            if (loads[a] - vrp.demands[c] + vrp.demands[d] > vrp.capacity ||
                loads[b] - vrp.demands[d] + vrp.demands[c] > vrp.capacity) {
              continue;
            }
            auto na = cl[a], nb = cl[b];
            na[i] = d;
            nb[j] = c;
            const auto ea2 = detail::nn_tour_estimate(dist, vrp.depot, na);
            const auto eb2 = detail::nn_tour_estimate(dist, vrp.depot, nb);
            const auto delta = ea2 + eb2 - est[a] - est[b];
            if (delta < best_delta) {
              best_delta = delta;
              kind = Move::Swap;
              ba = a, bb = b, bi = i, bj = j, best_ea = ea2, best_eb = eb2;
            }
          }
        }
      }
    }
    if (kind == Move::None) break;
    if (kind == Move::Relocate) {
      const auto c = cl[ba][bi];
      cl[ba].erase(cl[ba].begin() + static_cast<std::ptrdiff_t>(bi));
      cl[bb].push_back(c);
      loads[ba] -= vrp.demands[c];
      loads[bb] += vrp.demands[c];
    } else {
      const auto c = cl[ba][bi], d = cl[bb][bj];
      cl[ba][bi] = d;
      cl[bb][bj] = c;
      loads[ba] += vrp.demands[d] - vrp.demands[c];
      loads[bb] += vrp.demands[c] - vrp.demands[d];
    }
    est[ba] = best_ea;
    est[bb] = best_eb;
  }
  return build_clustering(vrp, ClusteringKind::TwoPhaseTsp, detail::canonical_clusters(std::move(cl)));
}

// ---------------------------------------------------------------------------
// Recomposition
// ---------------------------------------------------------------------------

/// Maps per-cluster solutions back to the original instance. A nullopt entry
/// marks a cluster whose solve produced no solution: the composition is then
/// reported infeasible. Cost is recomputed from the original distances.
inline VrpSolution recompose(const VrpInstance& vrp, const ClusteringResult& clustering,
                             const std::vector<std::optional<RoutingSolution>>& sub_results) {
  if (sub_results.size() != clustering.clusters.size()) {
    throw Error(Errc::MissingSubResult, "expected " + std::to_string(clustering.clusters.size()) +
                                            " sub-results, got " + std::to_string(sub_results.size()));
  }
  VrpSolution out;
  bool missing = false;
  for (std::size_t c = 0; c < sub_results.size(); ++c) {
    const auto& members = clustering.clusters[c];
    const auto to_original = [&](std::size_t local) {
      if (local == 0 || local > members.size()) {
        throw Error(Errc::CoverageViolation, "cluster " + std::to_string(c) + " references local node " +
                                                 std::to_string(local));
      }
      return members[local - 1];
    };
    if (!sub_results[c]) {
      missing = true;
      continue;
    }
    if (const auto* tour = std::get_if<Tour>(&*sub_results[c])) {
      if (!is_permutation_of_n(tour->order, members.size() + 1)) {
        throw Error(Errc::CoverageViolation, "tour of cluster " + std::to_string(c) +
                                                 " does not visit each of its nodes exactly once");
      }
      auto order = tour->order;
      detail::rotate_to(order, 0);
      std::vector<std::size_t> route;
      for (std::size_t i = 1; i < order.size(); ++i) route.push_back(to_original(order[i]));
      if (!route.empty()) out.routes.push_back(std::move(route));
    } else {
      const auto& sub = std::get<VrpSolution>(*sub_results[c]);
      for (const auto& local_route : sub.routes) {
        std::vector<std::size_t> route;
        for (auto v : local_route) route.push_back(to_original(v));
        if (!route.empty()) out.routes.push_back(std::move(route));
      }
    }
  }
  const auto check = check_vrp_routes(vrp, out.routes);
  if (!missing && !check.coverage_exact) {
    throw Error(Errc::CoverageViolation, "composed routes do not cover every customer exactly once");
  }
  out.cost = check.cost;
  out.feasible = !missing && check.feasible();
  return out;
}

}  // namespace metasolve

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

#include <catch_amalgamated.hpp>

#include "metasolve/routing.hpp"
#include "oracles.hpp"

using namespace metasolve;

TEST_CASE("oracle sanity on hand-checked instances") {
  std::vector<Point> square{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  CHECK(oracle::tsp_optimum(square) == 40);
  VrpInstance v;
  v.graph.coords = {{0, 0}, {10, 0}, {-10, 0}};
  v.demands = {0, 5, 5};
  v.capacity = 5;
  v.vehicles = 2;
  CHECK(oracle::vrp_optimum(v) == 40);
  v.capacity = 10;
  CHECK(oracle::vrp_optimum(v) == 40);  // one route 0-1-2-0 also costs 40
  v.vehicles = 1;
  v.capacity = 5;
  CHECK(oracle::vrp_optimum(v) >= oracle::kInf);
}

TEST_CASE("native TSP never beats the optimum and usually finds it at n=8") {
  std::mt19937_64 rng(2024);
  int equal = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = oracle::random_tsp(8, rng);
    const auto opt = oracle::tsp_optimum(inst.coords);
    const auto tour = solve_tsp_native(inst, s);
    REQUIRE(is_permutation_of_n(tour.order, 8));
    CHECK(tour.cost == oracle::tour_length(inst.coords, tour.order));
    CHECK(tour.cost >= opt);
    if (tour.cost == opt) ++equal;
    CHECK(brute_force_tsp(inst).cost == opt);
  }
  INFO("optimal in " << equal << "/20");
  CHECK(equal >= 15);
}

TEST_CASE("native TSP handles tiny and degenerate inputs") {
  TspInstance t;
  t.coords = {{0, 0}, {3, 4}};
  CHECK(solve_tsp_native(t, 1).cost == 10);
  t.coords = {{1, 1}, {1, 1}, {1, 1}};
  CHECK(solve_tsp_native(t, 1).cost == 0);
}

TEST_CASE("native VRP is feasible and never below the exact optimum") {
  std::mt19937_64 rng(77);
  int equal = 0;
  for (std::uint64_t s = 0; s < 25; ++s) {
    const auto vrp = oracle::random_cvrp(3 + s % 5, rng);  // 3..7 customers
    const auto opt = oracle::vrp_optimum(vrp);
    const auto sol = solve_vrp_native(vrp, s);
    const auto check = check_vrp_routes(vrp, sol.routes);
    REQUIRE(check.feasible());
    CHECK(sol.feasible);
    CHECK(sol.cost == check.cost);
    CHECK(sol.cost >= opt);
    if (sol.cost == opt) ++equal;
  }
  INFO("optimal in " << equal << "/25");
  CHECK(equal >= 20);
}

TEST_CASE("native VRP is seed-deterministic") {
  std::mt19937_64 rng(5);
  const auto vrp = oracle::random_cvrp(12, rng);
  CHECK(solve_vrp_native(vrp, 9) == solve_vrp_native(vrp, 9));
}

TEST_CASE("route checker flags coverage, capacity and fleet violations") {
  VrpInstance v;
  v.graph.coords = {{0, 0}, {10, 0}, {-10, 0}, {0, 10}};
  v.demands = {0, 4, 4, 4};
  v.capacity = 8;
  v.vehicles = 2;
  auto ok = check_vrp_routes(v, {{1, 2}, {3}});
  CHECK(ok.feasible());
  CHECK(ok.cost == 40 + 20);
  CHECK_FALSE(check_vrp_routes(v, {{1, 2}}).coverage_exact);
  CHECK_FALSE(check_vrp_routes(v, {{1, 2}, {3, 1}}).coverage_exact);
  CHECK_FALSE(check_vrp_routes(v, {{1, 2, 3}}).capacity_ok);
  CHECK_FALSE(check_vrp_routes(v, {{1}, {2}, {3}}).fleet_ok);
}

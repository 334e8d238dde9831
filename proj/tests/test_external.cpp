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

#include <cstdlib>

#include "metasolve/external.hpp"
#include "oracles.hpp"

using namespace metasolve;

namespace {

struct Mode {
  explicit Mode(const char* m) { ::setenv("FAKE_LKH_MODE", m, 1); }
  ~Mode() { ::unsetenv("FAKE_LKH_MODE"); }
};

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("external TSP run round-trips through the tour file") {
  std::mt19937_64 rng(1);
  const auto tsp = oracle::random_tsp(7, rng);
  const auto sol = std::get<Tour>(solve_external(tsp, METASOLVE_FAKE_LKH, 5.0, 3));
  CHECK(sol.order == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
  CHECK(sol.cost == oracle::tour_length(tsp.coords, sol.order));
}

TEST_CASE("external CVRP run splits routes at depot copies") {
  std::mt19937_64 rng(2);
  auto vrp = oracle::random_cvrp(4, rng);
  vrp.vehicles = 4;
  const auto sol = std::get<VrpSolution>(solve_external(vrp, METASOLVE_FAKE_LKH, 5.0, 3));
  CHECK(sol.routes == std::vector<std::vector<std::size_t>>{{1}, {2}, {3}, {4}});
  CHECK(sol.feasible);
  CHECK(sol.cost == check_vrp_routes(vrp, sol.routes).cost);
}

TEST_CASE("external solver failures map to error codes") {
  std::mt19937_64 rng(3);
  const auto tsp = oracle::random_tsp(5, rng);
  CHECK(code_of([&] { solve_external(tsp, "/nonexistent/lkh"); }) == Errc::BinaryNotFound);
  const auto plain = std::filesystem::temp_directory_path() / "metasolve-not-executable";
  std::ofstream(plain) << "#!/bin/sh\n";
  std::filesystem::permissions(plain, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
  CHECK(code_of([&] { solve_external(tsp, plain.string()); }) == Errc::BinaryNotFound);
  std::filesystem::remove(plain);
  {
    Mode m("fail");
    CHECK(code_of([&] { solve_external(tsp, METASOLVE_FAKE_LKH); }) == Errc::SubprocessFailure);
  }
  {
    Mode m("notour");
    CHECK(code_of([&] { solve_external(tsp, METASOLVE_FAKE_LKH); }) == Errc::OutputParseError);
  }
  {
    Mode m("garbage");
    CHECK(code_of([&] { solve_external(tsp, METASOLVE_FAKE_LKH); }) == Errc::OutputParseError);
  }
}

TEST_CASE("a hanging binary is killed at the hard limit") {
  std::mt19937_64 rng(4);
  const auto tsp = oracle::random_tsp(5, rng);
  Mode m("hang");
  Stopwatch sw;
  // hard limit is 2 * 0.1 + 5 seconds
  CHECK(code_of([&] { solve_external(tsp, METASOLVE_FAKE_LKH, 0.1); }) == Errc::SubprocessFailure);
  CHECK(sw.elapsed_ms() < 15000);
}

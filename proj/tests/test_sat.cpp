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

#include "metasolve/sat.hpp"
#include "oracles.hpp"

using namespace metasolve;

TEST_CASE("DPLL agrees with exhaustive search on 200 random formulas") {
  std::mt19937_64 rng(42);
  int sat = 0;
  for (int i = 0; i < 200; ++i) {
    const int vars = 3 + i % 10;  // up to 12
    // clause/variable ratio around the 3-SAT threshold gives both outcomes
    const int clauses = static_cast<int>(vars * (3.0 + (i % 5) * 0.5));
    const auto f = oracle::random_cnf(vars, clauses, rng);
    const auto r = dpll_solve(f);
    CHECK(r.satisfiable == oracle::sat_exhaustive(f));
    if (r.satisfiable) {
      ++sat;
      CHECK(verify(f, r.assignment));
    }
  }
  // both branches are exercised
  CHECK(sat > 20);
  CHECK(sat < 180);
}

TEST_CASE("DPLL edge cases") {
  CnfFormula empty;
  empty.num_vars = 2;
  auto r = dpll_solve(empty);
  CHECK(r.satisfiable);
  CHECK(r.assignment.values.size() == 2);

  CnfFormula contradiction;
  contradiction.num_vars = 1;
  contradiction.clauses = {{1}, {-1}};
  CHECK_FALSE(dpll_solve(contradiction).satisfiable);

  CnfFormula empty_clause;
  empty_clause.num_vars = 1;
  empty_clause.clauses = {{}};
  CHECK_FALSE(dpll_solve(empty_clause).satisfiable);
}

TEST_CASE("verify rejects wrong sizes and falsified clauses") {
  CnfFormula f;
  f.num_vars = 2;
  f.clauses = {{1, -2}};
  CHECK(verify(f, Assignment{{true, true}}));
  CHECK_FALSE(verify(f, Assignment{{false, true}}));
  CHECK_FALSE(verify(f, Assignment{{true}}));
}

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

#include "metasolve/problem_model.hpp"
#include "oracles.hpp"

using namespace metasolve;

namespace {

const char* kSquare =
    "NAME : square\nTYPE : TSP\nDIMENSION : 4\nEDGE_WEIGHT_TYPE : EUC_2D\n"
    "NODE_COORD_SECTION\n1 0 0\n2 10 0\n3 10 10\n4 0 10\nEOF\n";

}  // namespace

TEST_CASE("transition table") {
  using S = NodeState;
  const std::vector<S> all{S::NeedsInput, S::ReadyToSolve, S::Solving, S::Solved, S::Failed};
  std::set<std::pair<S, S>> legal{{S::NeedsInput, S::ReadyToSolve}, {S::ReadyToSolve, S::Solving},
                                  {S::Solving, S::Solved},          {S::Solving, S::Failed},
                                  {S::Failed, S::ReadyToSolve},     {S::Solved, S::ReadyToSolve}};
  for (auto a : all) {
    for (auto b : all) {
      INFO(state_name(a) << " -> " << state_name(b));
      CHECK(legal_transition(a, b) == (legal.count({a, b}) > 0));
    }
  }
}

TEST_CASE("illegal transitions leave the node untouched") {
  ProblemNode n;
  n.id = "p";
  n.state = NodeState::ReadyToSolve;
  try {
    transition(n, NodeState::Solved);
    FAIL("expected IllegalTransition");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IllegalTransition);
  }
  CHECK(n.state == NodeState::ReadyToSolve);
  transition(n, NodeState::Solving);
  n.diagnostic = "x";
  transition(n, NodeState::Failed);
  CHECK(n.diagnostic == "x");
  transition(n, NodeState::ReadyToSolve);
  CHECK_FALSE(n.diagnostic);
}

TEST_CASE("problem types and payload parsing") {
  std::set<std::string> ids;
  for (const auto& t : problem_types()) ids.insert(t.type_id);
  CHECK(ids == std::set<std::string>{"vrp", "tsp", "qubo", "sat", "max-cut"});
  CHECK_THROWS_MATCHES(problem_type("knapsack"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::UnknownProblemType;
                       }));

  auto root = create_problem("tsp", kSquare);
  CHECK(root.type_id == "tsp");
  CHECK(root.state == NodeState::ReadyToSolve);
  CHECK(root.id.size() == 17);
  CHECK(root.id[0] == 'p');
  CHECK(std::holds_alternative<TspInstance>(root.payload));
  CHECK_FALSE(check_tree_invariants(root));

  // a CVRP file is not a TSP
  const char* cvrp =
      "NAME : c\nTYPE : CVRP\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 5\n"
      "NODE_COORD_SECTION\n1 0 0\n2 1 1\nDEMAND_SECTION\n1 0\n2 1\nDEPOT_SECTION\n1\n-1\nEOF\n";
  CHECK_THROWS_AS(create_problem("tsp", cvrp), Error);
  CHECK(std::holds_alternative<VrpInstance>(create_problem("vrp", cvrp).payload));
  try {
    create_problem("sat", "   \n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(e.line() == 1);
  }
}

TEST_CASE("node JSON round trip keeps payload, results and settings") {
  std::mt19937_64 rng(11);
  ProblemNode root;
  root.id = "p0123456789abcdef";
  root.type_id = "vrp";
  root.payload = oracle::random_cvrp(5, rng);
  root.solver_id = "two-phase-clustering";
  root.settings["clusters"] = 3;
  root.settings["label"] = "x";
  root.state = NodeState::Solved;

  ProblemNode set;
  set.id = child_id(root, 0);
  set.type_id = "cluster-set";
  set.state = NodeState::Solved;
  set.solver_id = "compose-clusters";
  set.payload = ClusterSet{ClusteringKind::TwoPhaseTsp, {{1, 2}, {3, 4, 5}}};

  ProblemNode leaf;
  leaf.id = child_id(set, 0);
  leaf.type_id = "tsp";
  leaf.payload = oracle::random_tsp(3, rng);
  leaf.state = NodeState::Failed;
  leaf.diagnostic = "boom";
  set.children.push_back(leaf);

  SolveResult r;
  r.payload = VrpSolution{{{1, 2}, {3, 4, 5}}, 123, true};
  r.objective = 123;
  r.feasible = true;
  r.wall_ms = 7;
  r.solver_id = "two-phase-clustering";
  r.backend_id = "local-cpu";
  r.trial_objectives = {130, 123};
  root.result = r;
  root.children.push_back(set);

  const auto j = node_to_json(root);
  CHECK(node_from_json(j) == root);
  CHECK(node_from_json(Json::parse(j.dump())) == root);
  CHECK(j["state"] == "Solved");
  CHECK(j["children"][0]["type_id"] == "cluster-set");

  SolveResult none;
  CHECK(result_to_json(none)["objective"].is_null());
  CHECK(std::isinf(result_from_json(result_to_json(none)).objective));
}

TEST_CASE("solution payload kinds round trip") {
  const std::vector<SolutionPayload> all{Tour{{0, 2, 1}, 9}, Sample{{1, 0, 1}, -2.5, 3},
                                         SatResult{true, Assignment{{true, false}}}, CutResult{{0, 1, 1}, 2.0}};
  for (const auto& s : all) CHECK(solution_from_json(solution_to_json(s)) == s);
  CHECK(solution_to_json(Sample{{1, 0, 1}, -2.5, 3})["bits"] == "101");
}

TEST_CASE("tree invariants catch duplicate ids and solved parents over unsolved children") {
  auto root = create_problem("tsp", kSquare);
  root.solver_id = "qubo-reformulation";
  ProblemNode child;
  child.id = root.id;
  child.type_id = "qubo";
  root.children.push_back(child);
  CHECK(check_tree_invariants(root));
  root.children[0].id = child_id(root, 0);
  CHECK_FALSE(check_tree_invariants(root));
  root.state = NodeState::Solved;
  root.result = SolveResult{};
  CHECK(check_tree_invariants(root));
  root.solver_id.reset();
  root.state = NodeState::ReadyToSolve;
  root.result.reset();
  CHECK(check_tree_invariants(root));  // children without a solver
}

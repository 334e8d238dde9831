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

#include <fstream>
#include <sstream>

#include "metasolve/orchestrator.hpp"
#include "oracles.hpp"

using namespace metasolve;

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(METASOLVE_DATA_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

SolutionPath path(const std::string& type, const std::string& spec) {
  return StrategyRegistry::builtin().parse_path_spec(type, spec);
}

}  // namespace

TEST_CASE("selecting a solver creates its child slots") {
  auto root = create_problem("vrp", slurp("cvrp-small/S-n9-k3.vrp"));
  select_solver(root, "two-phase-clustering");
  REQUIRE(root.children.size() == 1);
  CHECK(root.children[0].type_id == "cluster-set");
  CHECK(root.children[0].state == NodeState::NeedsInput);
  select_solver(root, "two-phase-clustering");  // no-op
  CHECK(root.children.size() == 1);
  CHECK(code_of([&] { select_solver(root, "qaoa"); }) == Errc::TypeMismatch);
  CHECK(code_of([&] { select_solver(root.children[0], "native-vrp"); }) == Errc::IllegalState);

  auto tsp = create_problem("tsp", slurp("tsp/square.tsp"));
  select_solver(tsp, "qubo-reformulation");
  REQUIRE(tsp.children.size() == 1);
  CHECK(tsp.children[0].type_id == "qubo");
  CHECK(std::get<QuboModel>(tsp.children[0].payload).n == 9);
  CHECK(tsp.children[0].state == NodeState::ReadyToSolve);
  CHECK_FALSE(check_tree_invariants(tsp));
}

TEST_CASE("stepwise and complete execution agree") {
  const auto reg = BackendRegistry::defaults();
  const ExecutionContext ctx(reg);
  for (const std::string spec : {"two-phase-clustering/native-local-search",
                                 "two-phase-clustering/qubo-reformulation/simulated-annealing"}) {
    auto complete = create_problem("vrp", slurp("cvrp-small/S-n9-k3.vrp"));
    const auto full = run_complete(complete, path("vrp", spec), 1, 17, ctx);
    CHECK(full.feasible);
    CHECK_FALSE(check_tree_invariants(complete));

    auto step = create_problem("vrp", slurp("cvrp-small/S-n9-k3.vrp"));
    select_solver(step, "two-phase-clustering");
    CHECK(step_blocker(step, step.id) == std::nullopt);
    execute_step(step, step.id, 1, 17, ctx);  // fan out
    auto& set = step.children[0];
    REQUIRE(set.children.size() == complete.children[0].children.size());
    CHECK(step_blocker(step, step.id));
    CHECK(code_of([&] { execute_step(step, step.id, 1, 17, ctx); }) == Errc::IllegalState);
    for (auto& c : set.children) {
      if (spec.find("qubo") == std::string::npos) {
        select_solver(c, "native-local-search");
        execute_step(step, c.id, 1, 17, ctx);
      } else {
        select_solver(c, "qubo-reformulation");
        CHECK(step_blocker(step, c.id));
        select_solver(c.children[0], "simulated-annealing");
        execute_step(step, c.children[0].id, 1, 17, ctx);
        execute_step(step, c.id, 1, 17, ctx);
      }
      CHECK(c.state == NodeState::Solved);
    }
    execute_step(step, step.id, 1, 17, ctx);
    REQUIRE(step.state == NodeState::Solved);
    CHECK(step.result->objective == full.objective);
    CHECK(step.result->payload == full.payload);
    CHECK(selected_path_spec(step) == spec);
    CHECK_FALSE(check_tree_invariants(step));
  }
}

TEST_CASE("complete runs are seed-deterministic and reject bad paths") {
  const auto reg = BackendRegistry::defaults();
  const ExecutionContext ctx(reg);
  auto a = create_problem("vrp", slurp("cvrp-small/S-n10-k3.vrp"));
  auto b = a;
  const auto p = path("vrp", "native-vrp");
  CHECK(run_complete(a, p, 2, 5, ctx).objective == run_complete(b, p, 2, 5, ctx).objective);
  CHECK(a.result->trial_objectives.size() == 2);
  CHECK(code_of([&] { run_complete(a, {{"x", "qaoa"}}, 1, 1, ctx); }) == Errc::InvalidPath);
}

TEST_CASE("solutions of the small CVRPs reach their known optimum") {
  const auto reg = BackendRegistry::defaults();
  const ExecutionContext ctx(reg);
  auto root = create_problem("vrp", slurp("cvrp-small/S-n9-k3.vrp"));
  const auto r = run_complete(root, path("vrp", "native-vrp"), 1, 1, ctx);
  CHECK(r.feasible);
  CHECK(r.objective == oracle::vrp_optimum(std::get<VrpInstance>(root.payload)));
}

TEST_CASE("settings flow from the root to the leaves") {
  const auto reg = BackendRegistry::defaults();
  const ExecutionContext ctx(reg);
  auto root = create_problem("vrp", slurp("cvrp-small/S-n9-k3.vrp"));
  root.settings["sweeps"] = 7;
  run_complete(root, path("vrp", "two-phase-clustering/qubo-reformulation/simulated-annealing"), 1, 1, ctx);
  for_each_node(root, [](const ProblemNode& n) { CHECK(n.settings.at("sweeps") == 7); });

  auto bad = create_problem("qubo", "qubo 2\n0 0 1\n0 1 -1\n1 1 2\n");
  bad.settings["sweeps"] = "many";
  CHECK(code_of([&] { run_complete(bad, path("qubo", "simulated-annealing"), 1, 1, ctx); }) == Errc::InvalidArgument);
  CHECK(bad.state == NodeState::Failed);
  CHECK(bad.diagnostic);
}

TEST_CASE("a failed node can be retried after reset") {
  const auto reg = BackendRegistry::defaults();
  const ExecutionContext ctx(reg);
  auto root = create_problem("tsp", slurp("tsp/square.tsp"));
  select_solver(root, "native-local-search");
  execute_step(root, root.id, 1, 1, ctx);
  CHECK(root.state == NodeState::Solved);
  CHECK(root.result->objective == 40);
  CHECK(step_blocker(root, root.id));
  reset_for_resolve(root, root.id);
  CHECK(root.state == NodeState::ReadyToSolve);
  CHECK_FALSE(root.result);
  execute_step(root, root.id, 1, 1, ctx);
  CHECK(root.result->objective == 40);
}

TEST_CASE("suggestions rank by the weighted score and respect qubit caps") {
  const auto reg = BackendRegistry::defaults();
  auto tsp = create_problem("tsp", slurp("tsp/square.tsp"));
  const auto fast = suggest(tsp, 1.0, reg);
  const auto good = suggest(tsp, 0.0, reg);
  REQUIRE_FALSE(fast.ranked.empty());
  for (std::size_t i = 1; i < fast.ranked.size(); ++i) {
    if (fast.ranked[i].feasible) CHECK(fast.ranked[i - 1].score >= fast.ranked[i].score);
  }
  CHECK(fast.ranked[0].score == Catch::Approx(fast.ranked[0].speed / 5.0));
  CHECK(good.ranked[0].score == Catch::Approx(good.ranked[0].quality / 5.0));
  const auto qaoa = std::find_if(fast.ranked.begin(), fast.ranked.end(), [](const auto& e) { return e.solver_id == "qaoa"; });
  REQUIRE(qaoa != fast.ranked.end());
  CHECK(qaoa->via == "qubo-reformulation");
  CHECK(qaoa->feasible);  // 9 qubits

  // 7 cities need 36 qubits, beyond the 22-qubit simulator
  std::mt19937_64 rng(1);
  auto big = create_problem("tsp", write_tsplib(oracle::random_tsp(7, rng)));
  const auto s = suggest(big, 0.5, reg);
  const auto q = std::find_if(s.ranked.begin(), s.ranked.end(), [](const auto& e) { return e.solver_id == "qaoa"; });
  REQUIRE(q != s.ranked.end());
  CHECK_FALSE(q->feasible);
  CHECK(q->score == 0.0);
  CHECK(q->rationale.find("36") != std::string::npos);
  CHECK(code_of([&] { suggest(big, 1.5, reg); }) == Errc::InvalidArgument);

  const auto j = suggestion_to_json(s);
  CHECK((j["confidence"] == "high" || j["confidence"] == "low"));
  CHECK(j["ranked"].size() == s.ranked.size());
}

TEST_CASE("a unique top score has high confidence") {
  CHECK(rank_by_score({{1, 1}, {5, 5}, {3, 3}}, 0.5) == std::vector<std::size_t>{1, 2, 0});
  CHECK(suggestion_score(5, 1, 1.0) == Catch::Approx(1.0));
  CHECK(suggestion_score(5, 1, 0.0) == Catch::Approx(0.2));
}

TEST_CASE("backends: qubit caps and a missing external binary") {
  auto reg = BackendRegistry::from_json(nlohmann::json::parse(R"({"backends": [
      {"backend_id": "cpu", "kind": "local-cpu", "capabilities": {"max_threads": 2}},
      {"backend_id": "sv", "kind": "statevector-sim", "capabilities": {"max_qubits": 4}},
      {"backend_id": "lkh", "kind": "subprocess", "capabilities": {"binary_path": "/nonexistent"}}]})"));
  CHECK(reg.max_threads() == 2);
  CHECK_FALSE(reg.all()[2].available);
  const ExecutionContext ctx(reg);
  auto tsp = create_problem("tsp", slurp("tsp/square.tsp"));
  CHECK(code_of([&] { run_complete(tsp, path("tsp", "qubo-reformulation/qaoa"), 1, 1, ctx); }) ==
        Errc::NoCompatibleBackend);
  CHECK(tsp.state == NodeState::Failed);
  auto ext = create_problem("tsp", slurp("tsp/square.tsp"));
  CHECK_FALSE(suggest(ext, 0.5, reg).ranked.empty());

  auto with_lkh = BackendRegistry::defaults(std::string(METASOLVE_FAKE_LKH));
  CHECK(with_lkh.all()[3].available);
}

TEST_CASE("comparison runs each path and trial independently") {
  const auto reg = BackendRegistry::defaults();
  const ExecutionContext ctx(reg);
  const auto root = create_problem("vrp", slurp("cvrp-small/S-n9-k3.vrp"));
  const auto report = run_parallel(root,
                                   {path("vrp", "native-vrp"), path("vrp", "two-phase-clustering/native-local-search")},
                                   3, 11, ctx);
  REQUIRE(report.rows.size() == 6);
  REQUIRE(report.paths.size() == 2);
  CHECK(report.paths[0].rows == 3);
  CHECK(report.paths[0].median_objective);
  CHECK_FALSE(report.paths[0].simulated_quantum);
  for (std::size_t i = 0; i < 6; ++i) CHECK(report.rows[i].seed == trial_seed(11, i % 3));
  CHECK(root.state == NodeState::ReadyToSolve);  // the input tree is not touched
  const auto again = run_parallel(root,
                                  {path("vrp", "native-vrp"), path("vrp", "two-phase-clustering/native-local-search")},
                                  3, 11, ctx);
  for (std::size_t i = 0; i < 6; ++i) CHECK(again.rows[i].objective == report.rows[i].objective);
  CHECK(code_of([&] { run_parallel(root, {path("vrp", "native-vrp")}, 1, 1, ctx); }) == Errc::InvalidArgument);
  const auto j = comparison_to_json(report);
  CHECK(j.contains("rows"));
  CHECK(median({3, 1, 2}) == 2);
  CHECK(uses_simulated_quantum("two-phase-clustering/qubo-reformulation/qaoa"));
}

TEST_CASE("cancellation stops a complete run") {
  const auto reg = BackendRegistry::defaults();
  ExecutionContext ctx(reg);
  std::atomic<bool> cancel{true};
  ctx.cancel = &cancel;
  auto root = create_problem("vrp", slurp("cvrp-small/S-n9-k3.vrp"));
  CHECK(code_of([&] { run_complete(root, path("vrp", "native-vrp"), 1, 1, ctx); }) == Errc::Cancelled);
}

TEST_CASE("the external routing solver runs through its subprocess backend") {
  const auto reg = BackendRegistry::defaults(std::string(METASOLVE_FAKE_LKH));
  const ExecutionContext ctx(reg);
  auto root = create_problem("tsp", slurp("tsp/square.tsp"));
  select_solver(root, "external-lkh-tsp");
  execute_step(root, root.id, 1, 1, ctx);
  REQUIRE(root.state == NodeState::Solved);
  CHECK(root.result->objective == 40);
  CHECK(root.result->backend_id == "lkh");

  const auto none = BackendRegistry::defaults(std::string("/nonexistent/lkh"));
  const ExecutionContext bare(none);
  auto other = create_problem("tsp", slurp("tsp/square.tsp"));
  select_solver(other, "external-lkh-tsp");
  CHECK(code_of([&] { execute_step(other, other.id, 1, 1, bare); }) == Errc::NoCompatibleBackend);
  CHECK(other.state == NodeState::Failed);
}

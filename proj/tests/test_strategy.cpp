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

#include <filesystem>
#include <fstream>

#include "metasolve/strategy.hpp"

using namespace metasolve;

namespace {

std::vector<std::string> specs(const std::vector<SolutionPath>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(path_to_string(p));
  return out;
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

}  // namespace

TEST_CASE("vrp strategy with one clustering level has six paths, five available") {
  const auto& reg = StrategyRegistry::builtin();
  PathConstraints one;
  one.max_clusterings = 1;
  const auto all = specs(reg.enumerate_paths("vrp", one));
  CHECK(all == std::vector<std::string>{
                   "native-vrp",
                   "kmeans-clustering/native-vrp",
                   "two-phase-clustering/native-local-search",
                   "two-phase-clustering/qubo-reformulation/simulated-annealing",
                   "two-phase-clustering/qubo-reformulation/qaoa",
                   "two-phase-clustering/phase-estimation",
               });
  one.available_only = true;
  CHECK(reg.enumerate_paths("vrp", one).size() == 5);

  PathConstraints none;
  none.max_clusterings = 0;
  CHECK(specs(reg.enumerate_paths("vrp", none)) == std::vector<std::string>{"native-vrp"});
}

TEST_CASE("leaf counts of the other strategies") {
  const auto& reg = StrategyRegistry::builtin();
  CHECK(specs(reg.enumerate_paths("qubo")) ==
        std::vector<std::string>{"simulated-annealing", "qaoa", "qubo-brute-force"});
  CHECK(reg.enumerate_paths("tsp").size() == 5);
  CHECK(reg.enumerate_paths("max-cut").size() == 3);
  CHECK(reg.enumerate_paths("sat").size() == 1);
  CHECK(code_of([&] { reg.enumerate_paths("nope"); }) == Errc::UnknownStrategy);
}

TEST_CASE("the path step ids come from the strategy tree") {
  const auto p = StrategyRegistry::builtin().parse_path_spec("vrp", "two-phase-clustering/qubo-reformulation/qaoa");
  REQUIRE(p.size() == 3);
  CHECK(p[0] == PathStep{"two-phase-clustering", "two-phase-clustering"});
  CHECK(p[1] == PathStep{"solve-as-qubo", "qubo-reformulation"});
  CHECK(p[2] == PathStep{"qaoa", "qaoa"});
  CHECK(StrategyRegistry::builtin().parse_path_spec("vrp", "solve-vrp-directly:native-vrp") ==
        SolutionPath{{"solve-vrp-directly", "native-vrp"}});
}

TEST_CASE("path validation names the defect") {
  const auto& reg = StrategyRegistry::builtin();
  CHECK(reg.validate_path("vrp", {}) == "empty path");
  auto mismatch = reg.validate_path("vrp", {{"two-phase-clustering", "two-phase-clustering"}, {"x", "native-vrp"}});
  REQUIRE(mismatch);
  CHECK(*mismatch == "step 2: native-vrp consumes vrp but two-phase-clustering produces tsp");
  auto unknown = reg.validate_path("vrp", {{"a", "warp-drive"}});
  REQUIRE(unknown);
  CHECK(unknown->find("unknown solver") != std::string::npos);
  auto dangling = reg.validate_path("vrp", {{"two-phase-clustering", "two-phase-clustering"}});
  REQUIRE(dangling);
  CHECK(dangling->find("before reaching a solver leaf") != std::string::npos);
  auto trailing = reg.validate_path("vrp", {{"solve-vrp-directly", "native-vrp"}, {"x", "native-vrp"}});
  REQUIRE(trailing);
  CHECK(trailing->find("continues after leaf") != std::string::npos);
  // brute force is excluded below the VRP clustering step
  CHECK(reg.validate_path("vrp", reg.parse_path_spec("tsp", "qubo-reformulation/qubo-brute-force")));
  CHECK(code_of([&] { reg.parse_path_spec("vrp", "two-phase-clustering/native-vrp"); }) == Errc::InvalidPath);
  CHECK(code_of([&] { reg.parse_path_spec("vrp", ""); }) == Errc::InvalidPath);
  for (const auto& p : reg.enumerate_paths("vrp")) CHECK_FALSE(reg.validate_path("vrp", p));
}

TEST_CASE("cyclic strategy references are rejected") {
  StrategyRegistry reg(SolverCatalog::builtin());
  reg.add(strategy_from_json(nlohmann::json::parse(R"({"id": "a", "problem_type": "tsp", "nodes": [
      {"step_id": "q", "kind": "decomposition", "solver_id": "qubo-reformulation", "produces": ["qubo"],
       "children": [{"step_id": "r", "kind": "strategy-ref", "ref": "b"}]}]})")));
  reg.add(strategy_from_json(nlohmann::json::parse(R"({"id": "b", "problem_type": "qubo", "nodes": [
      {"step_id": "back", "kind": "strategy-ref", "ref": "b"}]})")));
  CHECK(code_of([&] { reg.enumerate_paths("a"); }) == Errc::CyclicStrategyReference);

  StrategyRegistry typed(SolverCatalog::builtin());
  for (const auto& j : nlohmann::json::parse(kBuiltinStrategies)) typed.add(strategy_from_json(j));
  typed.add(strategy_from_json(nlohmann::json::parse(R"({"id": "bad", "problem_type": "tsp", "nodes": [
      {"step_id": "r", "kind": "strategy-ref", "ref": "vrp"}]})")));
  CHECK(code_of([&] { typed.enumerate_paths("bad"); }) == Errc::TypeMismatch);
}

TEST_CASE("strategy documents round trip and load from a directory") {
  for (const auto& j : nlohmann::json::parse(kBuiltinStrategies)) {
    const auto s = strategy_from_json(j);
    CHECK(strategy_to_json(strategy_from_json(strategy_to_json(s))) == strategy_to_json(s));
  }
  const auto dir = std::filesystem::temp_directory_path() / "metasolve-strategies-test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "direct.json") << R"({"id": "tsp-direct", "problem_type": "tsp", "nodes": [
      {"step_id": "go", "kind": "solver-leaf", "solver_id": "native-local-search"}]})";
  StrategyRegistry reg(SolverCatalog::builtin());
  reg.load_directory(dir);
  CHECK(reg.contains("tsp-direct"));
  CHECK(specs(reg.enumerate_paths("tsp-direct")) == std::vector<std::string>{"native-local-search"});
  std::filesystem::remove_all(dir);
}

TEST_CASE("inlined vrp strategy carries no refs") {
  const auto s = StrategyRegistry::builtin().inline_refs("vrp");
  std::function<void(const std::vector<StrategyNode>&)> check = [&](const auto& nodes) {
    for (const auto& n : nodes) {
      CHECK(n.kind != StepKind::StrategyRef);
      check(n.children);
    }
  };
  check(s.nodes);
}

TEST_CASE("solver catalog annotations") {
  const auto& cat = SolverCatalog::builtin();
  for (const auto& d : cat.all()) {
    CHECK(d.quality >= 1);
    CHECK(d.quality <= 5);
    CHECK(d.speed >= 1);
    CHECK(d.speed <= 5);
  }
  CHECK_FALSE(cat.get("phase-estimation").available);
  CHECK(cat.get("two-phase-clustering").deterministic);
  CHECK(cat.get("qaoa").backend_kind == "statevector-sim");
  CHECK(cat.for_type("qubo").size() == 3);
  CHECK(code_of([&] { cat.get("nope"); }) == Errc::InvalidArgument);
  for (const auto& d : cat.all()) CHECK(descriptor_from_json(descriptor_to_json(d)).solver_id == d.solver_id);
}

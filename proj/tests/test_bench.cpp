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

#include "metasolve/bench.hpp"

using namespace metasolve;

namespace {

const std::filesystem::path kSmall = std::filesystem::path(METASOLVE_DATA_DIR) / "cvrp-small";

BenchOptions two_paths() {
  BenchOptions o;
  o.paths = {expand_path_alias("vrp", "1"), expand_path_alias("vrp", "2")};
  o.seed = 7;
  o.reproducible = true;
  return o;
}

}  // namespace

TEST_CASE("numbered CVRP configurations") {
  CHECK(expand_path_alias("vrp", "1") == "native-vrp");
  CHECK(expand_path_alias("vrp", "2") == "two-phase-clustering/native-local-search");
  CHECK(expand_path_alias("vrp", "3") == "two-phase-clustering/qubo-reformulation/qaoa");
  CHECK(expand_path_alias("vrp", "4") == "two-phase-clustering/qubo-reformulation/simulated-annealing");
  CHECK(expand_path_alias("tsp", "1") == "1");
  CHECK(expand_path_alias("vrp", "native-vrp") == "native-vrp");
}

TEST_CASE("bench over two instances and two paths gives four rows") {
  const auto instances = bench_instances(kSmall, "vrp");
  REQUIRE(instances.size() == 2);
  const auto best = load_best_known(kSmall / "best_known.csv");
  CHECK(best.at("S-n9-k3") == 380);
  const auto reg = BackendRegistry::defaults();
  const auto report = run_bench(instances, two_paths(), reg, best);
  REQUIRE(report.rows.size() == 4);
  for (const auto& r : report.rows) {
    CHECK(r.error.empty());
    REQUIRE(r.cost);
    CHECK(r.feasible);
    CHECK(*r.cost >= best.at(r.instance));
    CHECK(r.wall_ms == 0);
    CHECK(r.seed == derive_seed(7, r.instance, 0, r.trial));
  }
  CHECK(report.rows[0].instance == "S-n10-k3");
  CHECK(report.rows[3].instance == "S-n9-k3");
  REQUIRE(report.summary.size() == 2);
  for (const auto& s : report.summary) {
    REQUIRE(s.median_ratio);
    CHECK(*s.median_ratio >= 1.0);
    CHECK(s.feasible_runs == 2);
  }

  const auto csv = bench_csv(report);
  CHECK(csv.rfind("instance,path,trial,cost,feasible,wall_ms,seed,settings_digest\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  // reruns are byte-identical
  CHECK(bench_csv(run_bench(instances, two_paths(), reg, best)) == csv);
}

TEST_CASE("bench records failures as rows and labels simulated paths") {
  const auto instances = bench_instances(kSmall, "vrp");
  BenchOptions o;
  o.paths = {"two-phase-clustering/qubo-reformulation/simulated-annealing"};
  o.settings["sweeps"] = "not a number";
  o.reproducible = true;
  const auto report = run_bench(instances, o, BackendRegistry::defaults());
  REQUIRE(report.rows.size() == 2);
  for (const auto& r : report.rows) {
    CHECK_FALSE(r.cost);
    CHECK_FALSE(r.feasible);
    CHECK_FALSE(r.error.empty());
    CHECK(r.settings_digest == settings_digest(o.settings));
  }
  CHECK(report.summary[0].simulated_quantum);
  CHECK(bench_summary_text(report).find("[simulated quantum]") != std::string::npos);
  CHECK(bench_summary_json(report)[0]["median_ratio"].is_null());

  BenchOptions bad;
  CHECK_THROWS_AS(run_bench(instances, bad, BackendRegistry::defaults()), Error);
  bad.paths = {"warp-drive"};
  CHECK_THROWS_AS(run_bench(instances, bad, BackendRegistry::defaults()), Error);
}

TEST_CASE("settings digest and best-known parsing") {
  CHECK(settings_digest({}) == settings_digest({}));
  CHECK(settings_digest({{"a", 1}}) != settings_digest({{"a", 2}}));
  CHECK(settings_digest({}).size() == 16);
  const auto file = std::filesystem::temp_directory_path() / "metasolve-best.csv";
  std::ofstream(file) << "instance,best_known\nA,10\n\nB, 12.5\n";
  const auto b = load_best_known(file);
  CHECK(b.size() == 2);
  CHECK(b.at("B") == 12.5);
  std::filesystem::remove(file);
  CHECK_THROWS_AS(load_best_known("/nonexistent/best.csv"), Error);
  CHECK(format_cost(380) == "380");
  CHECK(format_cost(1.5) == "1.5");
}

TEST_CASE("a QAOA path beyond the qubit cap gives infeasible rows and the run continues") {
  const auto instances = bench_instances(std::filesystem::path(METASOLVE_DATA_DIR) / "cvrp-large", "vrp");
  REQUIRE(instances.size() == 1);
  BenchOptions o;
  o.paths = {expand_path_alias("vrp", "3"), expand_path_alias("vrp", "2")};
  const auto report = run_bench(instances, o, BackendRegistry::defaults());
  REQUIRE(report.rows.size() == 2);
  CHECK_FALSE(report.rows[0].cost);
  CHECK_FALSE(report.rows[0].feasible);
  CHECK(report.rows[0].error.find("qubits") != std::string::npos);
  CHECK(report.rows[1].cost);
  CHECK(report.rows[1].feasible);
}

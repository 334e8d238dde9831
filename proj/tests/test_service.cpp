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
#include <sstream>

#include "http_helpers.hpp"
#include "metasolve/service.hpp"

using namespace metasolve;
using nlohmann::json;

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(METASOLVE_DATA_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempStore {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / ("metasolve-svc-" + new_problem_id());
  ~TempStore() { std::filesystem::remove_all(dir); }
};

ServiceConfig config_for(const TempStore& store) {
  ServiceConfig c;
  c.port = 0;
  c.store_dir = store.dir.string();
  return c;
}

bool state_is(const json& node, const char* state) { return node["state"] == state; }

}  // namespace

TEST_CASE("REST workflow: create, select, step, solve, compare") {
  TempStore store;
  Service svc(config_for(store));
  REQUIRE(svc.start_background());
  testhttp::Client http(svc.port());

  auto types = http.get("/problem-types");
  REQUIRE(types.status == 200);
  CHECK(types.body.size() == 5);

  auto paths = http.get("/strategies/vrp/paths?max_clusterings=1");
  REQUIRE(paths.status == 200);
  CHECK(paths.body.size() == 6);
  CHECK(http.get("/strategies/vrp/paths?max_clusterings=1&available_only=true").body.size() == 5);
  CHECK(http.get("/strategies/vrp").body["inlined"]["id"] == "vrp");
  CHECK(http.get("/strategies/zzz/paths").status == 404);

  auto created = http.post_text("/problems/vrp", slurp("cvrp-small/S-n9-k3.vrp"));
  REQUIRE(created.status == 201);
  const std::string loc = created.location;
  REQUIRE(loc.rfind("/problems/vrp/", 0) == 0);
  const std::string root = created.body["id"];
  CHECK(state_is(created.body, "ReadyToSolve"));
  CHECK(http.get(loc).body["id"] == root);

  // JSON envelope form
  CHECK(http.post("/problems/tsp", {{"input", slurp("tsp/square.tsp")}}).status == 201);

  SECTION("suggestions") {
    auto s = http.get(loc + "/suggestions?speed_weight=0.2");
    REQUIRE(s.status == 200);
    CHECK(s.body["speed_weight"] == 0.2);
    CHECK_FALSE(s.body["ranked"].empty());
    CHECK(http.get(loc + "/suggestions?speed_weight=2").status == 422);
    CHECK(http.get(loc + "/suggestions?node=nope").status == 404);
  }

  SECTION("stepwise through two-phase clustering") {
    auto sel = http.patch(loc + "/nodes/" + root, {{"solver_id", "two-phase-clustering"}});
    REQUIRE(sel.status == 200);
    CHECK(sel.body["solver_id"] == "two-phase-clustering");
    // idempotent
    CHECK(http.patch(loc + "/nodes/" + root, {{"solver_id", "two-phase-clustering"}}).status == 200);

    REQUIRE(http.post(loc + "/execute", {{"mode", "stepwise"}}).status == 202);
    REQUIRE(http.wait_for(loc, [](const json& t) { return !t["children"][0]["children"].empty(); }));
    auto tree = http.get(loc).body;
    const auto clusters = tree["children"][0]["children"];
    CHECK(clusters.size() >= 3);

    // composing before the clusters are solved is refused
    auto early = http.when_idle([&] { return http.post(loc + "/execute", {{"mode", "stepwise"}}); });
    CHECK(early.status == 409);
    CHECK(early.body["code"] == "IllegalState");

    for (const auto& c : clusters) {
      const std::string id = c["id"];
      auto r = http.when_idle([&] { return http.patch(loc + "/nodes/" + id, {{"solver_id", "native-local-search"}}); });
      REQUIRE(r.status == 200);
      auto x = http.when_idle([&] { return http.post(loc + "/execute", {{"mode", "stepwise"}, {"node", id}}); });
      REQUIRE(x.status == 202);
    }
    REQUIRE(http.wait_for(loc, [](const json& t) {
      for (const auto& c : t["children"][0]["children"])
        if (c["state"] != "Solved") return false;
      return true;
    }));
    auto last = http.when_idle([&] { return http.post(loc + "/execute", {{"mode", "stepwise"}}); });
    REQUIRE(last.status == 202);
    REQUIRE(http.wait_for(loc, [](const json& t) { return t["state"] == "Solved"; }));
    tree = http.get(loc).body;
    CHECK(tree["result"]["feasible"] == true);
    CHECK(tree["result"]["objective"].get<double>() >= 380);

    // a solved node refuses a different solver
    auto conflict = http.when_idle([&] { return http.patch(loc + "/nodes/" + root, {{"solver_id", "native-vrp"}}); });
    CHECK(conflict.status == 409);
    // after a reset it accepts it
    auto reset = http.patch(loc + "/nodes/" + root, {{"reset", true}, {"solver_id", "native-vrp"}});
    CHECK(reset.status == 200);
    CHECK(reset.body["solver_id"] == "native-vrp");
  }

  SECTION("complete run and comparison") {
    REQUIRE(http.post(loc + "/execute", {{"mode", "complete"}, {"path", "native-vrp"}, {"seed", 3}}).status == 202);
    REQUIRE(http.wait_for(loc, [](const json& t) { return t["state"] == "Solved"; }));
    CHECK(http.get(loc).body["result"]["objective"] == 380);

    auto cmp = http.post(loc + "/compare", {{"paths", {"native-vrp", "two-phase-clustering/native-local-search"}},
                                             {"trials", 2}});
    REQUIRE(cmp.status == 202);
    const std::string where = cmp.body["location"];
    REQUIRE(http.wait_for(where, [](const json& r) { return r["status"] != "running"; }));
    auto report = http.get(where).body;
    REQUIRE(report["status"] == "done");
    CHECK(report["report"]["rows"].size() == 4);
    CHECK(http.post(loc + "/compare", {{"paths", {"native-vrp"}}}).status == 422);
    CHECK(http.get(loc + "/compare/c999").status == 404);
  }

  SECTION("error mapping") {
    auto bad = http.post_text("/problems/tsp", "NAME : x\nTYPE : TSP\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : EUC_2D\n"
                                               "NODE_COORD_SECTION\n1 0 0\n2 zero 1\nEOF\n");
    CHECK(bad.status == 400);
    CHECK(bad.body["code"] == "ParseError");
    CHECK(bad.body["line"] == 7);
    CHECK(http.post_text("/problems/knapsack", "x").status == 404);
    CHECK(http.get("/problems/vrp/doesnotexist").status == 404);
    CHECK(http.get("/problems/tsp/" + root).status == 404);  // wrong type
    CHECK(http.get("/nowhere").body["code"] == "NotFound");
    CHECK(http.patch(loc + "/nodes/" + root, {{"settings", {{"sweeps", json::array()}}}}).status == 422);
    CHECK(http.patch(loc + "/nodes/" + root, {{"solver_id", "qaoa"}}).status == 422);
    CHECK(http.patch(loc + "/nodes/zzz", json::object()).status == 404);
    CHECK(http.post(loc + "/execute", {{"mode", "sideways"}}).status == 422);
    CHECK(http.post(loc + "/execute", {{"mode", "stepwise"}}).status == 409);  // no solver selected
    CHECK(http.post(loc + "/execute", {{"mode", "complete"}, {"path", "two-phase-clustering/native-vrp"}}).status == 422);
    CHECK(http.post(loc + "/execute", {{"mode", "complete"}}).status == 409);  // nothing selected
  }
  svc.stop();
}

TEST_CASE("problems survive a service restart") {
  TempStore store;
  std::string loc;
  {
    Service svc(config_for(store));
    REQUIRE(svc.start_background());
    testhttp::Client http(svc.port());
    auto created = http.post_text("/problems/tsp", slurp("tsp/square.tsp"));
    REQUIRE(created.status == 201);
    loc = created.location;
    REQUIRE(http.post(loc + "/execute", {{"mode", "complete"}, {"path", "native-local-search"}}).status == 202);
    REQUIRE(http.wait_for(loc, [](const json& t) { return t["state"] == "Solved"; }));
  }
  Service again(config_for(store));
  REQUIRE(again.start_background());
  testhttp::Client http(again.port());
  auto tree = http.get(loc);
  REQUIRE(tree.status == 200);
  CHECK(tree.body["state"] == "Solved");
  CHECK(tree.body["result"]["objective"] == 40);
}

TEST_CASE("service configuration") {
  const auto dir = std::filesystem::temp_directory_path() / ("metasolve-cfg-" + new_problem_id());
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "ok.json") << R"({"host": "127.0.0.1", "port": 0, "store_dir": "x"})";
  std::ofstream(dir / "bad.json") << R"({"prot": 80})";
  std::ofstream(dir / "broken.json") << "{";
  CHECK(ServiceConfig::load((dir / "ok.json").string()).port == 0);
  CHECK_THROWS_AS(ServiceConfig::load((dir / "bad.json").string()), Error);
  CHECK_THROWS_AS(ServiceConfig::load((dir / "broken.json").string()), Error);
  CHECK_THROWS_AS(ServiceConfig::load((dir / "missing.json").string()), Error);
  std::filesystem::remove_all(dir);

  CHECK(http_status(Errc::ParseError) == 400);
  CHECK(http_status(Errc::NotFound) == 404);
  CHECK(http_status(Errc::IllegalState) == 409);
  CHECK(http_status(Errc::InvalidPath) == 422);
  CHECK(http_status(Errc::SubprocessFailure) == 500);

  // a busy port is reported, not fatal
  TempStore store;
  Service first(config_for(store));
  REQUIRE(first.start_background());
  auto c = config_for(store);
  c.port = first.port();
  Service second(c);
  CHECK_FALSE(second.bind());
}

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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(METASOLVE_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), p)) r.out += buf.data();
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("metasolve-cli-" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
};

const std::string kData = METASOLVE_DATA_DIR;

}  // namespace

TEST_CASE("solve prints the cost and writes a solution file") {
  Scratch s;
  fs::copy_file(kData + "/tsp/square.tsp", s.dir / "square.tsp");
  const auto r = run((s.dir / "square.tsp").string() + " --type tsp --path native-local-search");
  // positional first is not accepted; the subcommand comes first
  CHECK(r.code != 0);
  const auto ok = run("solve " + (s.dir / "square.tsp").string() + " --type tsp --path native-local-search");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("cost=40 feasible=true") != std::string::npos);
  CHECK(fs::exists(s.dir / "square.tsp.sol"));
  std::ifstream sol(s.dir / "square.tsp.sol");
  std::stringstream ss;
  ss << sol.rdbuf();
  CHECK(ss.str().find("cost: 40") != std::string::npos);
}

TEST_CASE("solve with numbered CVRP configurations and trials") {
  Scratch s;
  fs::copy_file(kData + "/cvrp-small/S-n9-k3.vrp", s.dir / "a.vrp");
  const auto r = run("solve " + (s.dir / "a.vrp").string() + " --type vrp --path 1 --trials 2 --seed 4");
  CHECK(r.code == 0);
  CHECK(r.out.find("trial 0") != std::string::npos);
  CHECK(r.out.find("cost=380 feasible=true") != std::string::npos);
  const auto again = run("solve " + (s.dir / "a.vrp").string() + " --type vrp --path 2 --set max_iterations=50");
  CHECK(again.code == 0);
}

TEST_CASE("solve rejects bad paths, types and inputs with exit code 2") {
  Scratch s;
  fs::copy_file(kData + "/tsp/square.tsp", s.dir / "square.tsp");
  const auto file = (s.dir / "square.tsp").string();
  auto bad = run("solve " + file + " --type tsp --path warp-drive");
  CHECK(bad.code == 2);
  CHECK(bad.out.find("InvalidPath") != std::string::npos);
  CHECK(run("solve " + file + " --type nope --path native-local-search").code == 2);
  CHECK(run("solve " + file + " --type vrp --path 1").code == 2);
  CHECK(run("solve /nonexistent.tsp --type tsp --path native-local-search").code == 2);
  CHECK(run("solve " + file + " --type tsp --path native-local-search --set broken").code == 2);
  CHECK(run("frobnicate").code == 2);
}

TEST_CASE("solve exits 1 when every run fails") {
  Scratch s;
  // 7 cities encode to 36 qubits, over the simulator cap
  std::ofstream(s.dir / "seven.tsp") << "NAME : seven\nTYPE : TSP\nDIMENSION : 7\nEDGE_WEIGHT_TYPE : EUC_2D\n"
                                        "NODE_COORD_SECTION\n1 0 0\n2 10 0\n3 20 5\n4 20 15\n5 10 20\n6 0 20\n7 -5 10\nEOF\n";
  const auto r = run("solve " + (s.dir / "seven.tsp").string() + " --type tsp --path qubo-reformulation/qaoa");
  CHECK(r.code == 1);
  CHECK(r.out.find("NoCompatibleBackend") != std::string::npos);
  CHECK_FALSE(fs::exists(s.dir / "seven.tsp.sol"));
}

TEST_CASE("paths lists the enumerated solution paths") {
  const auto vrp = run("paths --type vrp --max-clusterings 1");
  CHECK(vrp.code == 0);
  CHECK(lines(vrp.out) == 6);
  CHECK(vrp.out.find("phase-estimation  [unavailable]") != std::string::npos);
  CHECK(lines(run("paths --type vrp --max-clusterings 1 --available-only").out) == 5);
  CHECK(lines(run("paths --type qubo").out) == 3);
  CHECK(run("paths --type nope").code == 2);
}

TEST_CASE("bench writes a CSV and a summary") {
  Scratch s;
  const auto csv = s.dir / "out.csv";
  const auto r = run("bench --dir " + kData + "/cvrp-small --paths 1,2 --seed 3 --reproducible --out " + csv.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("median_ratio=1.0000") != std::string::npos);
  std::ifstream in(csv);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(lines(ss.str()) == 5);
  const auto again = run("bench --dir " + kData + "/cvrp-small --paths 1,2 --seed 3 --reproducible --out -");
  CHECK(again.out.find(ss.str()) == 0);
  CHECK(run("bench --dir /nonexistent --paths 1").code == 2);
}

TEST_CASE("serve refuses a bad config and a busy port") {
  Scratch s;
  std::ofstream(s.dir / "bad.json") << R"({"port": "eighty"})";
  auto bad = run("serve --config " + (s.dir / "bad.json").string());
  CHECK(bad.code == 2);
  CHECK(bad.out.find("error") != std::string::npos);

  const int sock = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(sock >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  REQUIRE(::bind(sock, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::listen(sock, 1) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(sock, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  std::ofstream(s.dir / "busy.json") << R"({"port": )" << port << R"(, "store_dir": ")" << (s.dir / "store").string()
                                     << R"("})";
  auto busy = run("serve --config " + (s.dir / "busy.json").string());
  ::close(sock);
  CHECK(busy.code == 2);
  CHECK(busy.out.find("cannot bind port") != std::string::npos);
}

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

// Adapter for an LKH-3 compatible routing binary.
//
// Protocol: the adapter writes `problem.tsp`/`problem.vrp` (TSPLIB) and a
// parameter file with PROBLEM_FILE, TOUR_FILE, TIME_LIMIT and, for CVRP,
// VEHICLES; runs `<binary> <parameter file>`; and reads TOUR_SECTION from
// the tour file (1-based ids terminated by -1). For CVRP, ids above the
// instance dimension are depot copies and separate the routes. Costs are
// always recomputed with our distance function.

#pragma once

#include <sys/stat.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>

#include "metasolve/common.hpp"
#include "metasolve/formats.hpp"
#include "metasolve/routing.hpp"

namespace metasolve {

using RoutingSolution = std::variant<Tour, VrpSolution>;

/// Environment variable naming the external routing binary.
inline constexpr const char* kExternalBinaryEnv = "METASOLVE_LKH_BINARY";

inline bool is_executable_file(const std::string& path) {
  if (path.empty()) return false;
  struct stat st{};
  return ::stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode) &&
         ::access(path.c_str(), X_OK) == 0;
}

namespace detail {

class TempDir {
 public:
  TempDir() {
    auto pattern = (std::filesystem::temp_directory_path() / "metasolve-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw Error(Errc::SubprocessFailure, "cannot create temporary directory");
    }
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs `binary arg` with stdout/stderr redirected to files; kills the child
/// after `hard_limit_s`. Returns the exit code (128+signal when killed).
inline int run_process(const std::string& binary, const std::string& arg,
                       const std::filesystem::path& out_file,
                       const std::filesystem::path& err_file, double hard_limit_s) {
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::SubprocessFailure, "fork failed");
  if (pid == 0) {
    const int out = ::open(out_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    const int err = ::open(err_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (out >= 0) ::dup2(out, STDOUT_FILENO);
    if (err >= 0) ::dup2(err, STDERR_FILENO);
    const int null_in = ::open("/dev/null", O_RDONLY);
    if (null_in >= 0) ::dup2(null_in, STDIN_FILENO);
    ::execl(binary.c_str(), binary.c_str(), arg.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(static_cast<long>(hard_limit_s * 1000));
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw Error(Errc::SubprocessFailure, "waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

inline std::vector<long long> parse_tour_section(const std::string& text) {
  std::vector<long long> ids;
  bool in_section = false;
  for (auto line : split_lines(text)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!in_section) {
      if (upper(line).rfind("TOUR_SECTION", 0) == 0) in_section = true;
      continue;
    }
    if (upper(line) == "EOF") break;
    for (auto tok : tokens(line)) {
      long long id = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw Error(Errc::OutputParseError, "bad tour token '" + std::string(tok) + "'");
      }
      if (id == -1) return ids;
      ids.push_back(id);
    }
  }
  if (!in_section) throw Error(Errc::OutputParseError, "tour file has no TOUR_SECTION");
  throw Error(Errc::OutputParseError, "tour section not terminated by -1");
}

}  // namespace detail

/// Solves `instance` with the external binary. `seed` is passed as SEED.
inline RoutingSolution solve_external(const RoutingInstance& instance,
                                      const std::string& binary_path,
                                      double time_limit_s = 10.0,
                                      std::uint64_t seed = 1) {
  if (!is_executable_file(binary_path)) {
    throw Error(Errc::BinaryNotFound, "'" + binary_path + "' is not an executable file");
  }
  detail::TempDir dir;
  const bool is_vrp = std::holds_alternative<VrpInstance>(instance);
  const auto problem = dir.path() / (is_vrp ? "problem.vrp" : "problem.tsp");
  const auto params = dir.path() / "params.par";
  const auto tour_file = dir.path() / "solution.tour";
  {
    std::ofstream(problem) << write_tsplib(instance);
    std::ofstream par(params);
    par << "PROBLEM_FILE = " << problem.string() << "\n";
    par << "TOUR_FILE = " << tour_file.string() << "\n";
    par << "TIME_LIMIT = " << time_limit_s << "\n";
    par << "RUNS = 1\n";
    par << "SEED = " << (seed % 2147483647ULL) + 1 << "\n";
    if (is_vrp) par << "VEHICLES = " << std::get<VrpInstance>(instance).vehicles << "\n";
  }
  const int code = detail::run_process(binary_path, params.string(), dir.path() / "stdout.txt",
                                       dir.path() / "stderr.txt", time_limit_s * 2 + 5);
  if (code != 0) {
    auto err = detail::read_file(dir.path() / "stderr.txt");
    if (err.size() > 400) err.resize(400);
    throw Error(Errc::SubprocessFailure, "exit code " + std::to_string(code) + ": " + err);
  }
  if (!std::filesystem::exists(tour_file)) {
    throw Error(Errc::OutputParseError, "binary produced no tour file");
  }
  const auto ids = detail::parse_tour_section(detail::read_file(tour_file));

  if (!is_vrp) {
    const auto& tsp = std::get<TspInstance>(instance);
    Tour tour;
    for (auto id : ids) {
      if (id < 1 || static_cast<std::size_t>(id) > tsp.size()) {
        throw Error(Errc::OutputParseError, "tour id " + std::to_string(id) + " out of range");
      }
      tour.order.push_back(static_cast<std::size_t>(id - 1));
    }
    if (!is_permutation_of_n(tour.order, tsp.size())) {
      throw Error(Errc::OutputParseError, "tour is not a permutation");
    }
    detail::rotate_to(tour.order, 0);
    tour.cost = tour_cost(tsp, tour.order);
    return tour;
  }

  const auto& vrp = std::get<VrpInstance>(instance);
  VrpSolution solution;
  std::vector<std::size_t> current;
  for (auto id : ids) {
    if (id < 1) throw Error(Errc::OutputParseError, "tour id " + std::to_string(id) + " out of range");
    const auto node = static_cast<std::size_t>(id - 1);
    if (node >= vrp.size() || node == vrp.depot) {
      if (!current.empty()) solution.routes.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(node);
  }
  if (!current.empty()) solution.routes.push_back(std::move(current));
  const auto check = check_vrp_routes(vrp, solution.routes);
  if (!check.coverage_exact) throw Error(Errc::OutputParseError, "tour does not cover every customer once");
  solution.cost = check.cost;
  solution.feasible = check.feasible();
  return solution;
}

}  // namespace metasolve

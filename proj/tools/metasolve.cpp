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

// metasolve: solve / paths / bench / serve.
// Exit codes: 0 ok, 1 solver failure, 2 usage or config error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "metasolve/bench.hpp"
#include "metasolve/orchestrator.hpp"
#include "metasolve/problem_model.hpp"
#include "metasolve/service.hpp"
#include "metasolve/strategy.hpp"

namespace fs = std::filesystem;
using namespace metasolve;

namespace {

constexpr int kOk = 0;
constexpr int kSolverFailure = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::NotFound, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_error(const Error& e) {
  Json body{{"code", errc_name(e.code())}, {"message", e.detail()}};
  if (e.line() > 0) body["line"] = e.line();
  std::cerr << "error: " << body.dump() << "\n";
}

/// key=value; numbers stay numbers.
std::map<std::string, Json> parse_settings(const std::vector<std::string>& items) {
  std::map<std::string, Json> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(Errc::InvalidArgument, "setting '" + item + "' is not key=value");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      const double d = std::stod(value, &used);
      if (used == value.size()) {
        out[key] = d == std::floor(d) && std::abs(d) < 9e15 ? Json(static_cast<std::int64_t>(d)) : Json(d);
        continue;
      }
    } catch (const std::exception&) {
    }
    out[key] = value;
  }
  return out;
}

std::string solution_text(const ProblemNode& root, const SolveResult& r) {
  return std::visit(
      [&](const auto& sol) -> std::string {
        using T = std::decay_t<decltype(sol)>;
        if constexpr (std::is_same_v<T, Tour>) {
          auto order = sol.order;
          if (!order.empty()) std::rotate(order.begin(), std::min_element(order.begin(), order.end()), order.end());
          const std::size_t start = order.empty() ? 0 : order.front();
          return write_route_solution({std::vector<std::size_t>(order.begin() + (order.empty() ? 0 : 1), order.end())},
                                      start, sol.cost);
        } else if constexpr (std::is_same_v<T, VrpSolution>) {
          return write_route_solution(sol.routes, std::get<VrpInstance>(root.payload).depot, sol.cost);
        } else if constexpr (std::is_same_v<T, SatResult>) {
          return write_sat_solution(sol.satisfiable, sol.assignment.values);
        } else if constexpr (std::is_same_v<T, Sample>) {
          std::ostringstream os;
          os << "energy: " << format_cost(sol.energy) << "\nbits: ";
          for (auto b : sol.bits) os << (b ? '1' : '0');
          os << "\n";
          return os.str();
        } else if constexpr (std::is_same_v<T, CutResult>) {
          std::ostringstream os;
          os << "cut: " << format_cost(sol.weight) << "\nside: ";
          for (auto b : sol.side) os << (b ? '1' : '0');
          os << "\n";
          return os.str();
        } else {
          return "no solution\n";
        }
      },
      r.payload);
}

BackendRegistry load_backends(const std::string& file) {
  if (file.empty()) return BackendRegistry::defaults();
  ServiceConfig c;
  c.backend_registry = file;
  return c.make_registry();
}

int cmd_solve(const std::string& file, const std::string& type, const std::string& path_spec, std::size_t trials,
              std::uint64_t seed, const std::vector<std::string>& sets, const std::string& backends_file) {
  ProblemNode base;
  SolutionPath path;
  BackendRegistry backends;
  try {
    base = create_problem(type, read_file(file));
    base.settings = parse_settings(sets);
    if (trials < 1) throw Error(Errc::InvalidArgument, "--trials must be >= 1");
    const auto& strategy = problem_type(type).strategy_id;
    path = StrategyRegistry::builtin().parse_path_spec(strategy, expand_path_alias(type, path_spec));
    if (auto v = StrategyRegistry::builtin().validate_path(strategy, path)) throw Error(Errc::InvalidPath, *v);
    backends = load_backends(backends_file);
  } catch (const Error& e) {
    print_error(e);
    return kUsage;
  }

  ExecutionContext ctx(backends);
  std::optional<ProblemNode> best;
  std::optional<Error> last_error;
  for (std::size_t t = 0; t < trials; ++t) {
    ProblemNode tree = base;
    const auto s = trial_seed(seed, t);
    try {
      const auto r = run_complete(tree, path, 1, s, ctx);
      if (trials > 1) {
        std::cout << "trial " << t << ": cost=" << format_cost(r.objective) << " feasible=" << std::boolalpha
                  << r.feasible << " wall_ms=" << r.wall_ms << " seed=" << s << "\n";
      }
      const bool better = !best || (r.feasible && !best->result->feasible) ||
                          (r.feasible == best->result->feasible && r.objective < best->result->objective);
      if (better) best = std::move(tree);
    } catch (const Error& e) {
      if (trials > 1) std::cout << "trial " << t << ": failed " << e.what() << "\n";
      last_error = e;
    }
  }
  if (!best) {
    print_error(*last_error);
    return kSolverFailure;
  }
  const auto& r = *best->result;
  const auto out = file + ".sol";
  std::ofstream(out) << solution_text(*best, r);
  std::cout << "cost=" << format_cost(r.objective) << " feasible=" << std::boolalpha << r.feasible
            << " wall_ms=" << r.wall_ms << " solution=" << out << "\n";
  return kOk;
}

int cmd_paths(const std::string& type, std::optional<std::size_t> max_clusterings, bool available_only) {
  try {
    const auto& reg = StrategyRegistry::builtin();
    PathConstraints c;
    c.max_clusterings = max_clusterings;
    c.available_only = available_only;
    for (const auto& p : reg.enumerate_paths(problem_type(type).strategy_id, c)) {
      bool available = true;
      for (const auto& step : p) available = available && reg.catalog().get(step.solver_id).available;
      std::cout << path_to_string(p) << (available ? "" : "  [unavailable]") << "\n";
    }
  } catch (const Error& e) {
    print_error(e);
    return kUsage;
  }
  return kOk;
}

int cmd_bench(const std::string& dir, const std::string& type, const std::vector<std::string>& paths,
              std::size_t trials, std::uint64_t seed, const std::string& out, std::string best_known_file,
              bool reproducible, const std::vector<std::string>& sets, const std::string& backends_file) {
  BenchOptions opt;
  std::vector<fs::path> instances;
  std::map<std::string, double> best_known;
  BackendRegistry backends;
  try {
    opt.type = type;
    opt.paths = paths;
    opt.trials = trials;
    opt.seed = seed;
    opt.reproducible = reproducible;
    opt.settings = parse_settings(sets);
    instances = bench_instances(dir, type);
    if (instances.empty()) throw Error(Errc::NotFound, "no " + type + " instances in " + dir);
    if (best_known_file.empty() && fs::exists(fs::path(dir) / "best_known.csv")) {
      best_known_file = (fs::path(dir) / "best_known.csv").string();
    }
    if (!best_known_file.empty()) best_known = load_best_known(best_known_file);
    backends = load_backends(backends_file);
    const auto& strategy = problem_type(type).strategy_id;
    for (const auto& p : paths) StrategyRegistry::builtin().parse_path_spec(strategy, expand_path_alias(type, p));
  } catch (const Error& e) {
    print_error(e);
    return kUsage;
  }
  BenchReport report;
  try {
    report = run_bench(instances, opt, backends, best_known);
  } catch (const Error& e) {
    print_error(e);
    return kSolverFailure;
  }
  const auto csv = bench_csv(report);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    std::ofstream f(out);
    if (!f) {
      std::cerr << "error: cannot write " << out << "\n";
      return kUsage;
    }
    f << csv;
  }
  std::cerr << bench_summary_text(report);
  for (const auto& r : report.rows) {
    if (!r.error.empty()) std::cerr << "  " << r.instance << " " << r.path << " trial " << r.trial << ": " << r.error << "\n";
  }
  return kOk;
}

int cmd_serve(const std::string& config_file) {
  std::unique_ptr<Service> service;
  try {
    service = std::make_unique<Service>(ServiceConfig::load(config_file));
  } catch (const Error& e) {
    print_error(e);
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (!service->start_background()) {
    std::cerr << "error: cannot bind port (already in use?)\n";
    return kUsage;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on port " << service->port() << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service->stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metasolve: solution paths for routing, QUBO, SAT and max-cut problems"};
  app.require_subcommand(1);

  std::string file, type, path_spec, backends_file;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::vector<std::string> sets;
  auto* solve = app.add_subcommand("solve", "solve one instance along a path");
  solve->add_option("file", file, "instance file")->required();
  solve->add_option("--type", type, "problem type")->required();
  solve->add_option("--path", path_spec, "solver ids joined by '/', or 1-4 for the CVRP configurations")->required();
  solve->add_option("--trials", trials, "independent runs");
  solve->add_option("--seed", seed, "run seed");
  solve->add_option("--set", sets, "key=value solver setting, repeatable");
  solve->add_option("--backends", backends_file, "backend registry JSON");

  std::optional<std::size_t> max_clusterings;
  bool available_only = false;
  auto* paths = app.add_subcommand("paths", "list the solution paths of a problem type");
  paths->add_option("--type", type, "problem type")->required();
  paths->add_option("--max-clusterings", max_clusterings, "at most this many clustering steps");
  paths->add_flag("--available-only", available_only, "skip paths through unavailable solvers");

  std::string dir, out, best_known;
  std::vector<std::string> bench_paths;
  bool reproducible = false;
  std::string bench_type = "vrp";
  auto* bench = app.add_subcommand("bench", "run paths over a directory of instances");
  bench->add_option("--dir", dir, "instance directory")->required();
  bench->add_option("--type", bench_type, "problem type");
  bench->add_option("--paths", bench_paths, "path specs or 1-4")->required()->delimiter(',');
  bench->add_option("--trials", trials, "runs per instance and path");
  bench->add_option("--seed", seed, "run seed");
  bench->add_option("--out", out, "CSV file, '-' for stdout");
  bench->add_option("--best-known", best_known, "instance,cost sidecar (default: <dir>/best_known.csv)");
  bench->add_flag("--reproducible", reproducible, "write wall_ms as 0 so reruns are byte-identical");
  bench->add_option("--set", sets, "key=value solver setting, repeatable");
  bench->add_option("--backends", backends_file, "backend registry JSON");

  std::string config;
  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--config", config, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*solve) return cmd_solve(file, type, path_spec, trials, seed, sets, backends_file);
  if (*paths) return cmd_paths(type, max_clusterings, available_only);
  if (*bench) {
    return cmd_bench(dir, bench_type, bench_paths, trials, seed, out, best_known, reproducible, sets, backends_file);
  }
  if (*serve) return cmd_serve(config);
  return kUsage;
}

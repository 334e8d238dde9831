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

// Batch runs of several paths over a directory of instances.
//
// CSV columns: instance,path,trial,cost,feasible,wall_ms,seed,settings_digest
// Rows are ordered by instance name, then path as given, then trial, so two
// runs with the same seed differ only in wall_ms (zero with reproducible).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "metasolve/orchestrator.hpp"
#include "metasolve/problem_model.hpp"
#include "metasolve/strategy.hpp"

namespace metasolve {

struct BenchOptions {
  std::string type = "vrp";
  std::vector<std::string> paths;  // path specs
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::map<std::string, Json> settings;  // put on every root
  bool reproducible = false;             // wall_ms written as 0
};

struct BenchRow {
  std::string instance;
  std::string path;
  std::size_t trial = 0;
  std::optional<double> cost;  // empty when the run failed
  bool feasible = false;
  std::int64_t wall_ms = 0;
  std::uint64_t seed = 0;
  std::string settings_digest;
  std::string error;
};

struct BenchPathSummary {
  std::string path;
  std::size_t runs = 0;
  std::size_t feasible_runs = 0;
  std::optional<double> median_ratio;  // cost / best known, feasible runs only
  double median_wall_ms = 0.0;
  bool simulated_quantum = false;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchPathSummary> summary;
};

/// The four numbered CVRP configurations accepted by solve and bench; anything
/// else is returned unchanged.
inline std::string expand_path_alias(std::string_view type, const std::string& spec) {
  if (type != "vrp") return spec;
  if (spec == "1") return "native-vrp";
  if (spec == "2") return "two-phase-clustering/native-local-search";
  if (spec == "3") return "two-phase-clustering/qubo-reformulation/qaoa";
  if (spec == "4") return "two-phase-clustering/qubo-reformulation/simulated-annealing";
  return spec;
}

inline const std::vector<std::string>& instance_extensions(std::string_view type) {
  static const std::map<std::string, std::vector<std::string>, std::less<>> ext{
      {"vrp", {".vrp"}}, {"tsp", {".tsp"}}, {"qubo", {".qubo"}}, {"sat", {".cnf"}}, {"max-cut", {".gr", ".dimacs"}}};
  auto it = ext.find(type);
  if (it == ext.end()) throw Error(Errc::UnknownProblemType, std::string(type));
  return it->second;
}

/// Instance files of `type` under `dir`, sorted by name.
inline std::vector<std::filesystem::path> bench_instances(const std::filesystem::path& dir, std::string_view type) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::NotFound, "no such directory " + dir.string());
  const auto& exts = instance_extensions(type);
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (std::find(exts.begin(), exts.end(), e.path().extension().string()) != exts.end()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// "instance,best_known" lines; a header line and blanks are skipped.
inline std::map<std::string, double> load_best_known(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::NotFound, "cannot read " + file.string());
  std::map<std::string, double> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = std::string(detail::trim(line));
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(Errc::ParseError, "expected instance,value", no);
    const std::string name(detail::trim(line.substr(0, comma)));
    const std::string value(detail::trim(line.substr(comma + 1)));
    try {
      out[name] = std::stod(value);
    } catch (const std::exception&) {
      if (no == 1) continue;  // header
      throw Error(Errc::ParseError, "bad best-known value '" + value + "'", no);
    }
  }
  return out;
}

inline std::string settings_digest(const std::map<std::string, Json>& settings) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(Json(settings).dump())));
  return buf;
}

inline std::vector<BenchPathSummary> bench_summary(const std::vector<BenchRow>& rows,
                                                   const std::map<std::string, double>& best_known) {
  std::vector<BenchPathSummary> out;
  std::map<std::string, std::vector<double>> ratios, walls;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.path == r.path; });
    if (it == out.end()) {
      BenchPathSummary s;
      s.path = r.path;
      s.simulated_quantum = uses_simulated_quantum(r.path);
      out.push_back(s);
      it = std::prev(out.end());
    }
    ++it->runs;
    walls[r.path].push_back(static_cast<double>(r.wall_ms));
    if (!r.cost || !r.feasible) continue;
    ++it->feasible_runs;
    if (auto b = best_known.find(r.instance); b != best_known.end() && b->second > 0) {
      ratios[r.path].push_back(*r.cost / b->second);
    }
  }
  for (auto& s : out) {
    if (!ratios[s.path].empty()) s.median_ratio = median(ratios[s.path]);
    s.median_wall_ms = median(walls[s.path]);
  }
  return out;
}

/// Runs every (instance, path, trial); instances go in parallel on the
/// registry's thread budget. Failed runs become rows with an empty cost.
inline BenchReport run_bench(const std::vector<std::filesystem::path>& instances, const BenchOptions& opt,
                             const BackendRegistry& backends, const std::map<std::string, double>& best_known = {},
                             const StrategyRegistry& strategies = StrategyRegistry::builtin()) {
  if (opt.paths.empty()) throw Error(Errc::InvalidArgument, "bench needs at least one path");
  if (opt.trials < 1) throw Error(Errc::InvalidArgument, "trials must be >= 1");
  const auto& type = problem_type(opt.type);
  std::vector<std::string> specs;
  std::vector<SolutionPath> paths;
  for (const auto& spec : opt.paths) {
    specs.push_back(expand_path_alias(opt.type, spec));
    paths.push_back(strategies.parse_path_spec(type.strategy_id, specs.back()));
  }

  const auto digest = settings_digest(opt.settings);
  const std::size_t per_instance = paths.size() * opt.trials;
  std::vector<BenchRow> rows(instances.size() * per_instance);
  ExecutionContext ctx(backends);
  ctx.strategies = &strategies;
  ctx.catalog = &strategies.catalog();

  auto errors = detail::parallel_for(instances.size(), *ctx.threads, [&](std::size_t i) {
    const auto name = instances[i].stem().string();
    std::ifstream in(instances[i]);
    std::stringstream text;
    text << in.rdbuf();
    std::optional<ProblemNode> base;
    std::string parse_error;
    try {
      base = create_problem(opt.type, text.str());
      base->settings = opt.settings;
    } catch (const Error& e) {
      parse_error = e.what();
    }
    for (std::size_t p = 0; p < paths.size(); ++p) {
      for (std::size_t t = 0; t < opt.trials; ++t) {
        auto& row = rows[i * per_instance + p * opt.trials + t];
        row.instance = name;
        row.path = specs[p];
        row.trial = t;
        row.seed = derive_seed(opt.seed, name, 0, t);
        row.settings_digest = digest;
        if (!base) {
          row.error = parse_error;
          continue;
        }
        ProblemNode tree = *base;
        try {
          auto r = run_complete(tree, paths[p], 1, row.seed, ctx);
          row.cost = r.objective;
          row.feasible = r.feasible;
          row.wall_ms = opt.reproducible ? 0 : r.wall_ms;
        } catch (const Error& e) {
          row.error = e.what();
        }
      }
    }
  });
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) { return a.instance < b.instance; });
  BenchReport report;
  report.summary = bench_summary(rows, best_known);
  report.rows = std::move(rows);
  return report;
}

inline std::string format_cost(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline std::string bench_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "instance,path,trial,cost,feasible,wall_ms,seed,settings_digest\n";
  for (const auto& r : report.rows) {
    os << r.instance << ',' << r.path << ',' << r.trial << ',' << (r.cost ? format_cost(*r.cost) : "") << ','
       << (r.feasible ? "true" : "false") << ',' << r.wall_ms << ',' << r.seed << ',' << r.settings_digest << '\n';
  }
  return os.str();
}

inline std::string bench_summary_text(const BenchReport& report) {
  std::ostringstream os;
  for (const auto& s : report.summary) {
    os << s.path << ": runs=" << s.runs << " feasible=" << s.feasible_runs << " median_ratio=";
    if (s.median_ratio) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *s.median_ratio);
      os << buf;
    } else {
      os << "n/a";
    }
    os << " median_wall_ms=" << s.median_wall_ms;
    if (s.simulated_quantum) os << " [simulated quantum]";
    os << '\n';
  }
  return os.str();
}

inline Json bench_summary_json(const BenchReport& report) {
  Json out = Json::array();
  for (const auto& s : report.summary) {
    out.push_back({{"path", s.path},
                   {"runs", s.runs},
                   {"feasible_runs", s.feasible_runs},
                   {"median_ratio", s.median_ratio ? Json(*s.median_ratio) : Json(nullptr)},
                   {"median_wall_ms", s.median_wall_ms},
                   {"simulated_quantum", s.simulated_quantum}});
  }
  return out;
}

}  // namespace metasolve

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

// Strategy trees, the solver catalog and solution paths.
//
// A strategy lists the alternative steps for one problem type. A step is a
// solver leaf, a decomposition whose children are the alternatives for the
// produced sub-problem, or a reference to another registered strategy
// (optionally with some solvers excluded). Strategies and the solver
// catalog are plain JSON documents; the built-ins below can be replaced or
// extended from files.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "metasolve/common.hpp"

namespace metasolve {

// ---------------------------------------------------------------------------
// Solver catalog
// ---------------------------------------------------------------------------

enum class SolverCategory { Leaf, Clustering, Reformulation, Composition };

inline std::string_view category_name(SolverCategory c) {
  switch (c) {
    case SolverCategory::Leaf: return "leaf";
    case SolverCategory::Clustering: return "clustering";
    case SolverCategory::Reformulation: return "reformulation";
    case SolverCategory::Composition: return "composition";
  }
  return "?";
}

struct SolverDescriptor {
  std::string solver_id;
  std::string consumes;
  SolverCategory category = SolverCategory::Leaf;
  std::string produces;  // child problem type for non-leaf solvers
  int quality = 3;
  int speed = 3;
  bool deterministic = false;
  std::string backend_kind;     // local-cpu | subprocess | statevector-sim | simulated-annealer
  nlohmann::json requirements;  // see orchestrator.hpp for the keys
  std::string pros;
  std::string cons;
  bool available = true;
};

inline SolverDescriptor descriptor_from_json(const nlohmann::json& j) {
  SolverDescriptor d;
  d.solver_id = j.at("solver_id").get<std::string>();
  d.consumes = j.at("consumes").get<std::string>();
  const auto cat = j.value("category", "leaf");
  if (cat == "leaf") d.category = SolverCategory::Leaf;
  else if (cat == "clustering") d.category = SolverCategory::Clustering;
  else if (cat == "reformulation") d.category = SolverCategory::Reformulation;
  else if (cat == "composition") d.category = SolverCategory::Composition;
  else throw Error(Errc::ParseError, "unknown solver category '" + cat + "'");
  d.produces = j.value("produces", "");
  d.quality = j.at("quality").get<int>();
  d.speed = j.at("speed").get<int>();
  if (d.quality < 1 || d.quality > 5 || d.speed < 1 || d.speed > 5) {
    throw Error(Errc::InvalidArgument, "annotations of " + d.solver_id + " must lie in 1..5");
  }
  d.deterministic = j.value("deterministic", false);
  d.backend_kind = j.value("backend", "local-cpu");
  d.requirements = j.value("requirements", nlohmann::json::object());
  d.pros = j.value("pros", "");
  d.cons = j.value("cons", "");
  d.available = j.value("available", true);
  return d;
}

inline nlohmann::json descriptor_to_json(const SolverDescriptor& d) {
  return {{"solver_id", d.solver_id},     {"consumes", d.consumes},
          {"category", category_name(d.category)},
          {"produces", d.produces},       {"quality", d.quality},
          {"speed", d.speed},             {"deterministic", d.deterministic},
          {"backend", d.backend_kind},    {"requirements", d.requirements},
          {"pros", d.pros},               {"cons", d.cons},
          {"available", d.available}};
}

inline constexpr const char* kBuiltinSolvers = R"json([
  {"solver_id": "native-vrp", "consumes": "vrp", "quality": 4, "speed": 2,
   "requirements": {"capacity_feasible": true},
   "pros": "Strongest classical option: savings construction, local search and ruin-and-recreate rounds.",
   "cons": "Runtime grows quickly with the number of customers."},
  {"solver_id": "kmeans-clustering", "consumes": "vrp", "category": "clustering", "produces": "vrp",
   "quality": 2, "speed": 4, "requirements": {"coordinates": true},
   "pros": "Splits a large instance into independent smaller CVRPs.",
   "cons": "Ignores capacity when grouping; clusters may need several trucks."},
  {"solver_id": "two-phase-clustering", "consumes": "vrp", "category": "clustering", "produces": "tsp",
   "quality": 3, "speed": 4, "deterministic": true,
   "requirements": {"coordinates": true, "capacity_feasible": true},
   "pros": "Every cluster fits one truck, leaving one TSP per vehicle.",
   "cons": "Cluster boundaries are fixed before routing, costing some quality."},
  {"solver_id": "external-lkh", "consumes": "vrp", "quality": 5, "speed": 3, "backend": "subprocess",
   "requirements": {"binary": true},
   "pros": "State-of-the-art external routing engine.",
   "cons": "Needs the external binary to be installed."},
  {"solver_id": "native-local-search", "consumes": "tsp", "quality": 4, "speed": 5,
   "pros": "Nearest neighbour plus 2-opt and Or-opt; fast and usually near-optimal.",
   "cons": "Local optimum only."},
  {"solver_id": "external-lkh-tsp", "consumes": "tsp", "quality": 5, "speed": 4, "backend": "subprocess",
   "requirements": {"binary": true},
   "pros": "State-of-the-art external routing engine.",
   "cons": "Needs the external binary to be installed."},
  {"solver_id": "qubo-reformulation", "consumes": "tsp", "category": "reformulation", "produces": "qubo",
   "quality": 5, "speed": 5, "deterministic": true, "requirements": {"max_variables": 400},
   "pros": "Position encoding with (n-1)^2 binary variables; hands the tour to any QUBO solver.",
   "cons": "Variable count grows quadratically with the number of cities."},
  {"solver_id": "phase-estimation", "consumes": "tsp", "quality": 3, "speed": 1, "backend": "phase-estimation",
   "available": false,
   "pros": "Quantum phase estimation over tour permutations.",
   "cons": "No executable backend; only feasible for a handful of cities."},
  {"solver_id": "simulated-annealing", "consumes": "qubo", "quality": 4, "speed": 4,
   "backend": "simulated-annealer",
   "pros": "Metropolis single-flip sweeps; a local stand-in for an annealer.",
   "cons": "Heuristic; may miss the ground state on rugged landscapes."},
  {"solver_id": "qaoa", "consumes": "qubo", "quality": 2, "speed": 1, "backend": "statevector-sim",
   "requirements": {"qubits": "variables"},
   "pros": "Simulated QAOA with optimized angles.",
   "cons": "Statevector cost doubles per qubit; approximate on all but tiny models."},
  {"solver_id": "qubo-brute-force", "consumes": "qubo", "quality": 5, "speed": 1, "deterministic": true,
   "requirements": {"max_variables": 20},
   "pros": "Exact minimum.",
   "cons": "Enumerates 2^n states; only small models."},
  {"solver_id": "maxcut-reformulation", "consumes": "max-cut", "category": "reformulation", "produces": "qubo",
   "quality": 5, "speed": 5, "deterministic": true,
   "pros": "One binary variable per vertex.", "cons": ""},
  {"solver_id": "dpll", "consumes": "sat", "quality": 5, "speed": 4, "deterministic": true,
   "pros": "Complete search with unit propagation and pure literals.",
   "cons": "Exponential worst case; no clause learning."},
  {"solver_id": "compose-clusters", "consumes": "cluster-set", "category": "composition", "quality": 5, "speed": 5,
   "deterministic": true, "pros": "Maps cluster solutions back onto the original instance.", "cons": ""}
])json";

class SolverCatalog {
 public:
  SolverCatalog() = default;
  explicit SolverCatalog(const nlohmann::json& doc) {
    for (const auto& j : doc) add(descriptor_from_json(j));
  }

  static const SolverCatalog& builtin() {
    static const SolverCatalog catalog(nlohmann::json::parse(kBuiltinSolvers));
    return catalog;
  }

  void add(SolverDescriptor d) {
    auto it = std::find_if(solvers_.begin(), solvers_.end(), [&](const auto& s) { return s.solver_id == d.solver_id; });
    if (it != solvers_.end()) *it = std::move(d);
    else solvers_.push_back(std::move(d));
  }

  const SolverDescriptor* find(std::string_view id) const {
    for (const auto& s : solvers_) {
      if (s.solver_id == id) return &s;
    }
    return nullptr;
  }

  const SolverDescriptor& get(std::string_view id) const {
    if (const auto* s = find(id)) return *s;
    throw Error(Errc::InvalidArgument, "unknown solver '" + std::string(id) + "'");
  }

  std::vector<const SolverDescriptor*> for_type(std::string_view type_id) const {
    std::vector<const SolverDescriptor*> out;
    for (const auto& s : solvers_) {
      if (s.consumes == type_id) out.push_back(&s);
    }
    return out;
  }

  const std::vector<SolverDescriptor>& all() const { return solvers_; }

 private:
  std::vector<SolverDescriptor> solvers_;
};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

enum class StepKind { SolverLeaf, Decomposition, StrategyRef };

inline std::string_view step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::SolverLeaf: return "solver-leaf";
    case StepKind::Decomposition: return "decomposition";
    case StepKind::StrategyRef: return "strategy-ref";
  }
  return "?";
}

struct StrategyNode {
  std::string step_id;
  std::string consumes;
  StepKind kind = StepKind::SolverLeaf;
  std::optional<std::string> solver_id;
  std::vector<std::string> produces;
  std::vector<StrategyNode> children;
  std::string ref;                           // strategy-ref only
  std::vector<std::string> exclude_solvers;  // strategy-ref only
};

struct Strategy {
  std::string id;
  std::string problem_type;
  std::vector<StrategyNode> nodes;  // alternatives for the root problem
};

namespace detail {

inline StrategyNode strategy_node_from_json(const nlohmann::json& j, const std::string& consumes) {
  StrategyNode n;
  n.step_id = j.at("step_id").get<std::string>();
  n.consumes = j.value("consumes", consumes);
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "solver-leaf") n.kind = StepKind::SolverLeaf;
  else if (kind == "decomposition") n.kind = StepKind::Decomposition;
  else if (kind == "strategy-ref") n.kind = StepKind::StrategyRef;
  else throw Error(Errc::ParseError, "unknown step kind '" + kind + "' at step " + n.step_id);
  if (j.contains("solver_id")) n.solver_id = j.at("solver_id").get<std::string>();
  n.produces = j.value("produces", std::vector<std::string>{});
  n.ref = j.value("ref", "");
  n.exclude_solvers = j.value("exclude_solvers", std::vector<std::string>{});
  const std::string child_type = n.produces.empty() ? n.consumes : n.produces.front();
  for (const auto& c : j.value("children", nlohmann::json::array())) {
    n.children.push_back(strategy_node_from_json(c, child_type));
  }
  if (n.kind == StepKind::SolverLeaf && (!n.children.empty() || !n.solver_id)) {
    throw Error(Errc::ParseError, "solver-leaf " + n.step_id + " needs a solver_id and no children");
  }
  if (n.kind == StepKind::Decomposition && (!n.solver_id || n.produces.size() != 1)) {
    throw Error(Errc::ParseError, "decomposition " + n.step_id + " needs a solver_id and one produced type");
  }
  if (n.kind == StepKind::StrategyRef && n.ref.empty()) {
    throw Error(Errc::ParseError, "strategy-ref " + n.step_id + " names no strategy");
  }
  return n;
}

inline nlohmann::json strategy_node_to_json(const StrategyNode& n) {
  nlohmann::json j{{"step_id", n.step_id}, {"consumes", n.consumes}, {"kind", step_kind_name(n.kind)}};
  if (n.solver_id) j["solver_id"] = *n.solver_id;
  if (!n.produces.empty()) j["produces"] = n.produces;
  if (n.kind == StepKind::StrategyRef) {
    j["ref"] = n.ref;
    if (!n.exclude_solvers.empty()) j["exclude_solvers"] = n.exclude_solvers;
  }
  if (!n.children.empty()) {
    j["children"] = nlohmann::json::array();
    for (const auto& c : n.children) j["children"].push_back(strategy_node_to_json(c));
  }
  return j;
}

}  // namespace detail

inline Strategy strategy_from_json(const nlohmann::json& j) {
  Strategy s;
  s.id = j.at("id").get<std::string>();
  s.problem_type = j.at("problem_type").get<std::string>();
  for (const auto& n : j.at("nodes")) s.nodes.push_back(detail::strategy_node_from_json(n, s.problem_type));
  return s;
}

inline nlohmann::json strategy_to_json(const Strategy& s) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : s.nodes) nodes.push_back(detail::strategy_node_to_json(n));
  return {{"id", s.id}, {"problem_type", s.problem_type}, {"nodes", std::move(nodes)}};
}

inline constexpr const char* kBuiltinStrategies = R"json([
  {"id": "vrp", "problem_type": "vrp", "nodes": [
    {"step_id": "solve-vrp-directly", "kind": "solver-leaf", "solver_id": "native-vrp"},
    {"step_id": "kmeans-clustering", "kind": "decomposition", "solver_id": "kmeans-clustering",
     "produces": ["vrp"], "children": [
       {"step_id": "solve-cluster-vrp", "kind": "solver-leaf", "solver_id": "native-vrp"}]},
    {"step_id": "two-phase-clustering", "kind": "decomposition", "solver_id": "two-phase-clustering",
     "produces": ["tsp"], "children": [
       {"step_id": "solve-cluster-tsp", "kind": "strategy-ref", "ref": "tsp",
        "exclude_solvers": ["qubo-brute-force"]}]}]},
  {"id": "tsp", "problem_type": "tsp", "nodes": [
    {"step_id": "solve-tsp-directly", "kind": "solver-leaf", "solver_id": "native-local-search"},
    {"step_id": "solve-as-qubo", "kind": "decomposition", "solver_id": "qubo-reformulation",
     "produces": ["qubo"], "children": [
       {"step_id": "qubo-solver", "kind": "strategy-ref", "ref": "qubo"}]},
    {"step_id": "phase-estimation", "kind": "solver-leaf", "solver_id": "phase-estimation"}]},
  {"id": "qubo", "problem_type": "qubo", "nodes": [
    {"step_id": "simulated-annealing", "kind": "solver-leaf", "solver_id": "simulated-annealing"},
    {"step_id": "qaoa", "kind": "solver-leaf", "solver_id": "qaoa"},
    {"step_id": "brute-force", "kind": "solver-leaf", "solver_id": "qubo-brute-force"}]},
  {"id": "sat", "problem_type": "sat", "nodes": [
    {"step_id": "solve-sat", "kind": "solver-leaf", "solver_id": "dpll"}]},
  {"id": "max-cut", "problem_type": "max-cut", "nodes": [
    {"step_id": "solve-as-qubo", "kind": "decomposition", "solver_id": "maxcut-reformulation",
     "produces": ["qubo"], "children": [
       {"step_id": "qubo-solver", "kind": "strategy-ref", "ref": "qubo"}]}]}
])json";

inline constexpr std::size_t kMaxStrategyDepth = 16;

/// One (step_id, solver_id) pair per path element, root first.
struct PathStep {
  std::string step_id;
  std::string solver_id;
  bool operator==(const PathStep&) const = default;
};
using SolutionPath = std::vector<PathStep>;

inline std::string path_to_string(const SolutionPath& path) {
  std::string out;
  for (const auto& s : path) {
    if (!out.empty()) out += '/';
    out += s.solver_id;
  }
  return out;
}

struct PathConstraints {
  std::optional<std::size_t> max_clusterings;
  bool available_only = false;
};

class StrategyRegistry {
 public:
  StrategyRegistry() = default;
  explicit StrategyRegistry(const SolverCatalog& catalog) : catalog_(&catalog) {}

  static const StrategyRegistry& builtin() {
    static const StrategyRegistry registry = [] {
      StrategyRegistry r(SolverCatalog::builtin());
      for (const auto& j : nlohmann::json::parse(kBuiltinStrategies)) r.add(strategy_from_json(j));
      return r;
    }();
    return registry;
  }

  void add(Strategy s) { strategies_[s.id] = std::move(s); }

  /// Loads every *.json file of `dir` as a strategy document; later files
  /// replace earlier ids.
  void load_directory(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      std::stringstream buf;
      buf << in.rdbuf();
      add(strategy_from_json(nlohmann::json::parse(buf.str())));
    }
  }

  const Strategy& get(std::string_view id) const {
    auto it = strategies_.find(std::string(id));
    if (it == strategies_.end()) throw Error(Errc::UnknownStrategy, "'" + std::string(id) + "'");
    return it->second;
  }

  bool contains(std::string_view id) const { return strategies_.count(std::string(id)) > 0; }

  const SolverCatalog& catalog() const { return catalog_ ? *catalog_ : SolverCatalog::builtin(); }

  /// The referenced strategy's alternatives, with refs inside them inlined
  /// and excluded solvers pruned.
  std::vector<StrategyNode> resolve_strategy_ref(const StrategyNode& node) const {
    if (node.kind != StepKind::StrategyRef) {
      throw Error(Errc::InvalidArgument, "step " + node.step_id + " is not a strategy-ref");
    }
    std::vector<std::string> stack;
    return resolve(node, stack, {});
  }

  /// Copy of the strategy with every strategy-ref replaced by its target.
  Strategy inline_refs(std::string_view id) const {
    const auto& s = get(id);
    Strategy out{s.id, s.problem_type, {}};
    std::vector<std::string> stack{s.id};
    out.nodes = inline_list(s.nodes, stack, {});
    return out;
  }

  /// Depth-first, declaration order; refs are followed transparently.
  std::vector<SolutionPath> enumerate_paths(std::string_view id, const PathConstraints& constraints = {}) const {
    const auto& s = get(id);
    std::vector<std::string> stack{s.id};
    std::vector<SolutionPath> out;
    SolutionPath prefix;
    walk(inline_list(s.nodes, stack, {}), constraints, prefix, 0, out);
    return out;
  }

  /// Empty optional when the path is valid, otherwise the violation.
  std::optional<std::string> validate_path(std::string_view id, const SolutionPath& path) const {
    if (path.empty()) return "empty path";
    const Strategy* s = nullptr;
    try {
      s = &get(id);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    std::vector<std::string> stack{s->id};
    std::vector<StrategyNode> alternatives;
    try {
      alternatives = inline_list(s->nodes, stack, {});
    } catch (const Error& e) {
      return std::string(e.what());
    }
    std::string type = s->problem_type;
    std::string previous = "the root";
    for (std::size_t i = 0; i < path.size(); ++i) {
      const auto& step = path[i];
      const auto* desc = catalog().find(step.solver_id);
      if (!desc) return "step " + std::to_string(i + 1) + ": unknown solver '" + step.solver_id + "'";
      if (desc->consumes != type) {
        return "step " + std::to_string(i + 1) + ": " + step.solver_id + " consumes " + desc->consumes + " but " +
               previous + " produces " + type;
      }
      auto it = std::find_if(alternatives.begin(), alternatives.end(), [&](const StrategyNode& n) {
        return n.step_id == step.step_id && n.solver_id == step.solver_id;
      });
      if (it == alternatives.end()) {
        return "step " + std::to_string(i + 1) + ": (" + step.step_id + ", " + step.solver_id +
               ") is not an alternative after " + previous;
      }
      if (it->kind == StepKind::SolverLeaf) {
        if (i + 1 != path.size()) return "path continues after leaf " + step.solver_id;
        return std::nullopt;
      }
      previous = step.solver_id;
      type = it->produces.front();
      alternatives = it->children;
    }
    return "path ends at " + previous + " before reaching a solver leaf";
  }

  /// Accepts "solver/solver/..." or "step:solver/..." and matches against
  /// the enumerated paths of the strategy.
  SolutionPath parse_path_spec(std::string_view id, std::string_view spec) const {
    std::vector<std::pair<std::string, std::string>> tokens;
    std::string token;
    const auto flush = [&] {
      if (token.empty()) return;
      const auto colon = token.find(':');
      if (colon == std::string::npos) tokens.emplace_back("", token);
      else tokens.emplace_back(token.substr(0, colon), token.substr(colon + 1));
      token.clear();
    };
    for (char c : spec) {
      if (c == '/') flush();
      else token += c;
    }
    flush();
    if (tokens.empty()) throw Error(Errc::InvalidPath, "empty path");
    for (const auto& candidate : enumerate_paths(id)) {
      if (candidate.size() != tokens.size()) continue;
      bool match = true;
      for (std::size_t i = 0; i < tokens.size() && match; ++i) {
        match = candidate[i].solver_id == tokens[i].second &&
                (tokens[i].first.empty() || candidate[i].step_id == tokens[i].first);
      }
      if (match) return candidate;
    }
    // Not enumerable: build the literal path so validation names the defect.
    SolutionPath literal;
    for (const auto& [step, solver] : tokens) literal.push_back({step.empty() ? solver : step, solver});
    auto violation = validate_path(id, literal);
    throw Error(Errc::InvalidPath, violation ? *violation : "no such path: " + std::string(spec));
  }

 private:
  std::vector<StrategyNode> resolve(const StrategyNode& node, std::vector<std::string>& stack,
                                    std::set<std::string> excluded) const {
    if (std::find(stack.begin(), stack.end(), node.ref) != stack.end()) {
      std::string chain;
      for (const auto& s : stack) chain += s + " -> ";
      throw Error(Errc::CyclicStrategyReference, chain + node.ref);
    }
    if (stack.size() >= kMaxStrategyDepth) {
      throw Error(Errc::CyclicStrategyReference, "strategy nesting deeper than " + std::to_string(kMaxStrategyDepth));
    }
    const auto& target = get(node.ref);
    if (target.problem_type != node.consumes) {
      throw Error(Errc::TypeMismatch, "step " + node.step_id + " consumes " + node.consumes + " but strategy " +
                                          target.id + " solves " + target.problem_type);
    }
    excluded.insert(node.exclude_solvers.begin(), node.exclude_solvers.end());
    stack.push_back(target.id);
    auto out = inline_list(target.nodes, stack, excluded);
    stack.pop_back();
    return out;
  }

  std::vector<StrategyNode> inline_list(const std::vector<StrategyNode>& nodes, std::vector<std::string>& stack,
                                        const std::set<std::string>& excluded) const {
    std::vector<StrategyNode> out;
    for (const auto& n : nodes) {
      if (n.kind == StepKind::StrategyRef) {
        for (auto& r : resolve(n, stack, excluded)) out.push_back(std::move(r));
        continue;
      }
      if (n.solver_id && excluded.count(*n.solver_id)) continue;
      StrategyNode copy = n;
      copy.children = inline_list(n.children, stack, excluded);
      if (copy.kind == StepKind::Decomposition && copy.children.empty()) continue;
      out.push_back(std::move(copy));
    }
    return out;
  }

  void walk(const std::vector<StrategyNode>& nodes, const PathConstraints& c, SolutionPath& prefix,
            std::size_t clusterings, std::vector<SolutionPath>& out) const {
    for (const auto& n : nodes) {
      const auto* desc = catalog().find(*n.solver_id);
      if (c.available_only && desc && !desc->available) continue;
      const bool clusters = desc && desc->category == SolverCategory::Clustering;
      if (clusters && c.max_clusterings && clusterings + 1 > *c.max_clusterings) continue;
      prefix.push_back({n.step_id, *n.solver_id});
      if (n.kind == StepKind::SolverLeaf) out.push_back(prefix);
      else walk(n.children, c, prefix, clusterings + (clusters ? 1 : 0), out);
      prefix.pop_back();
    }
  }

  const SolverCatalog* catalog_ = nullptr;
  std::map<std::string, Strategy> strategies_;
};

}  // namespace metasolve

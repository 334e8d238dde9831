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

// The recursive problem tree: typed payloads, node lifecycle, results
// and the JSON document form used by the service and the on-disk store.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "metasolve/cluster.hpp"
#include "metasolve/common.hpp"
#include "metasolve/formats.hpp"
#include "metasolve/qubo.hpp"
#include "metasolve/routing.hpp"
#include "metasolve/sat.hpp"

namespace metasolve {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Lifecycle
// ---------------------------------------------------------------------------

enum class NodeState { NeedsInput, ReadyToSolve, Solving, Solved, Failed };

inline std::string_view state_name(NodeState s) {
  switch (s) {
    case NodeState::NeedsInput: return "NeedsInput";
    case NodeState::ReadyToSolve: return "ReadyToSolve";
    case NodeState::Solving: return "Solving";
    case NodeState::Solved: return "Solved";
    case NodeState::Failed: return "Failed";
  }
  return "?";
}

inline NodeState parse_state(std::string_view s) {
  for (auto st : {NodeState::NeedsInput, NodeState::ReadyToSolve, NodeState::Solving, NodeState::Solved,
                  NodeState::Failed}) {
    if (state_name(st) == s) return st;
  }
  throw Error(Errc::ParseError, "unknown node state '" + std::string(s) + "'");
}

/// NeedsInput -> ReadyToSolve once a placeholder receives its payload;
/// ReadyToSolve -> Solving -> {Solved, Failed}; Failed -> ReadyToSolve is the
/// retry path and Solved -> ReadyToSolve an explicit reset.
inline bool legal_transition(NodeState from, NodeState to) {
  using S = NodeState;
  switch (from) {
    case S::NeedsInput: return to == S::ReadyToSolve;
    case S::ReadyToSolve: return to == S::Solving;
    case S::Solving: return to == S::Solved || to == S::Failed;
    case S::Solved: return to == S::ReadyToSolve;
    case S::Failed: return to == S::ReadyToSolve;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Payloads and results
// ---------------------------------------------------------------------------

/// Payload of a cluster-set node once its parent's clustering step ran.
struct ClusterSet {
  ClusteringKind kind = ClusteringKind::TwoPhaseTsp;
  std::vector<std::vector<std::size_t>> clusters;
  bool operator==(const ClusterSet&) const = default;
};

using Payload = std::variant<std::monostate, TspInstance, VrpInstance, QuboModel, CnfFormula, MaxCutGraph, ClusterSet>;

struct CutResult {
  Bits side;
  double weight = 0.0;
  bool operator==(const CutResult&) const = default;
};

using SolutionPayload = std::variant<std::monostate, Tour, VrpSolution, Sample, SatResult, CutResult>;

struct SolveResult {
  SolutionPayload payload;
  double objective = std::numeric_limits<double>::infinity();
  bool feasible = false;
  std::int64_t wall_ms = 0;
  std::string solver_id;
  std::string backend_id;
  std::size_t trial = 0;
  /// Objective of every repetition when a leaf ran more than once.
  std::vector<double> trial_objectives;
  bool operator==(const SolveResult&) const = default;
};

struct ProblemNode {
  std::string id;
  std::string type_id;
  Payload payload;
  NodeState state = NodeState::ReadyToSolve;
  std::optional<std::string> solver_id;
  std::map<std::string, Json> settings;  // strings and numbers only
  std::vector<ProblemNode> children;
  std::optional<SolveResult> result;
  std::optional<std::string> diagnostic;  // set when Failed
  bool operator==(const ProblemNode&) const = default;
};

/// Rejects illegal transitions without touching the node.
inline void transition(ProblemNode& node, NodeState to) {
  if (!legal_transition(node.state, to)) {
    throw Error(Errc::IllegalTransition,
                std::string(state_name(node.state)) + " -> " + std::string(state_name(to)) + " on node " + node.id);
  }
  node.state = to;
  if (to != NodeState::Failed) node.diagnostic.reset();
}

// ---------------------------------------------------------------------------
// Tree helpers
// ---------------------------------------------------------------------------

inline ProblemNode* find_node(ProblemNode& root, std::string_view id) {
  if (root.id == id) return &root;
  for (auto& c : root.children) {
    if (auto* hit = find_node(c, id)) return hit;
  }
  return nullptr;
}

inline const ProblemNode* find_node(const ProblemNode& root, std::string_view id) {
  return find_node(const_cast<ProblemNode&>(root), id);
}

inline void for_each_node(const ProblemNode& root, const std::function<void(const ProblemNode&)>& fn) {
  fn(root);
  for (const auto& c : root.children) for_each_node(c, fn);
}

/// Child ids extend the parent id, so ids stay unique within a tree and
/// survive re-expansion.
inline std::string child_id(const ProblemNode& parent, std::size_t index) {
  return parent.id + "." + std::to_string(index);
}

inline std::string new_problem_id() {
  static std::mutex mu;
  static std::mt19937_64 engine{std::random_device{}() ^
                                static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count())};
  std::lock_guard lock(mu);
  static const char* hex = "0123456789abcdef";
  std::string out = "p";
  auto x = engine();
  for (int i = 0; i < 16; ++i, x >>= 4) out += hex[x & 0xf];
  return out;
}

/// Returns a description of the first broken invariant, if any.
inline std::optional<std::string> check_tree_invariants(const ProblemNode& root) {
  std::optional<std::string> problem;
  std::map<std::string, int> seen;
  for_each_node(root, [&](const ProblemNode& n) {
    if (problem) return;
    if (++seen[n.id] > 1) problem = "duplicate node id " + n.id;
    else if (!n.children.empty() && !n.solver_id) problem = "node " + n.id + " has children but no solver";
    else if ((n.state == NodeState::Solved) != n.result.has_value()) problem = "node " + n.id + " result/state mismatch";
    else if (n.result && n.result->feasible && !std::isfinite(n.result->objective)) {
      problem = "node " + n.id + " feasible result with non-finite objective";
    } else if (n.state == NodeState::Solved) {
      for (const auto& c : n.children) {
        if (c.state != NodeState::Solved) problem = "solved node " + n.id + " has unsolved child " + c.id;
      }
    }
  });
  return problem;
}

// ---------------------------------------------------------------------------
// Problem types
// ---------------------------------------------------------------------------

struct ProblemTypeDescriptor {
  std::string type_id;
  std::string display_name;
  std::string format_id;
  std::string strategy_id;
};

inline const std::vector<ProblemTypeDescriptor>& problem_types() {
  static const std::vector<ProblemTypeDescriptor> types{
      {"vrp", "Capacitated Vehicle Routing", "tsplib", "vrp"},
      {"tsp", "Traveling Salesperson", "tsplib", "tsp"},
      {"qubo", "Quadratic Unconstrained Binary Optimization", "qubo-text", "qubo"},
      {"sat", "Boolean Satisfiability", "dimacs", "sat"},
      {"max-cut", "Maximum Cut", "dimacs", "max-cut"},
  };
  return types;
}

inline const ProblemTypeDescriptor& problem_type(std::string_view type_id) {
  for (const auto& t : problem_types()) {
    if (t.type_id == type_id) return t;
  }
  throw Error(Errc::UnknownProblemType, "'" + std::string(type_id) + "'");
}

inline Payload parse_payload(std::string_view type_id, std::string_view text) {
  problem_type(type_id);
  if (detail::trim(text).empty()) throw Error(Errc::ParseError, "empty input", 1);
  if (type_id == "vrp" || type_id == "tsp") {
    auto parsed = parse_tsplib(text);
    if (type_id == "vrp") {
      if (auto* v = std::get_if<VrpInstance>(&parsed)) return *v;
      throw Error(Errc::ParseError, "expected a CVRP file (CAPACITY and DEMAND_SECTION)");
    }
    if (auto* t = std::get_if<TspInstance>(&parsed)) return *t;
    throw Error(Errc::ParseError, "expected a TSP file, got a CVRP");
  }
  if (type_id == "qubo") return parse_qubo_text(text);
  if (type_id == "sat") return parse_dimacs(text);
  return parse_edge_list(text);
}

/// Parses `input_text` and returns a fresh root in state ReadyToSolve.
inline ProblemNode create_problem(std::string_view type_id, std::string_view input_text) {
  ProblemNode root;
  root.payload = parse_payload(type_id, input_text);
  root.id = new_problem_id();
  root.type_id = std::string(type_id);
  root.state = NodeState::ReadyToSolve;
  return root;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline double number_or_inf(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline Json graph_json(const TspInstance& g) {
  Json j{{"name", g.name}, {"comment", g.comment},
         {"edge_weight_kind", g.kind == EdgeWeightKind::Euc2d ? "euc2d" : "explicit"}};
  if (g.kind == EdgeWeightKind::Euc2d) {
    Json coords = Json::array();
    for (const auto& p : g.coords) coords.push_back({p.x, p.y});
    j["coords"] = std::move(coords);
  } else {
    j["matrix"] = g.matrix;
  }
  return j;
}

inline TspInstance graph_from_json(const Json& j) {
  TspInstance g;
  g.name = j.value("name", "");
  g.comment = j.value("comment", "");
  g.kind = j.at("edge_weight_kind").get<std::string>() == "euc2d" ? EdgeWeightKind::Euc2d : EdgeWeightKind::Explicit;
  if (g.kind == EdgeWeightKind::Euc2d) {
    for (const auto& p : j.at("coords")) g.coords.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  } else {
    g.matrix = j.at("matrix").get<std::vector<std::vector<std::int64_t>>>();
  }
  return g;
}

inline Json qubo_json(const QuboModel& m) {
  Json terms = Json::array();
  for (const auto& [k, v] : m.coeffs) terms.push_back({k.first, k.second, v});
  return {{"n", m.n}, {"offset", m.offset}, {"terms", std::move(terms)}};
}

inline QuboModel qubo_from_json(const Json& j) {
  QuboModel m(j.at("n").get<std::size_t>());
  m.offset = j.value("offset", 0.0);
  for (const auto& t : j.at("terms")) m.coeffs[{t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>()}] = t.at(2).get<double>();
  return m;
}

inline Json bits_json(const Bits& b) {
  std::string s;
  for (auto x : b) s += x ? '1' : '0';
  return s;
}

inline Bits bits_from_json(const Json& j) {
  Bits b;
  for (char c : j.get<std::string>()) b.push_back(c == '1' ? 1 : 0);
  return b;
}

}  // namespace detail

inline Json payload_to_json(const Payload& p) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, TspInstance>) {
          auto j = detail::graph_json(v);
          j["kind"] = "tsp";
          return j;
        } else if constexpr (std::is_same_v<T, VrpInstance>) {
          auto j = detail::graph_json(v.graph);
          j["kind"] = "vrp";
          j["capacity"] = v.capacity;
          j["demands"] = v.demands;
          j["depot"] = v.depot;
          j["vehicles"] = v.vehicles;
          return j;
        } else if constexpr (std::is_same_v<T, QuboModel>) {
          auto j = detail::qubo_json(v);
          j["kind"] = "qubo";
          return j;
        } else if constexpr (std::is_same_v<T, CnfFormula>) {
          return {{"kind", "sat"}, {"num_vars", v.num_vars}, {"clauses", v.clauses}};
        } else if constexpr (std::is_same_v<T, MaxCutGraph>) {
          Json edges = Json::array();
          for (const auto& e : v.edges) edges.push_back({e.u, e.v, e.weight});
          return {{"kind", "max-cut"}, {"n", v.n}, {"edges", std::move(edges)}};
        } else {
          return {{"kind", "cluster-set"},
                  {"clustering", std::string(clustering_kind_name(v.kind))},
                  {"clusters", v.clusters}};
        }
      },
      p);
}

inline Payload payload_from_json(const Json& j) {
  if (j.is_null()) return std::monostate{};
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "tsp") return detail::graph_from_json(j);
  if (kind == "vrp") {
    VrpInstance v;
    v.graph = detail::graph_from_json(j);
    v.capacity = j.at("capacity").get<std::int64_t>();
    v.demands = j.at("demands").get<std::vector<std::int64_t>>();
    v.depot = j.at("depot").get<std::size_t>();
    v.vehicles = j.at("vehicles").get<int>();
    return v;
  }
  if (kind == "qubo") return detail::qubo_from_json(j);
  if (kind == "sat") return CnfFormula{j.at("num_vars").get<int>(), j.at("clauses").get<std::vector<std::vector<int>>>()};
  if (kind == "max-cut") {
    MaxCutGraph g;
    g.n = j.at("n").get<std::size_t>();
    for (const auto& e : j.at("edges")) g.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()});
    return g;
  }
  if (kind == "cluster-set") {
    return ClusterSet{j.at("clustering").get<std::string>() == "kmeans-vrp" ? ClusteringKind::KMeansVrp
                                                                           : ClusteringKind::TwoPhaseTsp,
                      j.at("clusters").get<std::vector<std::vector<std::size_t>>>()};
  }
  throw Error(Errc::ParseError, "unknown payload kind '" + kind + "'");
}

inline Json solution_to_json(const SolutionPayload& p) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, Tour>) {
          return {{"kind", "tour"}, {"order", v.order}, {"cost", v.cost}};
        } else if constexpr (std::is_same_v<T, VrpSolution>) {
          return {{"kind", "vrp-solution"}, {"routes", v.routes}, {"cost", v.cost}, {"feasible", v.feasible}};
        } else if constexpr (std::is_same_v<T, Sample>) {
          return {{"kind", "sample"}, {"bits", detail::bits_json(v.bits)}, {"energy", v.energy}, {"count", v.count}};
        } else if constexpr (std::is_same_v<T, SatResult>) {
          return {{"kind", "assignment"}, {"satisfiable", v.satisfiable}, {"values", v.assignment.values}};
        } else {
          return {{"kind", "cut"}, {"side", detail::bits_json(v.side)}, {"weight", v.weight}};
        }
      },
      p);
}

inline SolutionPayload solution_from_json(const Json& j) {
  if (j.is_null()) return std::monostate{};
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "tour") return Tour{j.at("order").get<std::vector<std::size_t>>(), j.at("cost").get<std::int64_t>()};
  if (kind == "vrp-solution") {
    return VrpSolution{j.at("routes").get<std::vector<std::vector<std::size_t>>>(), j.at("cost").get<std::int64_t>(),
                       j.at("feasible").get<bool>()};
  }
  if (kind == "sample") {
    return Sample{detail::bits_from_json(j.at("bits")), j.at("energy").get<double>(), j.at("count").get<std::size_t>()};
  }
  if (kind == "assignment") {
    return SatResult{j.at("satisfiable").get<bool>(), Assignment{j.at("values").get<std::vector<bool>>()}};
  }
  if (kind == "cut") return CutResult{detail::bits_from_json(j.at("side")), j.at("weight").get<double>()};
  throw Error(Errc::ParseError, "unknown solution kind '" + kind + "'");
}

inline Json result_to_json(const SolveResult& r) {
  Json j{{"payload", solution_to_json(r.payload)},
         {"objective", detail::number_or_null(r.objective)},
         {"feasible", r.feasible},
         {"wall_ms", r.wall_ms},
         {"solver_id", r.solver_id},
         {"backend_id", r.backend_id},
         {"trial", r.trial}};
  if (!r.trial_objectives.empty()) {
    Json t = Json::array();
    for (double v : r.trial_objectives) t.push_back(detail::number_or_null(v));
    j["trial_objectives"] = std::move(t);
  }
  return j;
}

inline SolveResult result_from_json(const Json& j) {
  SolveResult r;
  r.payload = solution_from_json(j.at("payload"));
  r.objective = detail::number_or_inf(j.at("objective"));
  r.feasible = j.at("feasible").get<bool>();
  r.wall_ms = j.at("wall_ms").get<std::int64_t>();
  r.solver_id = j.at("solver_id").get<std::string>();
  r.backend_id = j.at("backend_id").get<std::string>();
  r.trial = j.at("trial").get<std::size_t>();
  if (j.contains("trial_objectives")) {
    for (const auto& v : j.at("trial_objectives")) r.trial_objectives.push_back(detail::number_or_inf(v));
  }
  return r;
}

inline Json node_to_json(const ProblemNode& n) {
  Json children = Json::array();
  for (const auto& c : n.children) children.push_back(node_to_json(c));
  Json settings = Json::object();
  for (const auto& [k, v] : n.settings) settings[k] = v;
  Json j{{"id", n.id},
         {"type_id", n.type_id},
         {"payload", payload_to_json(n.payload)},
         {"state", std::string(state_name(n.state))},
         {"solver_id", n.solver_id ? Json(*n.solver_id) : Json(nullptr)},
         {"settings", std::move(settings)},
         {"children", std::move(children)},
         {"result", n.result ? result_to_json(*n.result) : Json(nullptr)}};
  if (n.diagnostic) j["diagnostic"] = *n.diagnostic;
  return j;
}

inline ProblemNode node_from_json(const Json& j) {
  ProblemNode n;
  n.id = j.at("id").get<std::string>();
  n.type_id = j.at("type_id").get<std::string>();
  n.payload = payload_from_json(j.at("payload"));
  n.state = parse_state(j.at("state").get<std::string>());
  if (!j.at("solver_id").is_null()) n.solver_id = j.at("solver_id").get<std::string>();
  for (const auto& [k, v] : j.at("settings").items()) n.settings[k] = v;
  for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
  if (!j.at("result").is_null()) n.result = result_from_json(j.at("result"));
  if (j.contains("diagnostic")) n.diagnostic = j.at("diagnostic").get<std::string>();
  return n;
}

}  // namespace metasolve

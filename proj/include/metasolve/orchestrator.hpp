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

// Backend registry, suggestions, solver selection and the execution
// engine (stepwise, complete and multi-path).
//
// Per-node seeds are derived from the run seed along the node's position in
// the tree, so a stepwise run and a complete run of the same path produce
// the same numbers, and thread interleaving never matters.
//
// Requirement keys understood in solver descriptors:
//   coordinates: true        instance must carry node coordinates
//   capacity_feasible: true  every demand fits and the fleet covers the total
//   max_variables: N         QUBO variable count limit of the solver itself
//   qubits: "variables"      one qubit per QUBO variable on a statevector backend
//   binary: true             subprocess backend with an installed binary

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "metasolve/cluster.hpp"
#include "metasolve/common.hpp"
#include "metasolve/external.hpp"
#include "metasolve/problem_model.hpp"
#include "metasolve/quantum.hpp"
#include "metasolve/qubo.hpp"
#include "metasolve/routing.hpp"
#include "metasolve/sat.hpp"
#include "metasolve/strategy.hpp"

namespace metasolve {

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

struct Backend {
  std::string backend_id;
  std::string kind;
  Json capabilities = Json::object();
  bool available = true;
};

class BackendRegistry {
 public:
  BackendRegistry() = default;

  /// {"backends": [{backend_id, kind, capabilities, available}]} or a bare
  /// list. Subprocess backends with a binary_path are re-checked on disk.
  static BackendRegistry from_json(const Json& doc) {
    const Json& list = doc.is_object() ? doc.at("backends") : doc;
    BackendRegistry r;
    for (const auto& j : list) {
      Backend b;
      b.backend_id = j.at("backend_id").get<std::string>();
      b.kind = j.at("kind").get<std::string>();
      b.capabilities = j.value("capabilities", Json::object());
      b.available = j.value("available", true);
      r.add(std::move(b));
    }
    return r;
  }

  /// Local CPU, simulated annealer, 22-qubit statevector simulator and the
  /// external routing binary named by METASOLVE_LKH_BINARY (if any).
  static BackendRegistry defaults(std::optional<std::string> external_binary = std::nullopt) {
    if (!external_binary) {
      if (const char* env = std::getenv(kExternalBinaryEnv)) external_binary = env;
    }
    const auto threads = std::max(1u, std::thread::hardware_concurrency());
    BackendRegistry r;
    r.add({"local-cpu", "local-cpu", {{"max_threads", threads}}, true});
    r.add({"annealer-sim", "simulated-annealer", Json::object(), true});
    r.add({"statevector", "statevector-sim", {{"max_qubits", kDefaultQubitCap}}, true});
    r.add({"lkh", "subprocess", {{"binary_path", external_binary.value_or("")}}, true});
    return r;
  }

  void add(Backend b) {
    if (b.kind == "subprocess" && b.capabilities.contains("binary_path")) {
      const bool ok = is_executable_file(b.capabilities["binary_path"].get<std::string>());
      b.capabilities["binary_available"] = ok;
      b.available = b.available && ok;
    }
    backends_.push_back(std::move(b));
  }

  const std::vector<Backend>& all() const { return backends_; }

  std::size_t max_threads() const {
    for (const auto& b : backends_) {
      if (b.kind == "local-cpu" && b.available) return std::max<std::size_t>(1, b.capabilities.value("max_threads", 1));
    }
    return 1;
  }

  Json to_json() const {
    Json list = Json::array();
    for (const auto& b : backends_) {
      list.push_back({{"backend_id", b.backend_id}, {"kind", b.kind}, {"capabilities", b.capabilities},
                      {"available", b.available}});
    }
    return {{"backends", std::move(list)}};
  }

 private:
  std::vector<Backend> backends_;
};

struct InstanceMetrics {
  std::size_t nodes = 0;
  std::size_t variables = 0;  // QUBO variables
  bool coordinates = false;
  bool capacity_feasible = true;
};

inline InstanceMetrics metrics_of(const Payload& payload) {
  InstanceMetrics m;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TspInstance>) {
          m.nodes = v.size();
          m.coordinates = v.kind == EdgeWeightKind::Euc2d;
        } else if constexpr (std::is_same_v<T, VrpInstance>) {
          m.nodes = v.size();
          m.coordinates = v.graph.kind == EdgeWeightKind::Euc2d;
          m.capacity_feasible = v.capacity_feasible();
        } else if constexpr (std::is_same_v<T, QuboModel>) {
          m.variables = v.n;
        } else if constexpr (std::is_same_v<T, CnfFormula>) {
          m.variables = static_cast<std::size_t>(v.num_vars);
        } else if constexpr (std::is_same_v<T, MaxCutGraph>) {
          m.nodes = v.n;
        }
      },
      payload);
  return m;
}

/// Metrics of the sub-problem a reformulation would hand to the next step.
inline InstanceMetrics reformulated_metrics(const SolverDescriptor& d, const InstanceMetrics& m) {
  InstanceMetrics out;
  if (d.solver_id == "qubo-reformulation") out.variables = m.nodes >= 1 ? (m.nodes - 1) * (m.nodes - 1) : 0;
  else out.variables = m.nodes;
  return out;
}

/// First available backend of the solver's kind meeting its numeric needs.
inline const Backend& select_backend(const SolverDescriptor& d, const InstanceMetrics& m, const BackendRegistry& reg) {
  if (!d.available) {
    throw Error(Errc::NoCompatibleBackend, d.solver_id + " is declared unavailable: no executable backend");
  }
  const bool wants_qubits = d.requirements.contains("qubits");
  const bool wants_binary = d.requirements.value("binary", false);
  std::optional<std::size_t> best_cap;
  bool any_of_kind = false;
  for (const auto& b : reg.all()) {
    if (b.kind != d.backend_kind || !b.available) continue;
    any_of_kind = true;
    if (wants_qubits) {
      const auto cap = b.capabilities.value("max_qubits", std::size_t{0});
      best_cap = std::max(best_cap.value_or(0), cap);
      if (m.variables > cap) continue;
    }
    if (wants_binary && !b.capabilities.value("binary_available", false)) continue;
    return b;
  }
  if (wants_qubits && best_cap) {
    throw Error(Errc::NoCompatibleBackend,
                "needs " + std::to_string(m.variables) + " qubits, max " + std::to_string(*best_cap));
  }
  if (!any_of_kind && wants_binary) {
    throw Error(Errc::NoCompatibleBackend, d.solver_id + " needs an installed external binary (set " +
                                               std::string(kExternalBinaryEnv) + ")");
  }
  throw Error(Errc::NoCompatibleBackend, "no available " + d.backend_kind + " backend for " + d.solver_id);
}

/// Reason the solver cannot run on an instance with these metrics, if any.
inline std::optional<std::string> infeasibility(const SolverDescriptor& d, const InstanceMetrics& m,
                                                const BackendRegistry& reg) {
  const auto& req = d.requirements;
  if (req.value("coordinates", false) && !m.coordinates) return "needs node coordinates";
  if (req.value("capacity_feasible", false) && !m.capacity_feasible) return "total demand exceeds fleet capacity";
  if (req.contains("max_variables")) {
    const auto cap = req["max_variables"].get<std::size_t>();
    const auto need = d.category == SolverCategory::Reformulation ? reformulated_metrics(d, m).variables : m.variables;
    if (need > cap) return "needs " + std::to_string(need) + " variables, max " + std::to_string(cap);
  }
  try {
    select_backend(d, m, reg);
  } catch (const Error& e) {
    return e.detail();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Suggestions
// ---------------------------------------------------------------------------

inline double suggestion_score(double speed, double quality, double speed_weight) {
  return speed_weight * speed / 5.0 + (1.0 - speed_weight) * quality / 5.0;
}

/// Indices ordered by descending score; ties keep input order.
inline std::vector<std::size_t> rank_by_score(const std::vector<std::pair<double, double>>& speed_quality,
                                              double speed_weight) {
  std::vector<std::size_t> idx(speed_quality.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return suggestion_score(speed_quality[a].first, speed_quality[a].second, speed_weight) >
           suggestion_score(speed_quality[b].first, speed_quality[b].second, speed_weight);
  });
  return idx;
}

struct SuggestionEntry {
  std::string solver_id;
  std::string via;  // reformulation to select first, if any
  double score = 0.0;
  bool feasible = false;
  std::string rationale;
  std::string pros;
  std::string cons;
  int quality = 0;
  int speed = 0;
};

struct Suggestion {
  std::vector<SuggestionEntry> ranked;
  bool high_confidence = false;
};

inline constexpr double kDefaultConfidenceMargin = 0.15;

/// Feasible solvers ranked by w*speed/5 + (1-w)*quality/5, infeasible ones
/// after them with score 0. Reformulations are looked through: each solver
/// of the produced type appears as its own entry with `via` set.
inline Suggestion suggest(const ProblemNode& node, double speed_weight, const BackendRegistry& reg,
                          const SolverCatalog& catalog = SolverCatalog::builtin(),
                          double confidence_margin = kDefaultConfidenceMargin) {
  if (!(speed_weight >= 0.0 && speed_weight <= 1.0)) {
    throw Error(Errc::InvalidArgument, "speed_weight must lie in [0, 1]");
  }
  const auto metrics = metrics_of(node.payload);
  std::vector<SuggestionEntry> feasible, infeasible;
  const auto consider = [&](const SolverDescriptor& d, const SolverDescriptor* via, const InstanceMetrics& m) {
    SuggestionEntry e;
    e.solver_id = d.solver_id;
    e.via = via ? via->solver_id : "";
    e.quality = via ? std::min(d.quality, via->quality) : d.quality;
    e.speed = via ? std::min(d.speed, via->speed) : d.speed;
    e.pros = d.pros;
    e.cons = d.cons;
    std::optional<std::string> reason;
    if (via) reason = infeasibility(*via, metrics, reg);
    if (!reason) reason = infeasibility(d, m, reg);
    if (reason) {
      e.rationale = *reason;
      infeasible.push_back(std::move(e));
      return;
    }
    e.feasible = true;
    e.score = suggestion_score(e.speed, e.quality, speed_weight);
    e.rationale = "quality " + std::to_string(e.quality) + "/5, speed " + std::to_string(e.speed) + "/5";
    if (via) e.rationale += ", after " + via->solver_id;
    feasible.push_back(std::move(e));
  };
  for (const auto* d : catalog.for_type(node.type_id)) {
    if (d->category == SolverCategory::Composition) continue;
    if (d->category == SolverCategory::Reformulation) {
      const auto child = reformulated_metrics(*d, metrics);
      for (const auto* leaf : catalog.for_type(d->produces)) {
        if (leaf->category == SolverCategory::Leaf) consider(*leaf, d, child);
      }
      continue;
    }
    consider(*d, nullptr, metrics);
  }
  std::vector<std::pair<double, double>> sq;
  for (const auto& e : feasible) sq.emplace_back(e.speed, e.quality);
  Suggestion out;
  for (auto i : rank_by_score(sq, speed_weight)) out.ranked.push_back(feasible[i]);
  if (out.ranked.size() == 1) out.high_confidence = true;
  if (out.ranked.size() >= 2) out.high_confidence = out.ranked[0].score - out.ranked[1].score >= confidence_margin - 1e-12;
  for (auto& e : infeasible) out.ranked.push_back(std::move(e));
  return out;
}

inline Json suggestion_to_json(const Suggestion& s) {
  Json ranked = Json::array();
  for (const auto& e : s.ranked) {
    Json j{{"solver_id", e.solver_id}, {"score", e.score},     {"feasible", e.feasible}, {"rationale", e.rationale},
           {"pros", e.pros},           {"cons", e.cons},       {"quality", e.quality},   {"speed", e.speed}};
    if (!e.via.empty()) j["via"] = e.via;
    ranked.push_back(std::move(j));
  }
  return {{"ranked", std::move(ranked)}, {"confidence", s.high_confidence ? "high" : "low"}};
}

// ---------------------------------------------------------------------------
// Execution context
// ---------------------------------------------------------------------------

/// Shared budget of extra worker threads; callers always work themselves,
/// so nested parallel sections cannot deadlock.
class ThreadBudget {
 public:
  explicit ThreadBudget(std::size_t max_threads) : free_(static_cast<long>(max_threads) - 1) {}
  std::size_t acquire(std::size_t wanted) {
    long have = free_.load();
    while (have > 0) {
      const long take = std::min<long>(have, static_cast<long>(wanted));
      if (free_.compare_exchange_weak(have, have - take)) return static_cast<std::size_t>(take);
    }
    return 0;
  }
  void release(std::size_t n) { free_ += static_cast<long>(n); }

 private:
  std::atomic<long> free_;
};

struct ExecutionContext {
  const BackendRegistry* backends = nullptr;
  const SolverCatalog* catalog = &SolverCatalog::builtin();
  const StrategyRegistry* strategies = &StrategyRegistry::builtin();
  std::mutex* tree_mutex = nullptr;             // guards structural writes when others read
  const std::atomic<bool>* cancel = nullptr;
  std::shared_ptr<ThreadBudget> threads;
  std::function<void()> on_change;              // after every state change

  explicit ExecutionContext(const BackendRegistry& reg)
      : backends(&reg), threads(std::make_shared<ThreadBudget>(reg.max_threads())) {}
};

namespace detail {

class TreeLock {
 public:
  explicit TreeLock(const ExecutionContext& ctx) {
    if (ctx.tree_mutex) lock_ = std::unique_lock(*ctx.tree_mutex);
  }

 private:
  std::unique_lock<std::mutex> lock_;
};

inline void notify(const ExecutionContext& ctx) {
  if (ctx.on_change) ctx.on_change();
}

/// Runs fn(i) for i in [0, n); errors are collected, never lost.
inline std::vector<std::exception_ptr> parallel_for(std::size_t n, ThreadBudget& budget,
                                                    const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t extra = n > 1 ? budget.acquire(n - 1) : 0;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < extra; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  budget.release(extra);
  return errors;
}

inline double setting(const ProblemNode& node, const std::string& key, double fallback) {
  auto it = node.settings.find(key);
  if (it == node.settings.end()) return fallback;
  if (!it->second.is_number()) throw Error(Errc::InvalidArgument, "setting '" + key + "' must be a number");
  return it->second.get<double>();
}

inline std::size_t count_setting(const ProblemNode& node, const std::string& key, std::size_t fallback) {
  const double v = setting(node, key, static_cast<double>(fallback));
  if (v < 0 || v != std::floor(v)) throw Error(Errc::InvalidArgument, "setting '" + key + "' must be a whole number");
  return static_cast<std::size_t>(v);
}

inline bool better(const SolveResult& a, const SolveResult& b) {
  if (a.feasible != b.feasible) return a.feasible;
  return a.objective < b.objective;
}

inline void fail(ProblemNode& node, const std::string& message, const ExecutionContext& ctx) {
  {
    TreeLock lock(ctx);
    if (node.state == NodeState::ReadyToSolve) transition(node, NodeState::Solving);
    if (node.state == NodeState::Solving) transition(node, NodeState::Failed);
    node.diagnostic = message;
    node.result.reset();
  }
  notify(ctx);
}

inline void check_cancel(const ExecutionContext& ctx) {
  if (ctx.cancel && ctx.cancel->load()) throw Error(Errc::Cancelled, "execution cancelled");
}

inline const Backend& local_backend(const BackendRegistry& reg) {
  for (const auto& b : reg.all()) {
    if (b.kind == "local-cpu" && b.available) return b;
  }
  throw Error(Errc::NoCompatibleBackend, "no available local-cpu backend");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

/// Attaches the solver and creates its child slots: one reformulated child,
/// or one cluster-set placeholder for clustering solvers. Selecting the
/// solver that is already attached is a no-op.
inline void select_solver(ProblemNode& node, const std::string& solver_id,
                          const SolverCatalog& catalog = SolverCatalog::builtin()) {
  if (node.type_id == "cluster-set") {
    throw Error(Errc::IllegalState, "the solver of a cluster-set node is fixed");
  }
  const auto& d = catalog.get(solver_id);
  if (d.consumes != node.type_id) {
    throw Error(Errc::TypeMismatch, solver_id + " consumes " + d.consumes + ", node " + node.id + " is " + node.type_id);
  }
  if (node.solver_id == solver_id) return;
  if (node.state != NodeState::ReadyToSolve) {
    throw Error(Errc::IllegalState, "node " + node.id + " is " + std::string(state_name(node.state)));
  }
  std::vector<ProblemNode> children;
  if (d.category == SolverCategory::Clustering) {
    ProblemNode c;
    c.id = child_id(node, 0);
    c.type_id = "cluster-set";
    c.state = NodeState::NeedsInput;
    c.solver_id = "compose-clusters";
    c.settings = node.settings;  // children inherit what was set above them
    children.push_back(std::move(c));
  } else if (d.category == SolverCategory::Reformulation) {
    ProblemNode c;
    c.id = child_id(node, 0);
    c.type_id = d.produces;
    c.settings = node.settings;
    if (const auto* tsp = std::get_if<TspInstance>(&node.payload)) {
      const double scale = detail::setting(node, "penalty_scale", kDefaultPenaltyScale);
      c.payload = tsp_to_qubo(*tsp, scale, d.requirements.value("max_variables", kDefaultEncodingCap)).model;
    } else if (const auto* g = std::get_if<MaxCutGraph>(&node.payload)) {
      c.payload = maxcut_to_qubo(*g);
    } else {
      throw Error(Errc::TypeMismatch, solver_id + " cannot reformulate this payload");
    }
    children.push_back(std::move(c));
  }
  node.solver_id = solver_id;
  node.children = std::move(children);
  node.result.reset();
}

/// Solved/Failed -> ReadyToSolve, dropping results below the node.
inline void reset_node(ProblemNode& node) {
  if (node.state == NodeState::Solved || node.state == NodeState::Failed) transition(node, NodeState::ReadyToSolve);
  node.result.reset();
  node.diagnostic.reset();
}

// ---------------------------------------------------------------------------
// Step execution
// ---------------------------------------------------------------------------

/// Seed of `node_id`: the run seed hashed along the path from the root.
inline std::optional<std::uint64_t> node_seed(const ProblemNode& root, std::string_view node_id, std::uint64_t seed) {
  if (root.id == node_id) return seed;
  for (std::size_t i = 0; i < root.children.size(); ++i) {
    const auto& c = root.children[i];
    if (auto s = node_seed(c, node_id, derive_seed(seed, c.type_id, i, 0))) return s;
  }
  return std::nullopt;
}

inline ProblemNode* find_parent(ProblemNode& root, std::string_view id) {
  for (auto& c : root.children) {
    if (c.id == id) return &root;
    if (auto* p = find_parent(c, id)) return p;
  }
  return nullptr;
}

namespace detail {

inline SolveResult run_leaf_once(const ProblemNode& node, const SolverDescriptor& d, const Backend& backend,
                                 std::uint64_t seed) {
  SolveResult r;
  r.solver_id = d.solver_id;
  r.backend_id = backend.backend_id;
  const auto& id = d.solver_id;
  if (id == "native-vrp") {
    VrpOptions opt;
    opt.max_iterations = count_setting(node, "max_iterations", opt.max_iterations);
    opt.perturbations = count_setting(node, "perturbations", opt.perturbations);
    auto sol = solve_vrp_native(std::get<VrpInstance>(node.payload), seed, opt);
    r.objective = static_cast<double>(sol.cost);
    r.feasible = sol.feasible;
    r.payload = std::move(sol);
  } else if (id == "native-local-search") {
    TspOptions opt;
    opt.max_iterations = count_setting(node, "max_iterations", opt.max_iterations);
    auto tour = solve_tsp_native(std::get<TspInstance>(node.payload), seed, opt);
    r.objective = static_cast<double>(tour.cost);
    r.feasible = true;
    r.payload = std::move(tour);
  } else if (id == "external-lkh" || id == "external-lkh-tsp") {
    const auto binary = backend.capabilities.value("binary_path", std::string{});
    const double limit = setting(node, "time_limit_s", 10.0);
    RoutingInstance inst = id == "external-lkh" ? RoutingInstance(std::get<VrpInstance>(node.payload))
                                                : RoutingInstance(std::get<TspInstance>(node.payload));
    auto sol = solve_external(inst, binary, limit, seed);
    if (auto* tour = std::get_if<Tour>(&sol)) {
      r.objective = static_cast<double>(tour->cost);
      r.feasible = true;
      r.payload = std::move(*tour);
    } else {
      auto& v = std::get<VrpSolution>(sol);
      r.objective = static_cast<double>(v.cost);
      r.feasible = v.feasible;
      r.payload = std::move(v);
    }
  } else if (id == "simulated-annealing") {
    AnnealingSchedule s;
    s.sweeps = count_setting(node, "sweeps", s.sweeps);
    s.beta_start = setting(node, "beta_start", s.beta_start);
    s.beta_end = setting(node, "beta_end", s.beta_end);
    s.trials = count_setting(node, "anneal_trials", s.trials);
    auto res = simulated_annealing(std::get<QuboModel>(node.payload), s, seed);
    r.objective = res.best.energy;
    r.feasible = true;
    r.payload = std::move(res.best);
  } else if (id == "qaoa") {
    QaoaOptions o;
    o.p = count_setting(node, "p", o.p);
    o.shots = count_setting(node, "shots", o.shots);
    o.restarts = count_setting(node, "restarts", o.restarts);
    o.max_evaluations = count_setting(node, "max_evaluations", o.max_evaluations);
    o.max_qubits = backend.capabilities.value("max_qubits", kDefaultQubitCap);
    auto res = qaoa_solve(std::get<QuboModel>(node.payload), o, seed);
    r.objective = res.best.energy;
    r.feasible = true;
    r.payload = std::move(res.best);
  } else if (id == "qubo-brute-force") {
    auto best = brute_force_qubo(std::get<QuboModel>(node.payload));
    r.objective = best.energy;
    r.feasible = true;
    r.payload = std::move(best);
  } else if (id == "dpll") {
    auto sat = dpll_solve(std::get<CnfFormula>(node.payload));
    r.feasible = sat.satisfiable;
    r.objective = sat.satisfiable ? 0.0 : std::numeric_limits<double>::infinity();
    r.payload = std::move(sat);
  } else {
    throw Error(Errc::NoCompatibleBackend, id + " has no executable implementation");
  }
  return r;
}

inline SolveResult compose_reformulation(const ProblemNode& node, const SolveResult& child) {
  SolveResult r;
  r.solver_id = *node.solver_id;
  const auto* sample = std::get_if<Sample>(&child.payload);
  if (!sample) throw Error(Errc::MissingSubResult, "reformulated child carries no sample");
  if (const auto* tsp = std::get_if<TspInstance>(&node.payload)) {
    const auto enc = tsp_to_qubo(*tsp, setting(node, "penalty_scale", kDefaultPenaltyScale)).encoding;
    if (auto tour = decode_tsp_sample(sample->bits, enc)) {
      r.objective = static_cast<double>(tour->cost);
      r.feasible = true;
      r.payload = std::move(*tour);
    }
  } else if (const auto* g = std::get_if<MaxCutGraph>(&node.payload)) {
    CutResult cut{sample->bits, cut_value(*g, sample->bits)};
    r.objective = cut.weight;
    r.feasible = true;
    r.payload = std::move(cut);
  } else {
    throw Error(Errc::TypeMismatch, "cannot decode a sample for " + node.type_id);
  }
  return r;
}

inline SolveResult compose_clusters(const VrpInstance& vrp, const ProblemNode& set) {
  const auto& cs = std::get<ClusterSet>(set.payload);
  const auto clustering = build_clustering(vrp, cs.kind, cs.clusters);
  std::vector<std::optional<RoutingSolution>> subs;
  for (const auto& c : set.children) {
    if (!c.result) throw Error(Errc::MissingSubResult, "cluster " + c.id + " has no result");
    if (const auto* t = std::get_if<Tour>(&c.result->payload); t && c.result->feasible) subs.emplace_back(*t);
    else if (const auto* v = std::get_if<VrpSolution>(&c.result->payload)) subs.emplace_back(*v);
    else subs.emplace_back(std::nullopt);
  }
  auto sol = recompose(vrp, clustering, subs);
  SolveResult r;
  r.solver_id = "compose-clusters";
  r.objective = static_cast<double>(sol.cost);
  r.feasible = sol.feasible;
  r.payload = std::move(sol);
  return r;
}

inline std::int64_t children_wall_ms(const ProblemNode& node) {
  std::int64_t total = 0;
  for (const auto& c : node.children) {
    if (c.result) total += c.result->wall_ms;
  }
  return total;
}

/// Runs the leaf, `trials` times for non-deterministic solvers, keeping the
/// best result. Marks the node Solved or Failed.
inline void execute_leaf(ProblemNode& node, const SolverDescriptor& d, std::size_t trials, std::uint64_t seed,
                         const ExecutionContext& ctx) {
  {
    TreeLock lock(ctx);
    transition(node, NodeState::Solving);
  }
  notify(ctx);
  try {
    check_cancel(ctx);
    const auto& backend = select_backend(d, metrics_of(node.payload), *ctx.backends);
    const std::size_t runs = d.deterministic ? 1 : std::max<std::size_t>(1, trials);
    Stopwatch watch;
    std::optional<SolveResult> best;
    std::vector<double> objectives;
    for (std::size_t t = 0; t < runs; ++t) {
      check_cancel(ctx);
      auto r = run_leaf_once(node, d, backend, derive_seed(seed, d.solver_id, 0, t));
      r.trial = t;
      objectives.push_back(r.objective);
      if (!best || better(r, *best)) best = std::move(r);
    }
    check_cancel(ctx);
    best->wall_ms = watch.elapsed_ms();
    if (runs > 1) best->trial_objectives = std::move(objectives);
    {
      TreeLock lock(ctx);
      node.result = std::move(best);
      transition(node, NodeState::Solved);
    }
    notify(ctx);
  } catch (const Error& e) {
    fail(node, e.what(), ctx);
    throw;
  }
}

inline void finish_composite(ProblemNode& node, SolveResult r, std::int64_t own_ms, const ExecutionContext& ctx) {
  r.wall_ms = own_ms + children_wall_ms(node);
  r.backend_id = local_backend(*ctx.backends).backend_id;
  {
    TreeLock lock(ctx);
    if (node.state == NodeState::ReadyToSolve) transition(node, NodeState::Solving);
    node.result = std::move(r);
    transition(node, NodeState::Solved);
  }
  notify(ctx);
}

/// Replaces the placeholder of a clustering node with per-cluster children.
inline void fan_out(ProblemNode& node, const SolverDescriptor& d, std::uint64_t seed, const ExecutionContext& ctx) {
  auto& set = node.children.at(0);
  const auto& vrp = std::get<VrpInstance>(node.payload);
  try {
    check_cancel(ctx);
    ClusteringResult clustering;
    if (d.solver_id == "kmeans-clustering") {
      const auto k = count_setting(node, "clusters", static_cast<std::size_t>(vrp.vehicles));
      clustering = kmeans_cluster(vrp, std::min(k, vrp.customers().size()), seed);
    } else {
      clustering = two_phase_cluster(vrp, seed);
    }
    std::vector<ProblemNode> kids;
    for (std::size_t i = 0; i < clustering.sub_instances.size(); ++i) {
      ProblemNode c;
      c.id = child_id(set, i);
      c.state = NodeState::ReadyToSolve;
      c.settings = set.settings;
      std::visit(
          [&](auto& inst) {
            using T = std::decay_t<decltype(inst)>;
            c.type_id = std::is_same_v<T, TspInstance> ? "tsp" : "vrp";
            c.payload = std::move(inst);
          },
          clustering.sub_instances[i]);
      kids.push_back(std::move(c));
    }
    {
      TreeLock lock(ctx);
      set.payload = ClusterSet{clustering.kind, clustering.clusters};
      set.children = std::move(kids);
      transition(set, NodeState::ReadyToSolve);
    }
    notify(ctx);
  } catch (const Error& e) {
    fail(node, e.what(), ctx);
    throw;
  }
}

}  // namespace detail

/// Why `node_id` cannot be executed right now, or nullopt when it can.
/// Never mutates the tree.
inline std::optional<std::string> step_blocker(const ProblemNode& root, std::string_view node_id,
                                               const SolverCatalog& catalog = SolverCatalog::builtin()) {
  const ProblemNode* node = find_node(root, node_id);
  if (!node) return "no node '" + std::string(node_id) + "'";
  if (!node->solver_id) return "node " + node->id + " has no solver selected";
  if (node->state != NodeState::ReadyToSolve && node->state != NodeState::Failed) {
    return "node " + node->id + " is " + std::string(state_name(node->state));
  }
  const auto solved = [](const ProblemNode& n) {
    return std::all_of(n.children.begin(), n.children.end(),
                       [](const ProblemNode& c) { return c.state == NodeState::Solved; });
  };
  const auto& d = catalog.get(*node->solver_id);
  switch (d.category) {
    case SolverCategory::Leaf: return std::nullopt;
    case SolverCategory::Reformulation:
      if (!solved(*node)) return "the reformulated child of " + node->id + " is unsolved";
      return std::nullopt;
    case SolverCategory::Composition:
      if (node->children.empty() || !solved(*node)) return "clusters of " + node->id + " are unsolved";
      return std::nullopt;
    case SolverCategory::Clustering: {
      const auto& set = node->children.at(0);
      if (set.state == NodeState::NeedsInput || set.state == NodeState::Solved) return std::nullopt;
      if (set.state == NodeState::ReadyToSolve && !set.children.empty() && solved(set)) return std::nullopt;
      return "clusters of " + node->id + " are unsolved";
    }
  }
  return std::nullopt;
}

/// Executes one step of the tree rooted at `root`:
///  - leaf: solves the node (`trials` repetitions for non-deterministic solvers);
///  - clustering, first call: fans the placeholder out into cluster children;
///  - clustering, later: composes the solved clusters into the node's result;
///  - cluster-set: composes its solved clusters;
///  - reformulation: decodes the solved child.
/// Prerequisite violations throw IllegalState without touching the tree;
/// solver errors leave the node Failed and are rethrown.
inline void execute_step(ProblemNode& root, std::string_view node_id, std::size_t trials, std::uint64_t seed,
                         const ExecutionContext& ctx) {
  ProblemNode* node = find_node(root, node_id);
  if (!node) throw Error(Errc::NotFound, "node '" + std::string(node_id) + "'");
  if (auto blocker = step_blocker(root, node_id, *ctx.catalog)) throw Error(Errc::IllegalState, *blocker);
  if (node->state == NodeState::Failed) {
    detail::TreeLock lock(ctx);
    reset_node(*node);
  }
  const auto& d = ctx.catalog->get(*node->solver_id);
  const std::uint64_t s = *node_seed(root, node->id, seed);

  switch (d.category) {
    case SolverCategory::Leaf:
      detail::execute_leaf(*node, d, trials, s, ctx);
      return;
    case SolverCategory::Reformulation: {
      Stopwatch watch;
      try {
        auto r = detail::compose_reformulation(*node, *node->children.at(0).result);
        detail::finish_composite(*node, std::move(r), watch.elapsed_ms(), ctx);
      } catch (const Error& e) {
        detail::fail(*node, e.what(), ctx);
        throw;
      }
      return;
    }
    case SolverCategory::Composition: {
      ProblemNode* parent = find_parent(root, node->id);
      if (!parent) throw Error(Errc::IllegalState, "cluster-set " + node->id + " has no parent");
      Stopwatch watch;
      try {
        auto r = detail::compose_clusters(std::get<VrpInstance>(parent->payload), *node);
        detail::finish_composite(*node, std::move(r), watch.elapsed_ms(), ctx);
      } catch (const Error& e) {
        detail::fail(*node, e.what(), ctx);
        throw;
      }
      return;
    }
    case SolverCategory::Clustering: {
      auto& set = node->children.at(0);
      if (set.state == NodeState::NeedsInput) {
        detail::fan_out(*node, d, derive_seed(s, "cluster-set", 0, 0), ctx);
        return;
      }
      if (set.state != NodeState::Solved) execute_step(root, set.id, trials, seed, ctx);
      Stopwatch watch;
      auto r = *set.result;
      r.solver_id = d.solver_id;
      r.trial = 0;
      detail::finish_composite(*node, std::move(r), watch.elapsed_ms(), ctx);
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Complete runs
// ---------------------------------------------------------------------------

namespace detail {

inline void solve_subtree(ProblemNode& root, ProblemNode& node, const SolutionPath& path, std::size_t depth,
                          std::size_t trials, std::uint64_t seed, const ExecutionContext& ctx) {
  if (depth >= path.size()) throw Error(Errc::InvalidPath, "path too short for node " + node.id);
  check_cancel(ctx);
  {
    TreeLock lock(ctx);
    select_solver(node, path[depth].solver_id, *ctx.catalog);
  }
  notify(ctx);
  const auto& d = ctx.catalog->get(path[depth].solver_id);
  const auto child_failed = [&](const std::exception_ptr& err, const std::string& child) {
    try {
      std::rethrow_exception(err);
    } catch (const Error& e) {
      fail(node, "sub-problem " + child + " failed: " + e.what(), ctx);
      throw;
    }
  };
  switch (d.category) {
    case SolverCategory::Leaf:
      execute_leaf(node, d, trials, seed, ctx);
      return;
    case SolverCategory::Reformulation: {
      auto& child = node.children.at(0);
      try {
        solve_subtree(root, child, path, depth + 1, trials, derive_seed(seed, child.type_id, 0, 0), ctx);
      } catch (const Error&) {
        child_failed(std::current_exception(), child.id);
      }
      Stopwatch watch;
      try {
        auto r = compose_reformulation(node, *child.result);
        finish_composite(node, std::move(r), watch.elapsed_ms(), ctx);
      } catch (const Error& e) {
        fail(node, e.what(), ctx);
        throw;
      }
      return;
    }
    case SolverCategory::Clustering: {
      const auto set_seed = derive_seed(seed, "cluster-set", 0, 0);
      fan_out(node, d, set_seed, ctx);
      auto& set = node.children.at(0);
      auto errors = parallel_for(set.children.size(), *ctx.threads, [&](std::size_t i) {
        auto& c = set.children[i];
        solve_subtree(root, c, path, depth + 1, trials, derive_seed(set_seed, c.type_id, i, 0), ctx);
      });
      for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i]) {
          fail(set, "cluster " + set.children[i].id + " failed", ctx);
          child_failed(errors[i], set.children[i].id);
        }
      }
      Stopwatch watch;
      try {
        auto r = compose_clusters(std::get<VrpInstance>(node.payload), set);
        finish_composite(set, r, watch.elapsed_ms(), ctx);
        r.solver_id = d.solver_id;
        finish_composite(node, std::move(r), watch.elapsed_ms(), ctx);
      } catch (const Error& e) {
        fail(node, e.what(), ctx);
        throw;
      }
      return;
    }
    case SolverCategory::Composition:
      throw Error(Errc::InvalidPath, "composition steps are not selectable");
  }
}

}  // namespace detail

/// Validates `path` against the root's strategy, rebuilds the tree along it
/// and solves depth-first, cluster sub-trees in parallel. Returns the root
/// result; a failure leaves the partial tree in place and is rethrown.
inline SolveResult run_complete(ProblemNode& root, const SolutionPath& path, std::size_t trials, std::uint64_t seed,
                                const ExecutionContext& ctx) {
  const auto& type = problem_type(root.type_id);
  if (auto violation = ctx.strategies->validate_path(type.strategy_id, path)) {
    throw Error(Errc::InvalidPath, *violation);
  }
  {
    detail::TreeLock lock(ctx);
    root.children.clear();
    root.solver_id.reset();
    root.result.reset();
    root.diagnostic.reset();
    root.state = NodeState::ReadyToSolve;
  }
  Stopwatch watch;
  detail::solve_subtree(root, root, path, 0, trials, seed, ctx);
  {
    detail::TreeLock lock(ctx);
    root.result->wall_ms = watch.elapsed_ms();
  }
  return *root.result;
}

/// Resets the node and every ancestor above it so the node can be solved
/// again (possibly with another solver).
inline void reset_for_resolve(ProblemNode& root, std::string_view node_id) {
  ProblemNode* node = find_node(root, node_id);
  if (!node) throw Error(Errc::NotFound, "node '" + std::string(node_id) + "'");
  for (ProblemNode* n = node; n; n = find_parent(root, n->id)) {
    if (n->state == NodeState::Solving) throw Error(Errc::IllegalState, "node " + n->id + " is Solving");
    reset_node(*n);
  }
}

/// The path spelled out by the solvers currently selected along the first
/// branch of the tree. Throws IllegalState while a selection is missing.
inline std::string selected_path_spec(const ProblemNode& root, const SolverCatalog& catalog = SolverCatalog::builtin()) {
  std::string spec;
  const ProblemNode* node = &root;
  for (;;) {
    if (!node->solver_id) throw Error(Errc::IllegalState, "node " + node->id + " has no solver selected");
    if (!spec.empty()) spec += '/';
    spec += *node->solver_id;
    const auto& d = catalog.get(*node->solver_id);
    if (d.category == SolverCategory::Leaf) return spec;
    if (d.category == SolverCategory::Reformulation) {
      node = &node->children.at(0);
      continue;
    }
    const auto& set = node->children.at(0);
    if (set.children.empty()) {
      throw Error(Errc::IllegalState, "clusters of " + node->id + " do not exist yet; give an explicit path");
    }
    node = &set.children.front();
  }
}

/// Seed of whole-run repetition `trial` (bench, compare, CLI --trials).
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) { return derive_seed(seed, "trial", 0, trial); }

// ---------------------------------------------------------------------------
// Multi-path comparison
// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string path;
  std::size_t trial = 0;
  double objective = std::numeric_limits<double>::infinity();
  bool feasible = false;
  std::int64_t wall_ms = 0;
  std::uint64_t seed = 0;
  std::string error;
};

struct PathSummary {
  std::string path;
  std::size_t rows = 0;
  std::size_t feasible_rows = 0;
  std::optional<double> best_objective;
  std::optional<double> median_objective;
  std::optional<double> mean_objective;
  double median_wall_ms = 0.0;
  bool simulated_quantum = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::vector<PathSummary> paths;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline bool uses_simulated_quantum(std::string_view path_spec) {
  return path_spec.find("qaoa") != std::string_view::npos ||
         path_spec.find("simulated-annealing") != std::string_view::npos;
}

/// Per-path statistics recomputed from the raw rows, in first-seen order.
inline std::vector<PathSummary> summarize(const std::vector<ComparisonRow>& rows) {
  std::vector<PathSummary> out;
  for (const auto& row : rows) {
    if (std::none_of(out.begin(), out.end(), [&](const auto& s) { return s.path == row.path; })) {
      PathSummary s;
      s.path = row.path;
      out.push_back(std::move(s));
    }
  }
  for (auto& s : out) {
    std::vector<double> costs, walls;
    for (const auto& row : rows) {
      if (row.path != s.path) continue;
      ++s.rows;
      walls.push_back(static_cast<double>(row.wall_ms));
      if (row.feasible) costs.push_back(row.objective);
    }
    s.feasible_rows = costs.size();
    if (!costs.empty()) {
      s.best_objective = *std::min_element(costs.begin(), costs.end());
      s.median_objective = median(costs);
      double sum = 0;
      for (double c : costs) sum += c;
      s.mean_objective = sum / static_cast<double>(costs.size());
    }
    s.median_wall_ms = median(walls);
    s.simulated_quantum = uses_simulated_quantum(s.path);
  }
  return out;
}

/// Clones the root per (path, trial) and runs them concurrently. Failures
/// become infeasible rows; no winner is picked.
inline ComparisonReport run_parallel(const ProblemNode& root, const std::vector<SolutionPath>& paths,
                                     std::size_t trials, std::uint64_t seed, const ExecutionContext& ctx) {
  if (paths.size() < 2) throw Error(Errc::InvalidArgument, "compare needs at least two paths");
  if (trials < 1) throw Error(Errc::InvalidArgument, "trials must be >= 1");
  const auto& type = problem_type(root.type_id);
  for (const auto& p : paths) {
    if (auto violation = ctx.strategies->validate_path(type.strategy_id, p)) {
      throw Error(Errc::InvalidPath, path_to_string(p) + ": " + *violation);
    }
  }
  ComparisonReport report;
  report.rows.resize(paths.size() * trials);
  detail::parallel_for(report.rows.size(), *ctx.threads, [&](std::size_t job) {
    const auto& path = paths[job / trials];
    const std::size_t t = job % trials;
    auto& row = report.rows[job];
    row.path = path_to_string(path);
    row.trial = t;
    row.seed = trial_seed(seed, t);
    ProblemNode clone = root;
    ExecutionContext local = ctx;
    local.tree_mutex = nullptr;
    local.on_change = nullptr;
    Stopwatch watch;
    try {
      const auto r = run_complete(clone, path, 1, row.seed, local);
      row.objective = r.objective;
      row.feasible = r.feasible;
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.wall_ms = watch.elapsed_ms();
  });
  report.paths = summarize(report.rows);
  return report;
}

inline Json comparison_to_json(const ComparisonReport& r) {
  const auto num = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"path", row.path},
           {"trial", row.trial},
           {"objective", std::isfinite(row.objective) ? Json(row.objective) : Json(nullptr)},
           {"feasible", row.feasible},
           {"wall_ms", row.wall_ms},
           {"seed", row.seed}};
    if (!row.error.empty()) j["error"] = row.error;
    rows.push_back(std::move(j));
  }
  Json paths = Json::array();
  for (const auto& s : r.paths) {
    paths.push_back({{"path", s.path},
                     {"rows", s.rows},
                     {"feasible_rows", s.feasible_rows},
                     {"best_objective", num(s.best_objective)},
                     {"median_objective", num(s.median_objective)},
                     {"mean_objective", num(s.mean_objective)},
                     {"median_wall_ms", s.median_wall_ms},
                     {"simulated_quantum", s.simulated_quantum}});
  }
  return {{"rows", std::move(rows)}, {"paths", std::move(paths)}};
}

}  // namespace metasolve

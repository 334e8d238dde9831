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

// HTTP/JSON service over the problem store and the orchestrator.
//
// Routes:
//   GET   /problem-types
//   GET   /strategies/{id}                  strategy document, refs inlined too
//   GET   /strategies/{id}/paths            ?max_clusterings=&available_only=
//   POST  /problems/{type}                  body: instance text -> 201
//   GET   /problems/{type}/{id}
//   PATCH /problems/{type}/{id}/nodes/{node} {solver_id?, settings?, reset?}
//   POST  /problems/{type}/{id}/execute     {mode, node?, path?, trials?, seed?} -> 202
//   GET   /problems/{type}/{id}/suggestions ?node=&speed_weight=
//   POST  /problems/{type}/{id}/compare     {paths, trials?, seed?} -> 202
//   GET   /problems/{type}/{id}/compare/{cid}
// Every non-2xx response carries {"status", "code", "message"}.

#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "metasolve/orchestrator.hpp"
#include "metasolve/problem_model.hpp"
#include "metasolve/strategy.hpp"

namespace metasolve {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_dir = "metasolve-store";
  std::string backend_registry;  // path to a registry document; empty = defaults
  std::string external_binary;   // overrides METASOLVE_LKH_BINARY for the default registry
  std::string strategy_dir;      // extra strategy documents

  /// Reads a JSON config file, then applies METASOLVE_HOST, METASOLVE_PORT,
  /// METASOLVE_STORE_DIR, METASOLVE_BACKENDS and METASOLVE_LKH_BINARY.
  static ServiceConfig load(const std::string& path) {
    ServiceConfig c;
    if (!path.empty()) {
      std::ifstream in(path);
      if (!in) throw Error(Errc::InvalidArgument, "cannot read config file " + path);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::exception& e) {
        throw Error(Errc::ParseError, "config " + path + ": " + e.what());
      }
      if (!j.is_object()) throw Error(Errc::InvalidArgument, "config must be a JSON object");
      static const std::set<std::string> known{"host", "port", "store_dir", "backend_registry", "external_binary",
                                               "strategy_dir"};
      for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw Error(Errc::InvalidArgument, "unknown config key '" + k + "'");
      }
      try {
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        c.store_dir = j.value("store_dir", c.store_dir);
        c.backend_registry = j.value("backend_registry", c.backend_registry);
        c.external_binary = j.value("external_binary", c.external_binary);
        c.strategy_dir = j.value("strategy_dir", c.strategy_dir);
      } catch (const Json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("config: ") + e.what());
      }
    }
    if (const char* v = std::getenv("METASOLVE_HOST")) c.host = v;
    if (const char* v = std::getenv("METASOLVE_PORT")) {
      try {
        c.port = std::stoi(v);
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "METASOLVE_PORT is not a number");
      }
    }
    if (const char* v = std::getenv("METASOLVE_STORE_DIR")) c.store_dir = v;
    if (const char* v = std::getenv("METASOLVE_BACKENDS")) c.backend_registry = v;
    if (const char* v = std::getenv(kExternalBinaryEnv)) c.external_binary = v;
    if (c.port < 0 || c.port > 65535) throw Error(Errc::InvalidArgument, "port out of range");
    if (c.store_dir.empty()) throw Error(Errc::InvalidArgument, "store_dir must not be empty");
    return c;
  }

  BackendRegistry make_registry() const {
    if (backend_registry.empty()) {
      return BackendRegistry::defaults(external_binary.empty() ? std::nullopt : std::optional(external_binary));
    }
    std::ifstream in(backend_registry);
    if (!in) throw Error(Errc::InvalidArgument, "cannot read backend registry " + backend_registry);
    try {
      return BackendRegistry::from_json(Json::parse(in));
    } catch (const Json::exception& e) {
      throw Error(Errc::ParseError, "backend registry: " + std::string(e.what()));
    }
  }
};

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

/// Trees persisted as <store_dir>/<id>.json, loaded on first access. Each
/// entry has its own mutex: one writer per tree, other trees unaffected.
class ProblemStore {
 public:
  struct Entry {
    std::mutex mu;
    ProblemNode tree;
    bool busy = false;  // an execution is running
    std::atomic<bool> cancel{false};
  };

  explicit ProblemStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  static bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '-' || c == '_'; });
  }

  std::shared_ptr<Entry> create(ProblemNode tree) {
    auto e = std::make_shared<Entry>();
    e->tree = std::move(tree);
    persist(*e);
    std::lock_guard lock(mu_);
    entries_[e->tree.id] = e;
    return e;
  }

  /// nullptr when neither cached nor on disk.
  std::shared_ptr<Entry> find(const std::string& id) {
    if (!valid_id(id)) return nullptr;
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(id); it != entries_.end()) return it->second;
    const auto file = dir_ / (id + ".json");
    if (!std::filesystem::exists(file)) return nullptr;
    std::ifstream in(file);
    auto e = std::make_shared<Entry>();
    e->tree = node_from_json(Json::parse(in));
    // A run cut short by a restart cannot resume.
    std::function<void(ProblemNode&)> settle = [&](ProblemNode& n) {
      if (n.state == NodeState::Solving) {
        n.state = NodeState::Failed;
        n.diagnostic = "interrupted by a service restart";
      }
      for (auto& c : n.children) settle(c);
    };
    settle(e->tree);
    entries_[id] = e;
    return e;
  }

  /// Caller holds e.mu (or owns e exclusively).
  void persist(const Entry& e) const {
    const auto file = dir_ / (e.tree.id + ".json");
    const auto tmp = dir_ / (e.tree.id + ".json.tmp");
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << node_to_json(e.tree).dump();
    }
    std::filesystem::rename(tmp, file);
  }

  void cancel_all() {
    std::lock_guard lock(mu_);
    for (auto& [id, e] : entries_) e->cancel = true;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

/// Fixed-size worker pool for executions and comparisons.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t n) {
    for (std::size_t i = 0; i < std::max<std::size_t>(1, n); ++i) {
      workers_.emplace_back([this] { loop(); });
    }
  }
  ~WorkerPool() { shutdown(); }

  void submit(std::function<void()> job) {
    {
      std::lock_guard lock(mu_);
      jobs_.push_back(std::move(job));
    }
    cv_.notify_one();
  }

  void shutdown() {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  std::vector<std::thread> workers_;
  bool stopping_ = false;
};

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

inline int http_status(Errc code) {
  switch (code) {
    case Errc::ParseError:
    case Errc::UnsupportedEdgeWeightType:
    case Errc::HeaderMismatch:
    case Errc::IndexOutOfRange:
    case Errc::SelfLoop:
    case Errc::DimensionMismatch:
      return 400;
    case Errc::UnknownProblemType:
    case Errc::UnknownStrategy:
    case Errc::NotFound:
      return 404;
    case Errc::IllegalState:
    case Errc::IllegalTransition:
      return 409;
    case Errc::InvalidArgument:
    case Errc::InvalidPath:
    case Errc::TypeMismatch:
    case Errc::TooLargeForEncoding:
    case Errc::CyclicStrategyReference:
      return 422;
    default:
      return 500;
  }
}

class Service {
 public:
  explicit Service(ServiceConfig config)
      : config_(std::move(config)),
        backends_(config_.make_registry()),
        store_(config_.store_dir),
        pool_(backends_.max_threads()),
        threads_(std::make_shared<ThreadBudget>(backends_.max_threads())) {
    strategies_ = StrategyRegistry::builtin();
    if (!config_.strategy_dir.empty()) strategies_.load_directory(config_.strategy_dir);
    // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }

  ~Service() { stop(); }

  /// False when the port cannot be bound (busy or not permitted).
  bool bind() {
    if (config_.port == 0) {
      const int p = server_.bind_to_any_port(config_.host);
      if (p < 0) return false;
      config_.port = p;
      return true;
    }
    return server_.bind_to_port(config_.host, config_.port);
  }

  /// Blocks until stop().
  void listen() { server_.listen_after_bind(); }

  /// Binds and serves on a background thread; returns false if binding fails.
  bool start_background() {
    if (!bind()) return false;
    thread_ = std::thread([this] { listen(); });
    server_.wait_until_ready();
    return true;
  }

  void stop() {
    store_.cancel_all();
    server_.stop();
    if (thread_.joinable()) thread_.join();
    pool_.shutdown();
  }

  int port() const { return config_.port; }
  const BackendRegistry& backends() const { return backends_; }

 private:
  using Req = httplib::Request;
  using Res = httplib::Response;

  static void send(Res& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(Res& res, int status, std::string_view code, const std::string& message, int line = 0) {
    Json body{{"status", status}, {"code", code}, {"message", message}};
    if (line > 0) body["line"] = line;
    send(res, status, body);
  }

  static void send_error(Res& res, const Error& e, std::optional<int> status = std::nullopt) {
    send_error(res, status.value_or(http_status(e.code())), errc_name(e.code()), e.detail(), e.line());
  }

  /// Wraps a handler so every failure becomes an ApiError body.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const Req& req, Res& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const Json::exception& e) {
        send_error(res, 422, "InvalidArgument", std::string("malformed JSON body: ") + e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "Internal", e.what());
      }
    };
  }

  static Json body_json(const Req& req) {
    if (req.body.empty()) return Json::object();
    auto j = Json::parse(req.body);
    if (!j.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
    return j;
  }

  /// Entry for {type}/{id}; NotFound when unknown or of another type.
  std::shared_ptr<ProblemStore::Entry> entry(const std::string& type, const std::string& id) {
    problem_type(type);
    auto e = store_.find(id);
    if (!e) throw Error(Errc::NotFound, "problem '" + id + "'");
    std::lock_guard lock(e->mu);
    if (e->tree.type_id != type) throw Error(Errc::NotFound, "problem '" + id + "' is not of type " + type);
    return e;
  }

  std::string location(const std::string& type, const std::string& id) const {
    return "/problems/" + type + "/" + id;
  }

  SolutionPath path_from_json(const std::string& strategy_id, const Json& j) const {
    std::string spec;
    if (j.is_string()) {
      spec = j.get<std::string>();
    } else if (j.is_array()) {
      for (const auto& s : j) {
        if (!spec.empty()) spec += '/';
        if (s.is_string()) spec += s.get<std::string>();
        else spec += s.at("step_id").get<std::string>() + ":" + s.at("solver_id").get<std::string>();
      }
    } else {
      throw Error(Errc::InvalidPath, "a path is a string or a list of solver ids");
    }
    return strategies_.parse_path_spec(strategy_id, spec);
  }

  void routes() {
    server_.Get("/problem-types", guarded([](const Req&, Res& res) {
      Json list = Json::array();
      for (const auto& t : problem_types()) {
        list.push_back({{"id", t.type_id}, {"name", t.display_name}, {"format", t.format_id},
                        {"strategy", t.strategy_id}});
      }
      send(res, 200, list);
    }));

    server_.Get(R"(/strategies/([^/]+))", guarded([this](const Req& req, Res& res) {
      const auto id = req.matches[1].str();
      send(res, 200, {{"strategy", strategy_to_json(strategies_.get(id))},
                      {"inlined", strategy_to_json(strategies_.inline_refs(id))}});
    }));

    server_.Get(R"(/strategies/([^/]+)/paths)", guarded([this](const Req& req, Res& res) {
      PathConstraints c;
      if (req.has_param("max_clusterings")) c.max_clusterings = std::stoul(req.get_param_value("max_clusterings"));
      c.available_only = req.get_param_value("available_only") == "true";
      Json list = Json::array();
      for (const auto& p : strategies_.enumerate_paths(req.matches[1].str(), c)) {
        Json steps = Json::array();
        for (const auto& s : p) steps.push_back({{"step_id", s.step_id}, {"solver_id", s.solver_id}});
        list.push_back({{"spec", path_to_string(p)}, {"steps", std::move(steps)}});
      }
      send(res, 200, list);
    }));

    server_.Post(R"(/problems/([^/]+))", guarded([this](const Req& req, Res& res) {
      const auto type = req.matches[1].str();
      problem_type(type);
      std::string text = req.body;
      if (req.get_header_value("Content-Type").find("application/json") != std::string::npos) {
        text = body_json(req).at("input").get<std::string>();
      }
      ProblemNode root;
      try {
        root = create_problem(type, text);
      } catch (const Error& e) {
        send_error(res, e, e.code() == Errc::UnknownProblemType ? 404 : 400);
        return;
      }
      auto e = store_.create(std::move(root));
      std::lock_guard lock(e->mu);
      res.set_header("Location", location(type, e->tree.id));
      send(res, 201, node_to_json(e->tree));
    }));

    server_.Get(R"(/problems/([^/]+)/([^/]+))", guarded([this](const Req& req, Res& res) {
      auto e = entry(req.matches[1].str(), req.matches[2].str());
      std::lock_guard lock(e->mu);
      send(res, 200, node_to_json(e->tree));
    }));

    server_.Patch(R"(/problems/([^/]+)/([^/]+)/nodes/([^/]+))", guarded([this](const Req& req, Res& res) {
      auto e = entry(req.matches[1].str(), req.matches[2].str());
      const auto body = body_json(req);
      // malformed requests are 422 whatever the node state
      if (body.contains("settings")) {
        const auto& s = body["settings"];
        if (!s.is_object()) throw Error(Errc::InvalidArgument, "settings must be an object");
        for (const auto& [k, v] : s.items()) {
          if (!v.is_number() && !v.is_string()) {
            throw Error(Errc::InvalidArgument, "setting '" + k + "' must be a string or a number");
          }
        }
      }
      if (body.contains("solver_id") && !body["solver_id"].is_string()) {
        throw Error(Errc::InvalidArgument, "solver_id must be a string");
      }
      std::lock_guard lock(e->mu);
      if (e->busy) throw Error(Errc::IllegalState, "an execution is running on this problem");
      ProblemNode updated = e->tree;
      const auto node_id = req.matches[3].str();
      ProblemNode* node = find_node(updated, node_id);
      if (!node) throw Error(Errc::NotFound, "node '" + node_id + "'");
      if (body.value("reset", false)) reset_for_resolve(updated, node_id);
      const bool changes = body.contains("solver_id") || body.contains("settings");
      if (changes && node->state != NodeState::ReadyToSolve && node->state != NodeState::NeedsInput) {
        // A re-sent identical request stays a no-op.
        bool same = !body.contains("solver_id") || (node->solver_id && *node->solver_id == body["solver_id"]);
        if (body.contains("settings")) {
          for (const auto& [k, v] : body["settings"].items()) same = same && node->settings.count(k) && node->settings[k] == v;
        }
        if (!same) throw Error(Errc::IllegalState, "node " + node->id + " is " + std::string(state_name(node->state)));
      } else {
        if (body.contains("settings")) {
          for (const auto& [k, v] : body["settings"].items()) node->settings[k] = v;
        }
        if (body.contains("solver_id")) {
          select_solver(*node, body["solver_id"].get<std::string>(), *strategies_catalog());
        }
      }
      if (updated != e->tree) {
        e->tree = std::move(updated);
        store_.persist(*e);
      }
      send(res, 200, node_to_json(e->tree));
    }));

    server_.Post(R"(/problems/([^/]+)/([^/]+)/execute)", guarded([this](const Req& req, Res& res) {
      const auto type = req.matches[1].str();
      auto e = entry(type, req.matches[2].str());
      const auto body = body_json(req);
      const auto mode = body.value("mode", std::string{});
      if (mode != "stepwise" && mode != "complete") {
        throw Error(Errc::InvalidArgument, "mode must be 'stepwise' or 'complete'");
      }
      const std::size_t trials = body.value("trials", std::size_t{1});
      const std::uint64_t seed = body.value("seed", std::uint64_t{1});
      if (trials < 1) throw Error(Errc::InvalidArgument, "trials must be >= 1");
      std::lock_guard lock(e->mu);
      if (e->busy) throw Error(Errc::IllegalState, "an execution is already running on this problem");
      std::function<void()> job;
      if (mode == "stepwise") {
        const auto node_id = body.value("node", e->tree.id);
        if (!find_node(e->tree, node_id)) throw Error(Errc::NotFound, "node '" + node_id + "'");
        if (auto blocker = step_blocker(e->tree, node_id, *strategies_catalog())) {
          throw Error(Errc::IllegalState, *blocker);
        }
        job = [this, e, node_id, trials, seed] {
          auto ctx = context(*e);
          try {
            execute_step(e->tree, node_id, trials, seed, ctx);
          } catch (const Error&) {
            // diagnostic is on the node
          }
        };
      } else {
        const auto& strategy_id = problem_type(type).strategy_id;
        const auto path = body.contains("path") ? path_from_json(strategy_id, body["path"])
                                                : strategies_.parse_path_spec(strategy_id, selected_path_spec(e->tree, *strategies_catalog()));
        job = [this, e, path, trials, seed] {
          auto ctx = context(*e);
          try {
            run_complete(e->tree, path, trials, seed, ctx);
          } catch (const Error&) {
          }
        };
      }
      e->busy = true;
      e->cancel = false;
      pool_.submit([this, e, job] {
        job();
        std::lock_guard l(e->mu);
        e->busy = false;
        store_.persist(*e);
      });
      res.set_header("Location", location(type, e->tree.id));
      send(res, 202, {{"status", "accepted"}, {"location", location(type, e->tree.id)}});
    }));

    server_.Get(R"(/problems/([^/]+)/([^/]+)/suggestions)", guarded([this](const Req& req, Res& res) {
      auto e = entry(req.matches[1].str(), req.matches[2].str());
      double w = 0.5;
      if (req.has_param("speed_weight")) {
        try {
          w = std::stod(req.get_param_value("speed_weight"));
        } catch (const std::exception&) {
          throw Error(Errc::InvalidArgument, "speed_weight must be a number in [0, 1]");
        }
      }
      std::lock_guard lock(e->mu);
      const auto node_id = req.has_param("node") ? req.get_param_value("node") : e->tree.id;
      const ProblemNode* node = find_node(e->tree, node_id);
      if (!node) throw Error(Errc::NotFound, "node '" + node_id + "'");
      auto j = suggestion_to_json(suggest(*node, w, backends_, *strategies_catalog()));
      j["node"] = node_id;
      j["speed_weight"] = w;
      send(res, 200, j);
    }));

    server_.Post(R"(/problems/([^/]+)/([^/]+)/compare)", guarded([this](const Req& req, Res& res) {
      const auto type = req.matches[1].str();
      auto e = entry(type, req.matches[2].str());
      const auto body = body_json(req);
      const auto& strategy_id = problem_type(type).strategy_id;
      if (!body.contains("paths") || !body["paths"].is_array()) {
        throw Error(Errc::InvalidArgument, "paths must be a list");
      }
      std::vector<SolutionPath> paths;
      for (const auto& p : body["paths"]) paths.push_back(path_from_json(strategy_id, p));
      if (paths.size() < 2) throw Error(Errc::InvalidArgument, "compare needs at least two paths");
      const std::size_t trials = body.value("trials", std::size_t{1});
      const std::uint64_t seed = body.value("seed", std::uint64_t{1});
      if (trials < 1) throw Error(Errc::InvalidArgument, "trials must be >= 1");
      ProblemNode snapshot;
      {
        std::lock_guard lock(e->mu);
        snapshot = e->tree;
      }
      std::string cid;
      {
        std::lock_guard lock(compare_mu_);
        cid = "c" + std::to_string(++compare_counter_);
        comparisons_[snapshot.id + "/" + cid] = {{"status", "running"}};
      }
      pool_.submit([this, snapshot, paths, trials, seed, key = snapshot.id + "/" + cid] {
        ExecutionContext ctx(backends_);
        ctx.strategies = &strategies_;
        ctx.catalog = strategies_catalog();
        ctx.threads = threads_;
        Json result;
        try {
          result = {{"status", "done"}, {"report", comparison_to_json(run_parallel(snapshot, paths, trials, seed, ctx))}};
        } catch (const Error& err) {
          result = {{"status", "failed"}, {"code", errc_name(err.code())}, {"message", err.detail()}};
        }
        std::lock_guard lock(compare_mu_);
        comparisons_[key] = std::move(result);
      });
      const auto where = location(type, snapshot.id) + "/compare/" + cid;
      res.set_header("Location", where);
      send(res, 202, {{"status", "accepted"}, {"id", cid}, {"location", where}});
    }));

    server_.Get(R"(/problems/([^/]+)/([^/]+)/compare/([^/]+))", guarded([this](const Req& req, Res& res) {
      auto e = entry(req.matches[1].str(), req.matches[2].str());
      std::lock_guard lock(compare_mu_);
      auto it = comparisons_.find(req.matches[2].str() + "/" + req.matches[3].str());
      if (it == comparisons_.end()) throw Error(Errc::NotFound, "comparison '" + req.matches[3].str() + "'");
      send(res, 200, it->second);
    }));

    server_.set_error_handler([](const Req&, Res& res) {
      if (res.body.empty()) {
        send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError",
                   "no route for this method and path");
      }
    });
  }

  const SolverCatalog* strategies_catalog() const { return &strategies_.catalog(); }

  ExecutionContext context(ProblemStore::Entry& e) {
    ExecutionContext ctx(backends_);
    ctx.strategies = &strategies_;
    ctx.catalog = strategies_catalog();
    ctx.tree_mutex = &e.mu;
    ctx.cancel = &e.cancel;
    ctx.threads = threads_;
    // on_change runs outside the tree lock; persisting takes it.
    ctx.on_change = [this, &e] {
      std::lock_guard lock(e.mu);
      store_.persist(e);
    };
    return ctx;
  }

  ServiceConfig config_;
  BackendRegistry backends_;
  StrategyRegistry strategies_;
  ProblemStore store_;
  WorkerPool pool_;
  std::shared_ptr<ThreadBudget> threads_;
  httplib::Server server_;
  std::thread thread_;
  std::mutex compare_mu_;
  std::size_t compare_counter_ = 0;
  std::map<std::string, Json> comparisons_;
};

}  // namespace metasolve

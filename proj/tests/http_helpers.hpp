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

// Small JSON-over-HTTP client shared by the service test and the acceptance run.

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace testhttp {

struct Reply {
  int status = 0;
  nlohmann::json body;
  std::string location;
};

class Client {
 public:
  explicit Client(int port) : cli_("127.0.0.1", port) { cli_.set_read_timeout(60, 0); }

  Reply get(const std::string& path) { return wrap(cli_.Get(path)); }
  Reply post(const std::string& path, const nlohmann::json& body) {
    return wrap(cli_.Post(path, body.dump(), "application/json"));
  }
  Reply post_text(const std::string& path, const std::string& text) {
    return wrap(cli_.Post(path, text, "text/plain"));
  }
  Reply patch(const std::string& path, const nlohmann::json& body) {
    return wrap(cli_.Patch(path, body.dump(), "application/json"));
  }

  // A 409 caused by a finishing background job is retried.
  Reply when_idle(const std::function<Reply()>& call) {
    for (int i = 0;; ++i) {
      auto r = call();
      const bool busy = r.status == 409 && r.body.value("message", "").find("is running") != std::string::npos;
      const bool running = r.status == 409 && r.body.value("message", "").find("already running") != std::string::npos;
      if ((!busy && !running) || i > 600) return r;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }

  // Polls GET path until pred holds or the timeout passes.
  bool wait_for(const std::string& path, const std::function<bool(const nlohmann::json&)>& pred,
                int timeout_s = 120) {
    const auto end = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_s);
    while (std::chrono::steady_clock::now() < end) {
      const auto r = get(path);
      if (r.status == 200 && pred(r.body)) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return false;
  }

 private:
  static Reply wrap(const httplib::Result& res) {
    Reply r;
    if (!res) return r;
    r.status = res->status;
    r.location = res->get_header_value("Location");
    r.body = nlohmann::json::parse(res->body, nullptr, false);
    return r;
  }

  httplib::Client cli_;
};

}  // namespace testhttp

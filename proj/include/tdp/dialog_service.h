// Copyright 2026 The TDP Authors. All rights reserved.
//
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

// Live chat sessions for human evaluation.
//
// DialogService holds the session logic and persistence and is usable
// without HTTP; HttpFrontend exposes it as a JSON API:
//
//   POST /api/sessions               {"domain", "agent_kind", "judge"?}
//   POST /api/sessions/{id}/messages {"text"} or {"frame"}
//   POST /api/sessions/{id}/rating   {"rating": 1..5}
//   GET  /api/sessions/{id}
//   GET  /api/report
//   GET  /api/export[?agent_kind=...]   JSON lines
//
// Every state change is appended to <data_dir>/events.jsonl; a new service
// over the same directory replays the log to rebuild its sessions.

#ifndef TDP_DIALOG_SERVICE_H_
#define TDP_DIALOG_SERVICE_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdp/corpus.h"
#include "tdp/dialogue_agents.h"
#include "tdp/errors.h"
#include "tdp/eval_harness.h"
#include "tdp/knowledge_base.h"
#include "tdp/nl_interface.h"
#include "tdp/schema.h"
#include "tdp/user_simulator.h"

namespace tdp {

// An error with an HTTP status and a stable machine-readable code.
class ServiceError : public Error {
 public:
  ServiceError(int http_status, std::string code, const std::string& what,
               nlohmann::json detail = nullptr)
      : Error(what), status_(http_status), code_(std::move(code)), detail_(std::move(detail)) {}
  int http_status() const { return status_; }
  const std::string& code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }
  int exit_code() const override { return 13; }

 private:
  int status_;
  std::string code_;
  nlohmann::json detail_;
};

// Everything a domain needs to run live sessions. The NL interfaces point at
// `schema`, so bundles live behind shared_ptr and are never copied.
struct DomainBundle {
  DomainBundle(DomainSchema schema, KnowledgeBase kb, std::vector<UserGoal> goals,
               TemplateTable user_templates, TemplateTable agent_templates,
               const Lexicon& lexicon);
  DomainBundle(const DomainBundle&) = delete;
  DomainBundle& operator=(const DomainBundle&) = delete;

  DomainSchema schema;
  KnowledgeBase kb;
  std::vector<UserGoal> goals;  // goal cards shown to judges
  NlInterface user_nl;
  NlInterface agent_nl;

  // Loads <dir>/<domain>.{schema,kb,goals,user.templates,agent.templates,
  // lexicon}.json; kb_path / goals_path override the defaults when non-empty.
  static std::shared_ptr<const DomainBundle> Load(const std::string& resource_dir,
                                                  const std::string& domain,
                                                  const std::string& kb_path = "",
                                                  const std::string& goals_path = "");
};

struct ServiceConfig {
  std::string data_dir;                          // required
  std::string checkpoint_dir;                    // "rl:<name>" resolves here
  std::chrono::milliseconds idle_timeout{30 * 60 * 1000};
  std::uint64_t seed = 0;                        // goal-card sampling; 0 = random
  // Milliseconds since the epoch; injectable for tests.
  std::function<std::int64_t()> clock;

  // TDP_DATA_DIR and TDP_CHECKPOINT_DIR override the fields when set.
  void ApplyEnvironment();
};

class DialogService {
 public:
  DialogService(ServiceConfig config,
                std::map<std::string, std::shared_ptr<const DomainBundle>> domains);
  ~DialogService();

  DialogService(const DialogService&) = delete;
  DialogService& operator=(const DialogService&) = delete;

  // Each call corresponds to one API route; the results are the response
  // bodies. Errors are ServiceError (or ParseError for bad frames, which the
  // HTTP layer maps to 400).
  nlohmann::ordered_json CreateSession(const nlohmann::json& request);
  nlohmann::ordered_json PostMessage(const std::string& id, const nlohmann::json& body);
  nlohmann::ordered_json PostRating(const std::string& id, const nlohmann::json& body);
  nlohmann::ordered_json GetSession(const std::string& id);
  nlohmann::ordered_json Report();
  // One JSON object per line, sessions in creation order. An empty filter
  // keeps every agent kind.
  void ExportTranscripts(std::ostream& out, const std::string& agent_kind_filter = "");

  // Ends sessions idle for longer than the timeout. Called lazily by every
  // operation as well.
  void ExpireIdle();

  std::size_t session_count() const;
  std::string log_path() const;

 private:
  struct Session;
  struct LoadedAgent;

  std::shared_ptr<Session> Find(const std::string& id);
  std::shared_ptr<const LoadedAgent> ResolveAgent(const std::string& kind,
                                                   const DomainBundle& domain);
  void Append(const nlohmann::ordered_json& event);
  void Replay();
  void EndLocked(Session& s, const std::string& reason, bool log);
  void ExpireLocked(Session& s, std::int64_t now);
  std::int64_t Now() const;
  std::string NewId();
  nlohmann::ordered_json SessionJsonLocked(const Session& s) const;
  nlohmann::ordered_json ExportJsonLocked(const Session& s) const;

  ServiceConfig config_;
  std::map<std::string, std::shared_ptr<const DomainBundle>> domains_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::vector<std::string> order_;

  std::mutex agents_mu_;
  std::map<std::string, std::shared_ptr<const LoadedAgent>> agents_;

  std::mutex log_mu_;
  std::string log_path_;

  std::mutex id_mu_;
  Rng id_rng_;
  std::uint64_t id_counter_ = 0;
  Rng goal_rng_;
};

// Blocking HTTP server around a DialogService.
class HttpFrontend {
 public:
  HttpFrontend(DialogService& service, std::string static_dir = "");
  ~HttpFrontend();

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port. Throws IoError if binding fails.
  int Start(const std::string& host, int port);
  // Serves on the calling thread until Stop().
  void Run(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tdp

#endif  // TDP_DIALOG_SERVICE_H_

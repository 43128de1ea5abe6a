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

#include "tdp/dialog_service.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "tdp/q_function.h"

namespace tdp {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kLogName = "events.jsonl";

ServiceError NotFound(const std::string& code, const std::string& what) {
  return ServiceError(404, code, what);
}
ServiceError Conflict(const std::string& code, const std::string& what) {
  return ServiceError(409, code, what);
}
ServiceError BadRequest(const std::string& what) {
  return ServiceError(400, "bad_request", what);
}

ojson OutcomeJson(const std::string& status, const std::string& reason,
                  const std::vector<std::string>& unanswered = {}) {
  ojson j;
  j["status"] = status;
  j["reason"] = reason;
  if (!unanswered.empty()) j["unanswered"] = unanswered;
  return j;
}

ojson OutcomeJson(const Outcome& o) {
  return OutcomeJson(std::string(StatusName(o.status)), std::string(FailureReasonName(o.reason)),
                     o.unanswered);
}

}  // namespace

// Domains

DomainBundle::DomainBundle(DomainSchema s, KnowledgeBase k, std::vector<UserGoal> g,
                           TemplateTable user_templates, TemplateTable agent_templates,
                           const Lexicon& lexicon)
    : schema(std::move(s)),
      kb(std::move(k)),
      goals(std::move(g)),
      user_nl(schema, std::move(user_templates), lexicon, kb.Vocabulary()),
      agent_nl(schema, std::move(agent_templates), lexicon, kb.Vocabulary()) {}

std::shared_ptr<const DomainBundle> DomainBundle::Load(const std::string& dir,
                                                       const std::string& domain,
                                                       const std::string& kb_path,
                                                       const std::string& goals_path) {
  const std::string base = (fs::path(dir) / domain).string();
  DomainSchema schema = DomainSchema::FromFile(base + ".schema.json");
  KnowledgeBase kb = KnowledgeBase::FromFile(kb_path.empty() ? base + ".kb.json" : kb_path, schema);
  std::vector<UserGoal> goals =
      LoadGoalDbFile(goals_path.empty() ? base + ".goals.json" : goals_path);
  TemplateTable user = TemplateTable::FromFile(base + ".user.templates.json", schema);
  TemplateTable agent = TemplateTable::FromFile(base + ".agent.templates.json", schema);
  const Lexicon lexicon = Lexicon::FromFile(base + ".lexicon.json");
  return std::make_shared<const DomainBundle>(std::move(schema), std::move(kb), std::move(goals),
                                              std::move(user), std::move(agent), lexicon);
}

void ServiceConfig::ApplyEnvironment() {
  if (const char* v = std::getenv("TDP_DATA_DIR"); v && *v) data_dir = v;
  if (const char* v = std::getenv("TDP_CHECKPOINT_DIR"); v && *v) checkpoint_dir = v;
}

// Sessions

struct DialogService::LoadedAgent {
  std::string kind;
  std::unique_ptr<Agent> agent;
};

struct DialogService::Session {
  std::mutex mu;
  std::string id;
  std::string domain;
  std::string agent_kind;
  std::string judge;
  std::shared_ptr<const DomainBundle> bundle;
  std::shared_ptr<const LoadedAgent> agent;
  std::optional<UserGoal> goal;
  std::int64_t created = 0;
  std::int64_t last_activity = 0;
  ojson transcript = ojson::array();
  DialogueState state;
  SimState judge_state;  // scores agent offers against the goal card
  DialogAct last_agent_act;
  int exchanges = 0;
  bool ended = false;
  std::string end_reason;
  ojson outcome;  // null while open
  std::optional<int> rating;
};

DialogService::DialogService(ServiceConfig config,
                             std::map<std::string, std::shared_ptr<const DomainBundle>> domains)
    : config_(std::move(config)), domains_(std::move(domains)) {
  if (config_.data_dir.empty()) throw ValidationError("service needs a data directory");
  if (!config_.clock) {
    config_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  std::error_code ec;
  fs::create_directories(config_.data_dir, ec);
  if (ec || !fs::is_directory(config_.data_dir)) {
    throw IoError("cannot create data directory '" + config_.data_dir + "'");
  }
  log_path_ = (fs::path(config_.data_dir) / kLogName).string();
  std::random_device rd;
  const std::uint64_t entropy = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
                                static_cast<std::uint64_t>(Now());
  id_rng_ = Rng(entropy);
  goal_rng_ = Rng(config_.seed != 0 ? config_.seed : SplitMix64(entropy));
  Replay();
}

DialogService::~DialogService() = default;

std::int64_t DialogService::Now() const { return config_.clock(); }

std::string DialogService::log_path() const { return log_path_; }

std::size_t DialogService::session_count() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

std::string DialogService::NewId() {
  std::lock_guard lock(id_mu_);
  while (true) {
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx",
                  static_cast<unsigned long long>(id_rng_.Next()),
                  static_cast<unsigned long long>(DeriveSeed(id_rng_.Next(), ++id_counter_)));
    std::shared_lock slock(sessions_mu_);
    if (!sessions_.count(buf)) return buf;
  }
}

void DialogService::Append(const ojson& event) {
  std::lock_guard lock(log_mu_);
  std::ofstream out(log_path_, std::ios::app | std::ios::binary);
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw IoError("cannot append to '" + log_path_ + "'");
}

std::shared_ptr<DialogService::Session> DialogService::Find(const std::string& id) {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("session_not_found", "no session '" + id + "'");
  return it->second;
}

std::shared_ptr<const DialogService::LoadedAgent> DialogService::ResolveAgent(
    const std::string& kind, const DomainBundle& domain) {
  const std::string key = domain.schema.domain_name() + "|" + kind;
  std::lock_guard lock(agents_mu_);
  if (auto it = agents_.find(key); it != agents_.end()) return it->second;
  auto loaded = std::make_shared<LoadedAgent>();
  loaded->kind = kind;
  if (kind == "rule") {
    loaded->agent = std::make_unique<RuleAgent>(domain.schema);
  } else if (kind.rfind("rl:", 0) == 0) {
    const std::string name = kind.substr(3);
    const fs::path rel(name);
    bool safe = !name.empty() && rel.is_relative();
    for (const auto& part : rel) safe = safe && part != "..";
    if (config_.checkpoint_dir.empty() || !safe) {
      throw ServiceError(422, "bad_checkpoint",
                         "checkpoint '" + name + "' is not under the checkpoint directory");
    }
    const std::string path = (fs::path(config_.checkpoint_dir) / rel).string();
    try {
      Checkpoint cp = LoadCheckpoint(path, domain.schema, domain.schema.max_turns());
      loaded->agent =
          std::make_unique<RlAgent>(domain.schema, domain.schema.max_turns(), std::move(cp.q));
    } catch (const Error& e) {
      throw ServiceError(422, "bad_checkpoint", e.what());
    }
  } else {
    throw BadRequest("agent_kind must be \"rule\" or \"rl:<checkpoint>\"");
  }
  agents_.emplace(key, loaded);
  return loaded;
}

ojson DialogService::CreateSession(const nlohmann::json& request) {
  ExpireIdle();
  if (!request.is_object()) throw BadRequest("request body must be a JSON object");
  const std::string domain = request.value("domain", std::string());
  std::string kind = request.value("agent_kind", std::string("rule"));
  if (kind == "rl" && request.contains("checkpoint")) {
    kind = "rl:" + request.at("checkpoint").get<std::string>();
  }
  auto d = domains_.find(domain);
  if (d == domains_.end()) {
    throw NotFound("unknown_domain", "domain '" + domain + "' is not configured");
  }
  auto agent = ResolveAgent(kind, *d->second);

  auto s = std::make_shared<Session>();
  s->id = NewId();
  s->domain = domain;
  s->agent_kind = kind;
  s->judge = request.value("judge", std::string());
  s->bundle = d->second;
  s->agent = agent;
  if (!d->second->goals.empty()) {
    std::lock_guard lock(id_mu_);
    s->goal = SampleGoal(d->second->goals, goal_rng_);
  }
  s->created = s->last_activity = Now();
  const StateTracker tracker(d->second->schema, d->second->kb);
  s->state = tracker.Initial();
  if (s->goal) s->judge_state.goal = *s->goal;

  const DialogAct greeting(intents::kGreeting);
  const std::string text = d->second->agent_nl.Render(greeting);
  s->last_agent_act = greeting;
  ojson entry;
  entry["speaker"] = "agent";
  entry["utterance"] = text;
  entry["frame"] = SerializeFrame(greeting, d->second->schema);
  entry["ts"] = s->created;
  s->transcript.push_back(entry);

  ojson event;
  event["event"] = "create";
  event["id"] = s->id;
  event["ts"] = s->created;
  event["domain"] = domain;
  event["agent_kind"] = kind;
  event["judge"] = s->judge;
  event["goal"] = s->goal ? ojson(s->goal->ToJson(&d->second->schema)) : ojson(nullptr);
  event["greeting"] = entry;
  Append(event);
  {
    std::unique_lock lock(sessions_mu_);
    sessions_.emplace(s->id, s);
    order_.push_back(s->id);
  }

  ojson out;
  out["session_id"] = s->id;
  out["greeting"] = text;
  out["greeting_frame"] = entry["frame"];
  out["goal"] = event["goal"];
  out["session_status"] = "open";
  return out;
}

void DialogService::EndLocked(Session& s, const std::string& reason, bool log) {
  s.ended = true;
  s.end_reason = reason;
  if (log) {
    ojson event;
    event["event"] = "end";
    event["id"] = s.id;
    event["ts"] = s.last_activity;
    event["reason"] = reason;
    event["outcome"] = s.outcome;
    Append(event);
  }
}

void DialogService::ExpireLocked(Session& s, std::int64_t now) {
  if (s.ended || now - s.last_activity <= config_.idle_timeout.count()) return;
  s.last_activity = now;
  s.outcome = OutcomeJson("failure", "idle_timeout");
  EndLocked(s, "idle_timeout", true);
}

void DialogService::ExpireIdle() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  const std::int64_t now = Now();
  for (const auto& s : all) {
    std::lock_guard lock(s->mu);
    ExpireLocked(*s, now);
  }
}

ojson DialogService::PostMessage(const std::string& id, const nlohmann::json& body) {
  auto sp = Find(id);
  Session& s = *sp;
  std::lock_guard lock(s.mu);
  const std::int64_t now = Now();
  ExpireLocked(s, now);
  if (s.ended) throw Conflict("session_ended", "session '" + id + "' has ended");
  const DomainBundle& d = *s.bundle;
  if (!body.is_object()) throw BadRequest("message body must be a JSON object");

  DialogAct user_act;
  std::string user_text;
  std::string input;
  if (body.contains("frame")) {
    if (!body.at("frame").is_string()) throw BadRequest("frame must be a string");
    user_text = body.at("frame").get<std::string>();
    user_act = ParseFrame(user_text, d.schema, tdp::ParseMode::kStrict);
    input = "frame";
  } else if (body.contains("text")) {
    if (!body.at("text").is_string()) throw BadRequest("text must be a string");
    user_text = body.at("text").get<std::string>();
    if (user_text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw BadRequest("text must not be blank");
    }
    user_act = d.user_nl.Parse(user_text, &s.last_agent_act);
    input = "text";
  } else {
    throw BadRequest("message needs \"text\" or \"frame\"");
  }
  if (!s.agent) {
    throw ServiceError(422, "bad_checkpoint", "agent '" + s.agent_kind + "' is unavailable");
  }

  const StateTracker tracker(d.schema, d.kb);
  tracker.Track(s.state, user_act, Speaker::kUser);

  DialogAct agent_act;
  std::string end_reason;
  if (user_act.is(intents::kClosing)) {
    agent_act = DialogAct(intents::kClosing);
    tracker.Track(s.state, agent_act, Speaker::kAgent);
    s.judge_state.outcome = EpisodeOutcome(s.judge_state, d.kb, d.schema);
    s.outcome = OutcomeJson(s.judge_state.outcome);
    end_reason = "user_closing";
  } else {
    Rng unused(0);
    const auto actions = FeasibleActions(d.schema);
    const int index = s.agent->agent->SelectAction(s.state, 0.0, unused);
    if (index < 0 || index >= static_cast<int>(actions.size())) {
      throw ServiceError(500, "agent_error", "agent chose an invalid action");
    }
    agent_act = BindAction(actions[static_cast<std::size_t>(index)], s.state, d.kb);
    tracker.Track(s.state, agent_act, Speaker::kAgent);
    RecordAgentAct(s.judge_state, agent_act, d.schema);
    ++s.exchanges;
    if (agent_act.IsTaskComplete()) {
      s.judge_state.outcome = EpisodeOutcome(s.judge_state, d.kb, d.schema);
      s.outcome = OutcomeJson(s.judge_state.outcome);
      end_reason = "taskcomplete";
    } else if (s.exchanges >= d.schema.max_turns() - 1) {
      s.outcome = OutcomeJson("failure", std::string(FailureReasonName(FailureReason::kTurnCap)));
      end_reason = "turn_cap";
    }
  }
  const std::string agent_text = d.agent_nl.Render(agent_act, &user_act);

  ojson u;
  u["speaker"] = "user";
  u["utterance"] = user_text;
  u["frame"] = SerializeFrame(user_act, d.schema);
  u["input"] = input;
  u["ts"] = now;
  ojson a;
  a["speaker"] = "agent";
  a["utterance"] = agent_text;
  a["frame"] = SerializeFrame(agent_act, d.schema);
  a["ts"] = now;

  ojson event;
  event["event"] = "message";
  event["id"] = s.id;
  event["ts"] = now;
  event["user"] = u;
  event["agent"] = a;
  if (!end_reason.empty()) {
    event["end"] = end_reason;
    event["outcome"] = s.outcome;
  }
  Append(event);

  s.transcript.push_back(u);
  s.transcript.push_back(a);
  s.last_agent_act = agent_act;
  s.last_activity = now;
  if (!end_reason.empty()) EndLocked(s, end_reason, false);

  ojson out;
  out["session_id"] = s.id;
  out["user_frame"] = u["frame"];
  out["agent_utterance"] = agent_text;
  out["agent_frame"] = a["frame"];
  out["session_status"] = s.ended ? "ended" : "open";
  if (s.ended) out["outcome"] = s.outcome;
  return out;
}

ojson DialogService::PostRating(const std::string& id, const nlohmann::json& body) {
  auto sp = Find(id);
  Session& s = *sp;
  std::lock_guard lock(s.mu);
  const std::int64_t now = Now();
  ExpireLocked(s, now);
  if (!body.is_object() || !body.contains("rating") || !body.at("rating").is_number_integer()) {
    throw ServiceError(400, "validation_error", "rating must be an integer from 1 to 5");
  }
  const auto rating = body.at("rating").get<std::int64_t>();
  if (rating < 1 || rating > 5) {
    throw ServiceError(400, "validation_error", "rating must be an integer from 1 to 5");
  }
  if (!s.ended) throw Conflict("not_ended", "session '" + id + "' is still open");
  if (s.rating) throw Conflict("already_rated", "session '" + id + "' is already rated");
  ojson event;
  event["event"] = "rating";
  event["id"] = s.id;
  event["ts"] = now;
  event["rating"] = rating;
  Append(event);
  s.rating = static_cast<int>(rating);
  ojson out;
  out["session_id"] = s.id;
  out["rating"] = rating;
  out["stored"] = true;
  return out;
}

ojson DialogService::SessionJsonLocked(const Session& s) const {
  ojson j;
  j["session_id"] = s.id;
  j["domain"] = s.domain;
  j["agent_kind"] = s.agent_kind;
  j["judge"] = s.judge;
  j["status"] = s.ended ? "ended" : "open";
  j["end_reason"] = s.ended ? ojson(s.end_reason) : ojson(nullptr);
  j["goal"] = s.goal ? ojson(s.goal->ToJson(&s.bundle->schema)) : ojson(nullptr);
  j["transcript"] = s.transcript;
  j["outcome"] = s.outcome;
  j["rating"] = s.rating ? ojson(*s.rating) : ojson(nullptr);
  j["created"] = s.created;
  j["last_activity"] = s.last_activity;
  return j;
}

ojson DialogService::ExportJsonLocked(const Session& s) const {
  ojson j;
  j["id"] = s.id;
  j["domain"] = s.domain;
  j["agent_kind"] = s.agent_kind;
  j["judge"] = s.judge;
  j["goal"] = s.goal ? ojson(s.goal->ToJson(&s.bundle->schema)) : ojson(nullptr);
  j["transcript"] = s.transcript;
  j["status"] = s.ended ? "ended" : "open";
  j["outcome"] = s.outcome;
  j["rating"] = s.rating ? ojson(*s.rating) : ojson(nullptr);
  return j;
}

ojson DialogService::GetSession(const std::string& id) {
  auto sp = Find(id);
  std::lock_guard lock(sp->mu);
  ExpireLocked(*sp, Now());
  return SessionJsonLocked(*sp);
}

void DialogService::ExportTranscripts(std::ostream& out, const std::string& filter) {
  ExpireIdle();
  std::vector<std::shared_ptr<Session>> list;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& id : order_) list.push_back(sessions_.at(id));
  }
  for (const auto& s : list) {
    std::lock_guard lock(s->mu);
    if (!filter.empty() && s->agent_kind != filter) continue;
    out << ExportJsonLocked(*s).dump() << '\n';
  }
  if (!out) throw IoError("transcript export failed");
}

ojson DialogService::Report() {
  ExpireIdle();
  struct Tally {
    std::int64_t sessions = 0, ended = 0, successes = 0, rated = 0, rating_sum = 0;
  };
  std::map<std::string, Tally> by_kind;
  Tally all;
  std::vector<std::shared_ptr<Session>> list;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& id : order_) list.push_back(sessions_.at(id));
  }
  for (const auto& s : list) {
    std::lock_guard lock(s->mu);
    for (Tally* t : {&all, &by_kind[s->agent_kind]}) {
      ++t->sessions;
      if (s->ended) {
        ++t->ended;
        if (s->outcome.is_object() && s->outcome.value("status", "") == "success") {
          ++t->successes;
        }
      }
      if (s->rating) {
        ++t->rated;
        t->rating_sum += *s->rating;
      }
    }
  }
  auto render = [](const Tally& t) {
    ojson j;
    j["n_sessions"] = t.sessions;
    j["n_ended"] = t.ended;
    j["n_rated"] = t.rated;
    if (t.rated > 0) {
      const Rational mean(t.rating_sum, t.rated);
      j["mean_rating"] = mean.ToDouble();
      j["mean_rating_exact"] = mean.ToString();
    } else {
      j["mean_rating"] = nullptr;
      j["mean_rating_exact"] = nullptr;
    }
    if (t.ended > 0) {
      const Rational rate(t.successes, t.ended);
      j["success_rate"] = rate.ToDouble();
      j["success_rate_exact"] = rate.ToString();
    } else {
      j["success_rate"] = nullptr;
      j["success_rate_exact"] = nullptr;
    }
    return j;
  };
  ojson out = render(all);
  ojson kinds = ojson::object();
  for (const auto& [k, t] : by_kind) kinds[k] = render(t);
  out["by_agent_kind"] = kinds;
  return out;
}

// Replays the event log. Agent replies are taken from the log rather than
// recomputed, so checkpoints need not be loadable to rebuild history.
void DialogService::Replay() {
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson e;
    try {
      e = ojson::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      // A torn final line from a crash is dropped; anything else is fatal.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw IoError(log_path_ + ":" + std::to_string(line_no) + ": corrupt event");
    }
    try {
      const std::string type = e.at("event");
      const std::string id = e.at("id");
      if (type == "create") {
        auto s = std::make_shared<Session>();
        s->id = id;
        s->domain = e.at("domain");
        s->agent_kind = e.at("agent_kind");
        s->judge = e.value("judge", std::string());
        auto d = domains_.find(s->domain);
        if (d == domains_.end()) {
          throw IoError(log_path_ + ":" + std::to_string(line_no) + ": domain '" + s->domain +
                        "' is not configured");
        }
        s->bundle = d->second;
        try {
          s->agent = ResolveAgent(s->agent_kind, *d->second);
        } catch (const ServiceError&) {
          s->agent = nullptr;
        }
        if (!e.at("goal").is_null()) {
          s->goal = UserGoal::FromJson(nlohmann::json::parse(e.at("goal").dump()));
          s->judge_state.goal = *s->goal;
        }
        s->created = s->last_activity = e.at("ts").get<std::int64_t>();
        s->state = StateTracker(d->second->schema, d->second->kb).Initial();
        s->transcript.push_back(e.at("greeting"));
        s->last_agent_act = ParseFrame(e.at("greeting").at("frame").get<std::string>(),
                                       d->second->schema);
        sessions_[id] = s;
        order_.push_back(id);
        continue;
      }
      auto it = sessions_.find(id);
      if (it == sessions_.end()) {
        throw IoError(log_path_ + ":" + std::to_string(line_no) + ": unknown session " + id);
      }
      Session& s = *it->second;
      const DomainBundle& d = *s.bundle;
      s.last_activity = e.at("ts").get<std::int64_t>();
      if (type == "message") {
        const StateTracker tracker(d.schema, d.kb);
        const DialogAct u = ParseFrame(e.at("user").at("frame").get<std::string>(), d.schema);
        const DialogAct a = ParseFrame(e.at("agent").at("frame").get<std::string>(), d.schema);
        tracker.Track(s.state, u, Speaker::kUser);
        tracker.Track(s.state, a, Speaker::kAgent);
        if (!u.is(intents::kClosing)) {
          RecordAgentAct(s.judge_state, a, d.schema);
          ++s.exchanges;
        }
        s.transcript.push_back(e.at("user"));
        s.transcript.push_back(e.at("agent"));
        s.last_agent_act = a;
        if (e.contains("end")) {
          s.outcome = e.at("outcome");
          EndLocked(s, e.at("end"), false);
        }
      } else if (type == "end") {
        s.outcome = e.at("outcome");
        EndLocked(s, e.at("reason"), false);
      } else if (type == "rating") {
        s.rating = e.at("rating").get<int>();
      } else {
        throw IoError(log_path_ + ":" + std::to_string(line_no) + ": unknown event " + type);
      }
    } catch (const nlohmann::json::exception& ex) {
      throw IoError(log_path_ + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
}

}  // namespace tdp

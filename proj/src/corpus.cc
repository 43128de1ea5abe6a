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

#include "tdp/corpus.h"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "io_util.h"

namespace tdp {

std::string_view SpeakerName(Speaker s) {
  return s == Speaker::kUser ? "user" : "agent";
}

Speaker ParseSpeaker(std::string_view name) {
  const std::string n = ToLower(Trim(name));
  if (n == "user" || n == "usr") return Speaker::kUser;
  if (n == "agent" || n == "agt") return Speaker::kAgent;
  throw ParseError("unknown speaker '" + std::string(name) + "'");
}

bool AnnotatedDialogue::HasUserTurn() const {
  return std::any_of(turns.begin(), turns.end(), [](const AnnotatedTurn& t) {
    return t.speaker == Speaker::kUser;
  });
}

// UserGoal

SlotMap UserGoal::Constraints() const {
  SlotMap out;
  for (const auto& [slot, value] : inform_slots) {
    if (!value.is_anything()) out.emplace(slot, value);
  }
  return out;
}

namespace {

std::vector<std::string> InSchemaOrder(std::vector<std::string> names,
                                       const DomainSchema* schema) {
  if (schema == nullptr) return names;  // callers pass sorted containers
  std::stable_sort(names.begin(), names.end(),
                   [schema](const std::string& a, const std::string& b) {
                     auto ia = schema->SlotIndex(a), ib = schema->SlotIndex(b);
                     const std::size_t na = ia ? *ia : SIZE_MAX;
                     const std::size_t nb = ib ? *ib : SIZE_MAX;
                     return na < nb;
                   });
  return names;
}

}  // namespace

nlohmann::ordered_json UserGoal::ToJson(const DomainSchema* schema) const {
  nlohmann::ordered_json j;
  j["request_slots"] = nlohmann::ordered_json::object();
  for (const auto& slot : InSchemaOrder(
           {request_slots.begin(), request_slots.end()}, schema)) {
    j["request_slots"][slot] = kUnknownValue;
  }
  j["inform_slots"] = nlohmann::ordered_json::object();
  std::vector<std::string> informs;
  for (const auto& [slot, v] : inform_slots) informs.push_back(slot);
  for (const auto& slot : InSchemaOrder(std::move(informs), schema)) {
    const SlotValue& v = inform_slots.at(slot);
    if (v.is_multi()) {
      j["inform_slots"][slot] = v.values();
    } else {
      j["inform_slots"][slot] = v.front();
    }
  }
  return j;
}

UserGoal UserGoal::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw GoalError("goal must be a JSON object");
  UserGoal g;
  if (j.contains("request_slots")) {
    const auto& r = j.at("request_slots");
    if (!r.is_object()) throw GoalError("request_slots must be an object");
    for (const auto& [slot, v] : r.items()) g.request_slots.insert(ToLower(Trim(slot)));
  }
  if (j.contains("inform_slots")) {
    const auto& inf = j.at("inform_slots");
    if (!inf.is_object()) throw GoalError("inform_slots must be an object");
    for (const auto& [slot, v] : inf.items()) {
      SlotValue value = SlotValueFromJson(v);
      const std::string name = ToLower(Trim(slot));
      if (value.is_unknown()) {
        g.request_slots.insert(name);
      } else {
        g.inform_slots.insert_or_assign(name, std::move(value));
      }
    }
  }
  for (const auto& [slot, v] : g.inform_slots) {
    if (g.request_slots.count(slot)) {
      throw GoalError("slot '" + slot + "' is both requested and informed");
    }
  }
  return g;
}

// Validation report

std::size_t ValidationReport::CountFor(std::string_view dialogue_id) const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [&](const ValidationIssue& i) {
        return i.dialogue_id == dialogue_id;
      }));
}

std::string ValidationReport::ToText() const {
  std::ostringstream out;
  if (issues.empty()) {
    out << "no validation issues\n";
    return out.str();
  }
  for (const auto& i : issues) {
    out << i.dialogue_id;
    if (i.turn >= 0) out << " turn " << i.turn;
    out << ": " << i.message << "\n";
  }
  out << issues.size() << " issue(s)\n";
  return out.str();
}

nlohmann::ordered_json ValidationReport::ToJson() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& i : issues) {
    nlohmann::ordered_json e;
    e["dialogue"] = i.dialogue_id;
    e["turn"] = i.turn;
    e["message"] = i.message;
    arr.push_back(std::move(e));
  }
  nlohmann::ordered_json j;
  j["ok"] = ok();
  j["issues"] = std::move(arr);
  return j;
}

// Loading

Corpus LoadCorpus(const nlohmann::json& doc, const DomainSchema& schema) {
  if (!doc.is_array()) throw ParseError("corpus root must be a JSON array");
  Corpus corpus;
  for (std::size_t d = 0; d < doc.size(); ++d) {
    const auto& jd = doc[d];
    if (!jd.is_object() || !jd.contains("turns") || !jd.at("turns").is_array()) {
      throw ParseError("corpus dialogue " + std::to_string(d) +
                       " must be an object with a turns array");
    }
    AnnotatedDialogue dialogue;
    dialogue.id = jd.value("id", "dialogue-" + std::to_string(d));
    dialogue.domain = jd.value("domain", schema.domain_name());
    if (dialogue.domain != schema.domain_name()) {
      corpus.report.issues.push_back(
          {dialogue.id, -1,
           "domain '" + dialogue.domain + "' does not match schema '" +
               schema.domain_name() + "'"});
    }
    const auto& turns = jd.at("turns");
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const auto& jt = turns[t];
      AnnotatedTurn turn;
      try {
        if (!jt.is_object() || !jt.contains("act") || !jt.at("act").is_string()) {
          throw ParseError("turn must be an object with an act string");
        }
        turn.speaker = ParseSpeaker(jt.value("speaker", ""));
        turn.utterance = jt.value("utterance", "");
        turn.act = ParseFrame(jt.at("act").get<std::string>(), schema,
                              ParseMode::kLenient);
      } catch (const ParseError& e) {
        throw CorpusParseError(dialogue.id, t, e);
      } catch (const ValidationError& e) {
        throw CorpusParseError(dialogue.id, t, ParseError(e.what()));
      }
      for (const auto& v : ValidateAct(turn.act, schema)) {
        corpus.report.issues.push_back(
            {dialogue.id, static_cast<int>(t), v.ToString()});
      }
      dialogue.turns.push_back(std::move(turn));
    }
    if (!dialogue.HasUserTurn()) {
      corpus.report.issues.push_back({dialogue.id, -1, "no user turn"});
    }
    corpus.dialogues.push_back(std::move(dialogue));
  }
  return corpus;
}

Corpus LoadCorpusFile(const std::string& path, const DomainSchema& schema) {
  return LoadCorpus(internal::ReadJson(path), schema);
}

// Statistics

nlohmann::ordered_json CorpusStats::ToJson() const {
  nlohmann::ordered_json j;
  j["n_dialogues"] = n_dialogues;
  j["n_turns"] = n_turns;
  j["n_intents_observed"] = n_intents_observed;
  j["n_slots_observed"] = n_slots_observed;
  j["avg_turns"] = avg_turns.ToDouble();
  j["avg_turns_exact"] = avg_turns.ToString();
  j["avg_turns_defined"] = avg_turns_defined;
  return j;
}

CorpusStats ComputeCorpusStats(const std::vector<AnnotatedDialogue>& corpus) {
  CorpusStats stats;
  std::set<std::string> intents, slots;
  for (const auto& d : corpus) {
    stats.n_turns += d.turns.size();
    for (const auto& t : d.turns) {
      intents.insert(t.act.intent());
      for (const auto& s : t.act.request_slots()) slots.insert(s);
      for (const auto& [s, v] : t.act.inform_slots()) slots.insert(s);
    }
  }
  stats.n_dialogues = corpus.size();
  stats.n_intents_observed = intents.size();
  stats.n_slots_observed = slots.size();
  if (stats.n_dialogues > 0) {
    stats.avg_turns = Rational(static_cast<std::int64_t>(stats.n_turns),
                               static_cast<std::int64_t>(stats.n_dialogues));
    stats.avg_turns_defined = true;
  }
  return stats;
}

// Goal extraction

namespace {

void MergeTurn(const DialogAct& act, UserGoal& goal) {
  for (const auto& slot : act.request_slots()) {
    if (!goal.inform_slots.count(slot)) goal.request_slots.insert(slot);
  }
  for (const auto& [slot, value] : act.inform_slots()) {
    goal.request_slots.erase(slot);
    goal.inform_slots.insert_or_assign(slot, value);
  }
}

}  // namespace

GoalExtraction ExtractGoalsFirstTurn(
    const std::vector<AnnotatedDialogue>& corpus) {
  GoalExtraction out;
  for (const auto& d : corpus) {
    auto it = std::find_if(d.turns.begin(), d.turns.end(),
                           [](const AnnotatedTurn& t) {
                             return t.speaker == Speaker::kUser &&
                                    !t.act.is(intents::kGreeting);
                           });
    if (it == d.turns.end()) {
      out.skipped.push_back(d.id);
      continue;
    }
    UserGoal goal;
    MergeTurn(it->act, goal);
    out.goals.push_back(std::move(goal));
  }
  return out;
}

GoalExtraction ExtractGoalsAggregate(
    const std::vector<AnnotatedDialogue>& corpus) {
  GoalExtraction out;
  for (const auto& d : corpus) {
    if (!d.HasUserTurn()) {
      out.skipped.push_back(d.id);
      continue;
    }
    UserGoal goal;
    for (const auto& t : d.turns) {
      if (t.speaker == Speaker::kUser) MergeTurn(t.act, goal);
    }
    out.goals.push_back(std::move(goal));
  }
  return out;
}

// Goal database

std::size_t WriteGoalDb(const std::vector<UserGoal>& goals, std::ostream& out,
                        const DomainSchema* schema) {
  std::vector<const UserGoal*> unique;
  for (const auto& g : goals) {
    const bool seen = std::any_of(unique.begin(), unique.end(),
                                  [&g](const UserGoal* u) { return *u == g; });
    if (!seen) unique.push_back(&g);
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const UserGoal* g : unique) arr.push_back(g->ToJson(schema));
  out << arr.dump(2) << "\n";
  if (!out) throw IoError("failed writing goal database");
  return unique.size();
}

std::vector<UserGoal> LoadGoalDb(const nlohmann::json& doc) {
  if (!doc.is_array()) throw GoalError("goal database must be a JSON array");
  std::vector<UserGoal> goals;
  for (const auto& j : doc) goals.push_back(UserGoal::FromJson(j));
  return goals;
}

std::vector<UserGoal> LoadGoalDbFile(const std::string& path) {
  return LoadGoalDb(internal::ReadJson(path));
}

}  // namespace tdp

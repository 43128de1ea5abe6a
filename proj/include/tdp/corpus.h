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

// Annotated dialogue corpora, dataset statistics and user-goal extraction.
//
// Corpus file: a JSON array of
//   {"id": "...", "domain": "movie",
//    "turns": [{"speaker": "user"|"agent", "utterance": "...",
//               "act": "request(moviename;genre=action)"}, ...]}
//
// Goal database file: a JSON array of
//   {"request_slots": {"ticket": "UNK"}, "inform_slots": {"city": "seattle"}}
// Multi-valued inform slots are written as arrays of strings.

#ifndef TDP_CORPUS_H_
#define TDP_CORPUS_H_

#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tdp/errors.h"
#include "tdp/rational.h"
#include "tdp/schema.h"

namespace tdp {

enum class Speaker { kUser, kAgent };

std::string_view SpeakerName(Speaker s);
// Accepts "user"/"usr" and "agent"/"agt".
Speaker ParseSpeaker(std::string_view name);

struct AnnotatedTurn {
  Speaker speaker = Speaker::kUser;
  std::string utterance;
  DialogAct act;
};

struct AnnotatedDialogue {
  std::string id;
  std::string domain;
  std::vector<AnnotatedTurn> turns;

  bool HasUserTurn() const;
};

struct UserGoal {
  std::set<std::string> request_slots;
  SlotMap inform_slots;

  // Non-"anything" inform slots: the constraints a booking must satisfy.
  SlotMap Constraints() const;

  nlohmann::ordered_json ToJson(const DomainSchema* schema = nullptr) const;
  // Unknown keys such as "diaact" are ignored.
  static UserGoal FromJson(const nlohmann::json& j);

  friend bool operator==(const UserGoal& a, const UserGoal& b) {
    return a.request_slots == b.request_slots &&
           a.inform_slots == b.inform_slots;
  }
  friend bool operator!=(const UserGoal& a, const UserGoal& b) {
    return !(a == b);
  }
};

// A frame that failed to parse, located by dialogue and turn.
class CorpusParseError : public ParseError {
 public:
  CorpusParseError(std::string dialogue_id, std::size_t turn,
                   const ParseError& cause)
      : ParseError("dialogue '" + dialogue_id + "' turn " +
                       std::to_string(turn) + ": " + cause.what(),
                   cause.offset()),
        dialogue_id_(std::move(dialogue_id)),
        turn_(turn) {}

  const std::string& dialogue_id() const { return dialogue_id_; }
  std::size_t turn() const { return turn_; }

 private:
  std::string dialogue_id_;
  std::size_t turn_;
};

struct ValidationIssue {
  std::string dialogue_id;
  // Turn index, or -1 for dialogue-level issues.
  int turn = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  std::size_t CountFor(std::string_view dialogue_id) const;
  std::string ToText() const;
  nlohmann::ordered_json ToJson() const;
};

struct Corpus {
  std::vector<AnnotatedDialogue> dialogues;
  ValidationReport report;
};

Corpus LoadCorpus(const nlohmann::json& doc, const DomainSchema& schema);
Corpus LoadCorpusFile(const std::string& path, const DomainSchema& schema);

struct CorpusStats {
  std::size_t n_dialogues = 0;
  std::size_t n_turns = 0;
  std::size_t n_intents_observed = 0;
  std::size_t n_slots_observed = 0;
  // Exactly n_turns / n_dialogues; 0 with avg_turns_defined=false when the
  // corpus is empty.
  Rational avg_turns;
  bool avg_turns_defined = false;

  nlohmann::ordered_json ToJson() const;
};

CorpusStats ComputeCorpusStats(const std::vector<AnnotatedDialogue>& corpus);

struct GoalExtraction {
  std::vector<UserGoal> goals;
  // ids of dialogues that produced no goal.
  std::vector<std::string> skipped;
};

// Slots of the first user turn whose intent is not greeting.
GoalExtraction ExtractGoalsFirstTurn(
    const std::vector<AnnotatedDialogue>& corpus);
// Union over all user turns; inform values are last-write-wins and a slot
// the user both requested and informed ends up informed.
GoalExtraction ExtractGoalsAggregate(
    const std::vector<AnnotatedDialogue>& corpus);

// Writes a deduplicated goal database and returns the number written.
std::size_t WriteGoalDb(const std::vector<UserGoal>& goals, std::ostream& out,
                        const DomainSchema* schema = nullptr);
std::vector<UserGoal> LoadGoalDb(const nlohmann::json& doc);
std::vector<UserGoal> LoadGoalDbFile(const std::string& path);

}  // namespace tdp

#endif  // TDP_CORPUS_H_

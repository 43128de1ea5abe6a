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

// Agent side of the dialogue: state tracking, the discrete action table,
// the rule-based baseline, state features and the reward signal.

#ifndef TDP_DIALOGUE_AGENTS_H_
#define TDP_DIALOGUE_AGENTS_H_

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdp/corpus.h"
#include "tdp/knowledge_base.h"
#include "tdp/random.h"
#include "tdp/schema.h"
#include "tdp/user_simulator.h"

namespace tdp {

struct DialogueState {
  SlotMap constraints_heard;  // includes "anything" values
  std::set<std::string> user_requests_open;
  std::set<std::string> slots_agent_requested;
  SlotMap agent_offered;  // values the agent has informed
  std::size_t kb_match_count = 0;
  DialogAct last_user_act;
  DialogAct last_agent_act;
  int turn = 0;  // acts tracked so far, both speakers
  bool booked = false;

  // constraints_heard without "anything" values.
  SlotMap KbConstraints() const;
  // agent_offered overridden by KbConstraints(); what a booking is bound to.
  SlotMap BindingConstraints() const;

  bool operator==(const DialogueState&) const = default;
};

class StateTracker {
 public:
  StateTracker(const DomainSchema& schema, const KnowledgeBase& kb)
      : schema_(&schema), kb_(&kb) {}

  // Empty state with kb_match_count refreshed against the whole KB.
  DialogueState Initial() const;
  void Track(DialogueState& state, const DialogAct& act, Speaker speaker) const;

 private:
  const DomainSchema* schema_;
  const KnowledgeBase* kb_;
};

struct AgentAction {
  enum class Kind { kRequest, kInform, kTaskComplete, kFixed };
  int index = 0;
  Kind kind = Kind::kFixed;
  std::string slot;  // for kRequest and kInform
  DialogAct act_template;
};

// request(s) per informable slot, inform(s) per requestable slot other than
// the primary and taskcomplete slots, inform(taskcomplete), confirm_question(),
// closing(), thanks().
std::vector<AgentAction> FeasibleActions(const DomainSchema& schema);

// Fills in values. inform(s) binds the value heard from the user, else the
// modal KB value under the binding constraints, else "none".
// inform(taskcomplete) carries the binding constraints, or is
// inform(taskcomplete=none) when no record satisfies them.
DialogAct BindAction(const AgentAction& action, const DialogueState& state,
                     const KnowledgeBase& kb);

// Index of the action whose template matches `act` modulo values, or -1.
int FindAction(const std::vector<AgentAction>& actions, const DialogAct& act);

// Fixed slot order; asks for the first slot neither heard nor already asked,
// books once the list is exhausted and thanks after the user thanks.
class RulePolicy {
 public:
  explicit RulePolicy(const DomainSchema& schema,
                      std::vector<std::string> slot_order = {});

  const std::vector<std::string>& slot_order() const { return order_; }
  int SelectAction(const DialogueState& state) const;

 private:
  std::vector<AgentAction> actions_;
  std::vector<std::string> order_;
  int taskcomplete_ = 0;
  int thanks_ = 0;
};

inline const std::vector<std::string>& DefaultRuleSlotOrder() {
  static const std::vector<std::string> kOrder = {
      "moviename", "starttime", "city", "date", "theater", "numberofpeople"};
  return kOrder;
}

class Featurizer {
 public:
  static constexpr int kKbBuckets = 5;

  Featurizer(const DomainSchema& schema, int max_turns);

  // |intents| + 3 * |slots| + kKbBuckets + 1.
  int size() const { return size_; }
  std::vector<double> operator()(const DialogueState& state) const;
  nlohmann::ordered_json Layout() const;

  static int KbBucket(std::size_t count);

 private:
  const DomainSchema* schema_;
  int max_turns_;
  int size_;
};

struct RewardConfig {
  int step_penalty = -1;
  int success_bonus = 80;
  int failure_penalty = -40;

  static RewardConfig ForMaxTurns(int max_turns);
  void Validate() const;
};

// ongoing -> step_penalty, success -> success_bonus, failure -> failure_penalty.
int Reward(EpisodeStatus status, const RewardConfig& config);

}  // namespace tdp

#endif  // TDP_DIALOGUE_AGENTS_H_

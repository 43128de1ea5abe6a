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

#include "tdp/dialogue_agents.h"

#include <algorithm>

#include "tdp/errors.h"

namespace tdp {

namespace {

bool IsNonValue(const SlotValue& v) {
  return v.is_anything() || v.is_unknown() ||
         EqualsIgnoreCase(v.front(), kNoBookingValue);
}

}  // namespace

SlotMap DialogueState::KbConstraints() const {
  SlotMap out;
  for (const auto& [s, v] : constraints_heard) {
    if (!v.is_anything()) out.emplace(s, v);
  }
  return out;
}

SlotMap DialogueState::BindingConstraints() const {
  SlotMap out = agent_offered;
  for (auto& [s, v] : KbConstraints()) out.insert_or_assign(s, v);
  return out;
}

DialogueState StateTracker::Initial() const {
  DialogueState state;
  state.kb_match_count = kb_->size();
  return state;
}

void StateTracker::Track(DialogueState& state, const DialogAct& act,
                         Speaker speaker) const {
  ++state.turn;
  if (speaker == Speaker::kUser) {
    if (act.is(intents::kDeny)) {
      for (const auto& [s, v] : state.last_agent_act.inform_slots()) {
        state.agent_offered.erase(s);
      }
    }
    for (const auto& [s, v] : act.inform_slots()) {
      state.constraints_heard.insert_or_assign(s, v);
      state.user_requests_open.erase(s);
    }
    for (const auto& s : act.request_slots()) state.user_requests_open.insert(s);
    state.last_user_act = act;
    state.kb_match_count = kb_->Count(state.KbConstraints());
    return;
  }
  for (const auto& s : act.request_slots()) {
    if (s != kTaskCompleteSlot) state.slots_agent_requested.insert(s);
  }
  for (const auto& [s, v] : act.inform_slots()) {
    if (s == kTaskCompleteSlot || IsNonValue(v)) continue;
    state.agent_offered.insert_or_assign(s, v);
    state.user_requests_open.erase(s);
  }
  if (act.IsTaskComplete()) {
    state.booked = true;
    state.user_requests_open.erase(schema_->primary_request_slot());
  }
  state.last_agent_act = act;
}

std::vector<AgentAction> FeasibleActions(const DomainSchema& schema) {
  std::vector<AgentAction> out;
  auto add = [&out](AgentAction::Kind kind, std::string slot, DialogAct act) {
    AgentAction a;
    a.index = static_cast<int>(out.size());
    a.kind = kind;
    a.slot = std::move(slot);
    a.act_template = std::move(act);
    out.push_back(std::move(a));
  };
  for (const auto& s : schema.informable_slots()) {
    add(AgentAction::Kind::kRequest, s,
        DialogAct(intents::kRequest).AddRequest(s));
  }
  for (const auto& s : schema.requestable_slots()) {
    if (s == schema.primary_request_slot() || s == kTaskCompleteSlot) continue;
    add(AgentAction::Kind::kInform, s,
        DialogAct(intents::kInform).AddInform(s, std::string(kUnknownValue)));
  }
  add(AgentAction::Kind::kTaskComplete, "",
      DialogAct(intents::kInform).AddRequest(kTaskCompleteSlot));
  for (auto intent : {intents::kConfirmQuestion, intents::kClosing,
                      intents::kThanks}) {
    add(AgentAction::Kind::kFixed, "", DialogAct(intent));
  }
  return out;
}

DialogAct BindAction(const AgentAction& action, const DialogueState& state,
                     const KnowledgeBase& kb) {
  switch (action.kind) {
    case AgentAction::Kind::kRequest:
    case AgentAction::Kind::kFixed:
      return action.act_template;
    case AgentAction::Kind::kInform: {
      const SlotMap heard = state.KbConstraints();
      auto it = heard.find(action.slot);
      if (it != heard.end()) {
        return DialogAct(intents::kInform).AddInform(action.slot, it->second);
      }
      SlotMap binding = state.BindingConstraints();
      binding.erase(action.slot);
      auto top = kb.TopValue(action.slot, binding);
      return DialogAct(intents::kInform)
          .AddInform(action.slot,
                     top ? *top : std::string(kNoBookingValue));
    }
    case AgentAction::Kind::kTaskComplete: {
      const SlotMap binding = state.BindingConstraints();
      if (kb.Count(binding) == 0) {
        return DialogAct(intents::kInform)
            .AddInform(kTaskCompleteSlot, std::string(kNoBookingValue));
      }
      DialogAct act(intents::kInform);
      act.AddRequest(kTaskCompleteSlot);
      for (const auto& [s, v] : binding) act.AddInform(s, v);
      return act;
    }
  }
  return action.act_template;
}

int FindAction(const std::vector<AgentAction>& actions, const DialogAct& act) {
  for (const auto& a : actions) {
    switch (a.kind) {
      case AgentAction::Kind::kTaskComplete:
        if (act.IsTaskComplete()) return a.index;
        break;
      case AgentAction::Kind::kInform:
        if (act.is(intents::kInform) && !act.IsTaskComplete() &&
            act.request_slots().empty() && act.inform_slots().size() == 1 &&
            act.HasInform(a.slot)) {
          return a.index;
        }
        break;
      default:
        if (act.is(a.act_template.intent()) && act.inform_slots().empty() &&
            act.request_slots() == a.act_template.request_slots()) {
          return a.index;
        }
    }
  }
  return -1;
}

RulePolicy::RulePolicy(const DomainSchema& schema,
                       std::vector<std::string> slot_order)
    : actions_(FeasibleActions(schema)) {
  if (slot_order.empty()) {
    for (const auto& s : DefaultRuleSlotOrder()) {
      if (schema.IsInformable(s)) slot_order.push_back(s);
    }
    if (slot_order.empty()) {
      const auto& inf = schema.informable_slots();
      slot_order.assign(inf.begin(),
                        inf.begin() + std::min<std::size_t>(6, inf.size()));
    }
  }
  for (const auto& s : slot_order) {
    if (!schema.IsInformable(s)) {
      throw ValidationError("rule slot '" + s + "' is not informable");
    }
  }
  order_ = std::move(slot_order);
  for (const auto& a : actions_) {
    if (a.kind == AgentAction::Kind::kTaskComplete) taskcomplete_ = a.index;
    if (a.act_template.is(intents::kThanks)) thanks_ = a.index;
  }
}

int RulePolicy::SelectAction(const DialogueState& state) const {
  if (state.booked || state.last_user_act.is(intents::kThanks)) return thanks_;
  for (const auto& s : order_) {
    if (state.constraints_heard.count(s) || state.slots_agent_requested.count(s)) {
      continue;
    }
    for (const auto& a : actions_) {
      if (a.kind == AgentAction::Kind::kRequest && a.slot == s) return a.index;
    }
  }
  return taskcomplete_;
}

Featurizer::Featurizer(const DomainSchema& schema, int max_turns)
    : schema_(&schema), max_turns_(max_turns) {
  if (max_turns < 1) throw ValidationError("max_turns must be positive");
  size_ = static_cast<int>(schema.intents().size() +
                           3 * schema.all_slots().size()) +
          kKbBuckets + 1;
}

int Featurizer::KbBucket(std::size_t count) {
  if (count == 0) return 0;
  if (count == 1) return 1;
  if (count <= 5) return 2;
  if (count <= 20) return 3;
  return 4;
}

std::vector<double> Featurizer::operator()(const DialogueState& state) const {
  std::vector<double> x(static_cast<std::size_t>(size_), 0.0);
  const std::size_t n_intents = schema_->intents().size();
  const std::size_t n_slots = schema_->all_slots().size();
  if (auto i = schema_->IntentIndex(state.last_user_act.intent())) x[*i] = 1.0;
  auto bag = [&](std::size_t base, const std::string& s) {
    if (auto i = schema_->SlotIndex(s)) x[base + *i] = 1.0;
  };
  for (const auto& [s, v] : state.constraints_heard) bag(n_intents, s);
  for (const auto& s : state.user_requests_open) bag(n_intents + n_slots, s);
  for (const auto& s : state.slots_agent_requested) bag(n_intents + 2 * n_slots, s);
  const std::size_t kb_base = n_intents + 3 * n_slots;
  x[kb_base + static_cast<std::size_t>(KbBucket(state.kb_match_count))] = 1.0;
  x[kb_base + kKbBuckets] =
      std::min(1.0, static_cast<double>(state.turn) / (2.0 * max_turns_));
  return x;
}

nlohmann::ordered_json Featurizer::Layout() const {
  nlohmann::ordered_json j;
  j["size"] = size_;
  j["intents"] = schema_->intents();
  j["slots"] = schema_->all_slots();
  j["blocks"] = {"last_user_intent", "constraints_heard", "user_requests_open",
                 "slots_agent_requested", "kb_match_bucket", "turn_fraction"};
  j["kb_buckets"] = {"0", "1", "2-5", "6-20", ">20"};
  j["max_turns"] = max_turns_;
  return j;
}

RewardConfig RewardConfig::ForMaxTurns(int max_turns) {
  RewardConfig c;
  c.success_bonus = 2 * max_turns;
  c.failure_penalty = -max_turns;
  return c;
}

void RewardConfig::Validate() const {
  if (!(success_bonus > 0 && failure_penalty < 0)) {
    throw ValidationError("reward requires success_bonus > 0 > failure_penalty");
  }
}

int Reward(EpisodeStatus status, const RewardConfig& config) {
  switch (status) {
    case EpisodeStatus::kOngoing:
      return config.step_penalty;
    case EpisodeStatus::kSuccess:
      return config.success_bonus;
    case EpisodeStatus::kFailure:
      return config.failure_penalty;
  }
  return 0;
}

}  // namespace tdp

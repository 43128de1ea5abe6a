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

#include "tdp/user_simulator.h"

#include <algorithm>

#include "tdp/errors.h"

namespace tdp {

std::string_view StatusName(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::kOngoing:
      return "ongoing";
    case EpisodeStatus::kSuccess:
      return "success";
    case EpisodeStatus::kFailure:
      return "failure";
  }
  return "unknown";
}

std::string_view FailureReasonName(FailureReason r) {
  switch (r) {
    case FailureReason::kNone:
      return "none";
    case FailureReason::kNoBooking:
      return "no_booking";
    case FailureReason::kBookingFailed:
      return "booking_failed";
    case FailureReason::kUnansweredRequests:
      return "unanswered_requests";
    case FailureReason::kConstraintMismatch:
      return "constraint_mismatch";
    case FailureReason::kNoMatchingRecord:
      return "no_matching_record";
    case FailureReason::kTurnCap:
      return "turn_cap";
  }
  return "unknown";
}

void SimConfig::Validate() const {
  if (max_turns < 2) throw ValidationError("max_turns must be at least 2");
  if (first_turn_inform_count && *first_turn_inform_count < 0) {
    throw ValidationError("first_turn_inform_count must be non-negative");
  }
  if (slot_error_rate != 0.0) {
    throw ValidationError("slot_error_rate is reserved and must be 0");
  }
}

nlohmann::ordered_json SimConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["max_turns"] = max_turns;
  if (first_turn_inform_count) {
    j["first_turn_inform_count"] = *first_turn_inform_count;
  } else {
    j["first_turn_inform_count"] = "all";
  }
  j["seed"] = seed;
  return j;
}

SimConfig SimConfig::FromJson(const nlohmann::json& j) {
  SimConfig c;
  if (!j.is_object()) throw ValidationError("simulator config must be an object");
  c.max_turns = j.value("max_turns", c.max_turns);
  if (j.contains("first_turn_inform_count")) {
    const auto& k = j.at("first_turn_inform_count");
    if (k.is_string() && k.get<std::string>() == "all") {
      c.first_turn_inform_count.reset();
    } else if (k.is_number_integer()) {
      c.first_turn_inform_count = k.get<int>();
    } else {
      throw ValidationError("first_turn_inform_count must be \"all\" or an integer");
    }
  }
  c.seed = j.value("seed", c.seed);
  c.slot_error_rate = j.value("slot_error_rate", 0.0);
  c.Validate();
  return c;
}

const UserGoal& SampleGoal(const std::vector<UserGoal>& goal_db, Rng& rng) {
  if (goal_db.empty()) throw EmptyGoalSet();
  return goal_db[rng.UniformIndex(goal_db.size())];
}

namespace {

std::vector<std::string> SchemaOrder(std::vector<std::string> names,
                                     const DomainSchema& schema) {
  std::stable_sort(names.begin(), names.end(),
                   [&schema](const std::string& a, const std::string& b) {
                     auto ia = schema.SlotIndex(a), ib = schema.SlotIndex(b);
                     return (ia ? *ia : SIZE_MAX) < (ib ? *ib : SIZE_MAX);
                   });
  return names;
}

bool IsNonValue(const SlotValue& v) {
  return v.is_anything() || v.is_unknown() ||
         EqualsIgnoreCase(v.front(), kNoBookingValue);
}

// Goal request slots with no value heard yet.
std::vector<std::string> OpenRequests(const SimState& state) {
  std::vector<std::string> out;
  for (const auto& s : state.goal.request_slots) {
    if (!state.requests_answered.count(s)) out.push_back(s);
  }
  return out;
}

DialogAct RequestOpen(const SimState& state) {
  const auto open = OpenRequests(state);
  if (open.empty()) return DialogAct(intents::kConfirmAnswer);
  DialogAct act(intents::kRequest);
  for (const auto& s : open) act.AddRequest(s);
  return act;
}

DialogAct Fallback(SimState& state) {
  if (!state.agenda.empty()) {
    DialogAct top = std::move(state.agenda.back());
    state.agenda.pop_back();
    return top;
  }
  return RequestOpen(state);
}

bool Agrees(const SlotValue& goal_value, const SlotValue& offered) {
  return std::any_of(offered.values().begin(), offered.values().end(),
                     [&](const std::string& v) { return goal_value.Matches(v); });
}

DialogAct Respond(SimState& state, const DialogAct& agent_act) {
  const UserGoal& goal = state.goal;

  if (agent_act.is(intents::kRequest) && !agent_act.request_slots().empty()) {
    DialogAct informs(intents::kInform);
    DialogAct rerequest(intents::kRequest);
    for (const auto& s : agent_act.request_slots()) {
      auto it = goal.inform_slots.find(s);
      if (it != goal.inform_slots.end()) {
        informs.AddInform(s, it->second);
      } else if (goal.request_slots.count(s) && !state.requests_answered.count(s)) {
        rerequest.AddRequest(s);
      } else {
        informs.AddInform(s, std::string(kAnythingValue));
      }
    }
    if (rerequest.empty()) return informs;
    for (const auto& [s, v] : informs.inform_slots()) rerequest.AddInform(s, v);
    return rerequest;
  }

  if (agent_act.is(intents::kInform) && !agent_act.inform_slots().empty()) {
    DialogAct correction(intents::kInform);
    bool answers_request = false;
    for (const auto& [s, v] : agent_act.inform_slots()) {
      if (s == kTaskCompleteSlot) continue;
      if (goal.request_slots.count(s)) answers_request = true;
      auto it = goal.inform_slots.find(s);
      if (it == goal.inform_slots.end() || it->second.is_anything() ||
          IsNonValue(v)) {
        continue;
      }
      if (!Agrees(it->second, v)) correction.AddInform(s, it->second);
    }
    if (!correction.empty()) {
      state.agenda.push_back(std::move(correction));
      return DialogAct(intents::kDeny);
    }
    if (answers_request) return RequestOpen(state);
    return Fallback(state);
  }

  if (agent_act.is(intents::kConfirmQuestion) && state.agenda.empty()) {
    return DialogAct(intents::kConfirmAnswer);
  }
  return Fallback(state);
}

// Marks the reply's informs as issued and drops agenda entries they cover.
void Emit(SimState& state, const DialogAct& reply) {
  if (reply.inform_slots().empty()) return;
  for (const auto& [s, v] : reply.inform_slots()) state.constraints_issued.insert(s);
  for (auto& pending : state.agenda) {
    for (const auto& [s, v] : reply.inform_slots()) pending.Remove(s);
  }
  state.agenda.erase(
      std::remove_if(state.agenda.begin(), state.agenda.end(),
                     [](const DialogAct& a) { return a.empty(); }),
      state.agenda.end());
}

}  // namespace

UserSimulator::UserSimulator(const DomainSchema& schema, const KnowledgeBase& kb,
                             SimConfig config)
    : schema_(&schema), kb_(&kb), config_(config) {
  config_.Validate();
}

std::pair<SimState, DialogAct> UserSimulator::Reset(const UserGoal& goal) const {
  if (goal.request_slots.empty()) {
    throw GoalError("goal has no request slot");
  }
  SimState state;
  state.goal = goal;

  std::vector<std::string> informs;
  for (const auto& [s, v] : goal.inform_slots) informs.push_back(s);
  informs = SchemaOrder(std::move(informs), *schema_);
  std::size_t k = informs.size();
  if (config_.first_turn_inform_count) {
    k = std::min(k, static_cast<std::size_t>(*config_.first_turn_inform_count));
  }

  DialogAct first(intents::kRequest);
  for (const auto& s : goal.request_slots) first.AddRequest(s);
  for (std::size_t i = 0; i < k; ++i) {
    first.AddInform(informs[i], goal.inform_slots.at(informs[i]));
    state.constraints_issued.insert(informs[i]);
  }
  for (std::size_t i = informs.size(); i > k; --i) {
    const std::string& s = informs[i - 1];
    state.agenda.push_back(
        DialogAct(intents::kInform).AddInform(s, goal.inform_slots.at(s)));
  }
  state.turn = 1;
  return {std::move(state), std::move(first)};
}

SimStep UserSimulator::Step(SimState& state, const DialogAct& agent_act) const {
  if (state.status != EpisodeStatus::kOngoing) {
    const bool courtesy =
        agent_act.is(intents::kClosing) || agent_act.is(intents::kThanks);
    if (courtesy && state.booked && !state.courtesy_used) {
      state.courtesy_used = true;
      return {DialogAct(intents::kThanks), state.status};
    }
    throw ProtocolError("simulator stepped after the episode ended");
  }
  ++state.exchanges;
  state.turn += 2;
  RecordAgentAct(state, agent_act, *schema_);

  if (agent_act.IsTaskComplete()) {
    state.outcome = EpisodeOutcome(state, *kb_, *schema_);
    state.status = state.outcome.status;
    return {DialogAct(intents::kThanks), state.status};
  }

  DialogAct reply = Respond(state, agent_act);
  if (state.exchanges >= config_.max_turns - 1) {
    state.outcome = Outcome{};
    state.outcome.status = EpisodeStatus::kFailure;
    state.outcome.reason = FailureReason::kTurnCap;
    state.status = EpisodeStatus::kFailure;
    return {DialogAct(intents::kClosing), state.status};
  }
  Emit(state, reply);
  return {std::move(reply), state.status};
}

void RecordAgentAct(SimState& state, const DialogAct& agent_act,
                    const DomainSchema& schema) {
  const std::string& primary = schema.primary_request_slot();
  for (const auto& [s, v] : agent_act.inform_slots()) {
    if (s == kTaskCompleteSlot || IsNonValue(v)) continue;
    state.agent_offer.insert_or_assign(s, v);
    if (s != primary && state.goal.request_slots.count(s)) {
      state.requests_answered.insert_or_assign(s, v.front());
    }
  }
  if (!agent_act.IsTaskComplete()) return;
  state.booked = true;
  auto tc = agent_act.inform_slots().find(std::string(kTaskCompleteSlot));
  state.booking_failed = tc != agent_act.inform_slots().end() &&
                         EqualsIgnoreCase(tc->second.front(), kNoBookingValue);
  if (!state.booking_failed && state.goal.request_slots.count(primary)) {
    state.requests_answered.insert_or_assign(
        primary, tc != agent_act.inform_slots().end() ? tc->second.front()
                                                      : std::string("booked"));
  }
}

Outcome EpisodeOutcome(const SimState& state, const KnowledgeBase& kb,
                       const DomainSchema& schema) {
  Outcome out;
  out.status = EpisodeStatus::kFailure;
  if (!state.booked) {
    out.reason = FailureReason::kNoBooking;
    return out;
  }
  if (state.booking_failed) {
    out.reason = FailureReason::kBookingFailed;
    return out;
  }
  const std::string& primary = schema.primary_request_slot();
  std::vector<std::string> open;
  for (const auto& s : state.goal.request_slots) {
    if (s != primary && !state.requests_answered.count(s)) open.push_back(s);
  }
  if (!open.empty()) {
    out.reason = FailureReason::kUnansweredRequests;
    out.unanswered = SchemaOrder(std::move(open), schema);
    return out;
  }

  const SlotMap constraints = state.goal.Constraints();
  SlotMap offer;
  for (const auto& [s, v] : state.agent_offer) {
    if (s != primary) offer.emplace(s, v);
  }
  for (const auto& [s, c] : constraints) {
    auto it = offer.find(s);
    if (it != offer.end() && !Agrees(c, it->second)) {
      out.reason = FailureReason::kConstraintMismatch;
      return out;
    }
  }
  const auto rows = kb.Query(offer);
  if (rows.empty()) {
    out.reason = FailureReason::kNoMatchingRecord;
    return out;
  }
  const KbRecord& booked = *rows.front();
  out.booked_record = booked.id;
  if (!Satisfies(booked, constraints, kb.missing_slot_policy())) {
    out.reason = FailureReason::kConstraintMismatch;
    return out;
  }
  for (const auto& [s, c] : constraints) {
    if (!offer.count(s) && !booked.Has(s)) {
      out.reason = FailureReason::kConstraintMismatch;
      return out;
    }
  }
  for (const auto& [s, v] : state.requests_answered) {
    if (s != primary && !booked.Has(s)) {
      out.reason = FailureReason::kNoMatchingRecord;
      return out;
    }
  }
  out.status = EpisodeStatus::kSuccess;
  return out;
}

}  // namespace tdp

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

// Agenda-based user simulator.
//
// A turn is one act by either party. Reset() produces the user's opening act
// (turn 1); every Step() is one agent act plus the user's reply (turn += 2).
// The user hangs up with closing() once the agent has used max_turns - 1
// turns without completing the task, so a transcript never exceeds
// 2 * max_turns acts.

#ifndef TDP_USER_SIMULATOR_H_
#define TDP_USER_SIMULATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tdp/corpus.h"
#include "tdp/knowledge_base.h"
#include "tdp/random.h"
#include "tdp/schema.h"

namespace tdp {

struct SimConfig {
  int max_turns = 40;
  // Inform slots carried by the opening act, in schema order; nullopt = all.
  std::optional<int> first_turn_inform_count;
  std::uint64_t seed = 0;
  // Reserved for a slot-noise channel; must be 0.
  double slot_error_rate = 0.0;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static SimConfig FromJson(const nlohmann::json& j);
};

enum class EpisodeStatus { kOngoing, kSuccess, kFailure };
std::string_view StatusName(EpisodeStatus s);

enum class FailureReason {
  kNone,
  kNoBooking,           // dialogue ended without inform(taskcomplete)
  kBookingFailed,       // agent reported inform(taskcomplete=none)
  kUnansweredRequests,  // a goal request slot never received a value
  kConstraintMismatch,  // the booking contradicts a goal constraint
  kNoMatchingRecord,    // no KB record is consistent with what was offered
  kTurnCap,             // the user hung up at the turn cap
};
std::string_view FailureReasonName(FailureReason r);

struct Outcome {
  EpisodeStatus status = EpisodeStatus::kOngoing;
  FailureReason reason = FailureReason::kNone;
  std::vector<std::string> unanswered;  // for kUnansweredRequests
  std::optional<int> booked_record;     // KB id the booking resolved to

  bool success() const { return status == EpisodeStatus::kSuccess; }
};

struct SimState {
  UserGoal goal;
  std::vector<DialogAct> agenda;  // back() is the top
  std::set<std::string> constraints_issued;
  std::map<std::string, std::string> requests_answered;
  SlotMap agent_offer;
  int turn = 0;
  int exchanges = 0;
  bool booked = false;
  bool booking_failed = false;
  bool courtesy_used = false;
  EpisodeStatus status = EpisodeStatus::kOngoing;
  Outcome outcome;
};

struct SimStep {
  DialogAct user_act;
  EpisodeStatus status = EpisodeStatus::kOngoing;
};

// Uniform draw. Throws EmptyGoalSet for an empty database.
const UserGoal& SampleGoal(const std::vector<UserGoal>& goal_db, Rng& rng);

class UserSimulator {
 public:
  UserSimulator(const DomainSchema& schema, const KnowledgeBase& kb,
                SimConfig config = {});

  const SimConfig& config() const { return config_; }
  const DomainSchema& schema() const { return *schema_; }
  const KnowledgeBase& kb() const { return *kb_; }

  // Throws GoalError when the goal has no request slot.
  std::pair<SimState, DialogAct> Reset(const UserGoal& goal) const;

  // Throws ProtocolError when the episode is already over, apart from one
  // courtesy closing()/thanks() after a booking, which is answered with
  // thanks() and leaves the counters alone.
  SimStep Step(SimState& state, const DialogAct& agent_act) const;

 private:
  const DomainSchema* schema_;
  const KnowledgeBase* kb_;
  SimConfig config_;
};

// Folds the bookkeeping part of an agent act into the state: offered values,
// answered requests and booking flags. Step() calls this; the dialog service
// uses it directly for human-driven sessions.
void RecordAgentAct(SimState& state, const DialogAct& agent_act,
                    const DomainSchema& schema);

// Binary outcome; usable once a booking was made or the cap was reached.
Outcome EpisodeOutcome(const SimState& state, const KnowledgeBase& kb,
                       const DomainSchema& schema);

}  // namespace tdp

#endif  // TDP_USER_SIMULATOR_H_

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

#include <gtest/gtest.h>

#include <cmath>

#include "tdp/errors.h"
#include "test_util.h"

namespace tdp {
namespace {

using ::tdp::testing::DataPath;
using ::tdp::testing::MovieSchema;
using ::tdp::testing::ReadJson;

const KnowledgeBase& BookingKb() {
  static const KnowledgeBase kb =
      KnowledgeBase::FromFile(DataPath("booking.kb.json"), MovieSchema());
  return kb;
}

UserGoal BookingGoal(int i) {
  return LoadGoalDbFile(DataPath("booking.goals.json")).at(i);
}

DialogAct Act(std::string_view text) { return ParseFrame(text, MovieSchema()); }

std::string Str(const DialogAct& a) { return SerializeFrame(a, MovieSchema()); }

TEST(SampleGoalTest, SingletonAndEmpty) {
  Rng rng(1);
  const std::vector<UserGoal> one = {BookingGoal(0)};
  EXPECT_EQ(SampleGoal(one, rng), one[0]);
  EXPECT_THROW(SampleGoal({}, rng), EmptyGoalSet);
}

TEST(SampleGoalTest, UniformOverTwoGoals) {
  const std::vector<UserGoal> db = {BookingGoal(0), BookingGoal(1)};
  Rng rng(42);
  const int n = 10000;
  int first = 0;
  for (int i = 0; i < n; ++i) first += SampleGoal(db, rng) == db[0] ? 1 : 0;
  const double p = static_cast<double>(first) / n;
  // Ten standard deviations of Binomial(n, 1/2) sit inside [0.45, 0.55].
  const double sd = std::sqrt(0.25 / n);
  ASSERT_LE(10 * sd, 0.05 + 1e-12);
  EXPECT_GE(p, 0.45);
  EXPECT_LE(p, 0.55);

  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(SampleGoal(db, a), SampleGoal(db, b));
}

TEST(SimResetTest, SampleGoalOpensWithEverything) {
  UserSimulator sim(MovieSchema(), BookingKb());
  const UserGoal g = UserGoal::FromJson(ReadJson(DataPath("sample.goal.json")));
  auto [state, first] = sim.Reset(g);
  EXPECT_EQ(Str(first),
            "request(ticket;city=seattle;numberofpeople=2;theater=amc pacific "
            "place 11 theater;starttime=9:00 pm;date=tomorrow;moviename=deadpool)");
  EXPECT_TRUE(state.agenda.empty());
  EXPECT_EQ(state.turn, 1);
  EXPECT_EQ(state.constraints_issued.size(), 6u);
}

TEST(SimResetTest, RequestingGoalRequestsAllUnknowns) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(1));
  EXPECT_TRUE(first.is(intents::kRequest));
  EXPECT_EQ(first.request_slots(),
            (std::set<std::string>{"starttime", "theater", "ticket"}));
  EXPECT_EQ(first.inform_slots().size(), 3u);
}

TEST(SimResetTest, PartialOpeningSeedsAgendaInSchemaOrder) {
  SimConfig config;
  config.first_turn_inform_count = 2;
  UserSimulator sim(MovieSchema(), BookingKb(), config);
  const UserGoal g = UserGoal::FromJson(ReadJson(DataPath("sample.goal.json")));
  auto [state, first] = sim.Reset(g);
  EXPECT_EQ(Str(first), "request(ticket;city=seattle;numberofpeople=2)");
  ASSERT_EQ(state.agenda.size(), 4u);
  // Generic agent turns drain the agenda front to back in schema order.
  std::vector<std::string> order;
  for (int i = 0; i < 4; ++i) {
    const SimStep step = sim.Step(state, Act("greeting()"));
    ASSERT_EQ(step.user_act.inform_slots().size(), 1u);
    order.push_back(step.user_act.inform_slots().begin()->first);
  }
  EXPECT_EQ(order, (std::vector<std::string>{"theater", "starttime", "date",
                                             "moviename"}));
  EXPECT_EQ(Str(sim.Step(state, Act("greeting()")).user_act), "request(ticket)");
}

TEST(SimResetTest, GoalWithoutRequestIsRejected) {
  UserSimulator sim(MovieSchema(), BookingKb());
  UserGoal g;
  g.inform_slots.emplace("city", "seattle");
  EXPECT_THROW(sim.Reset(g), GoalError);
}

TEST(SimStepTest, AnswersRequestFromGoal) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(0));
  EXPECT_EQ(Str(sim.Step(state, Act("request(city)")).user_act),
            "inform(city=seattle)");
  EXPECT_EQ(state.turn, 3);
}

TEST(SimStepTest, DoesNotCareAboutSlotsOutsideGoal) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(1));
  EXPECT_EQ(Str(sim.Step(state, Act("request(city)")).user_act),
            "inform(city=anything)");
}

TEST(SimStepTest, RequestForOwnUnknownIsEchoed) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(1));
  EXPECT_EQ(Str(sim.Step(state, Act("request(starttime;date)")).user_act),
            "request(starttime;date=tomorrow)");
}

TEST(SimStepTest, AnsweredRequestIsRecordedAndRemainderRequested) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(1));
  const SimStep s = sim.Step(state, Act("inform(starttime=11:45am)"));
  EXPECT_EQ(state.requests_answered.at("starttime"), "11:45am");
  EXPECT_EQ(Str(s.user_act), "request(theater;ticket)");
}

TEST(SimStepTest, ConflictIsDeniedThenCorrected) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(0));
  EXPECT_EQ(Str(sim.Step(state, Act("inform(moviename=deadpool)")).user_act),
            "deny()");
  EXPECT_EQ(Str(sim.Step(state, Act("greeting()")).user_act),
            "inform(moviename=zoolander 2)");
}

TEST(SimStepTest, InformedGoalBookingSucceeds) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(0));
  const SimStep s = sim.Step(
      state, Act("inform(taskcomplete;city=seattle;numberofpeople=2;theater="
                 "regal meridian 16;starttime=9:25 pm;date=tomorrow;moviename="
                 "zoolander 2)"));
  EXPECT_EQ(Str(s.user_act), "thanks()");
  EXPECT_EQ(s.status, EpisodeStatus::kSuccess);
  EXPECT_EQ(state.outcome.booked_record, 3);
  EXPECT_EQ(state.requests_answered.count("ticket"), 1u);

  // One courtesy exchange is allowed, then the episode is closed.
  EXPECT_EQ(Str(sim.Step(state, Act("thanks()")).user_act), "thanks()");
  EXPECT_THROW(sim.Step(state, Act("thanks()")), ProtocolError);
}

TEST(SimStepTest, RequestingGoalUnansweredRequestsFail) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(1));
  const SimStep s = sim.Step(
      state, Act("inform(taskcomplete;numberofpeople=3;date=tomorrow;"
                 "moviename=10 cloverfield lane)"));
  EXPECT_EQ(s.status, EpisodeStatus::kFailure);
  EXPECT_EQ(state.outcome.reason, FailureReason::kUnansweredRequests);
  EXPECT_EQ(state.outcome.unanswered,
            (std::vector<std::string>{"theater", "starttime"}));
}

TEST(SimStepTest, RequestingGoalAnsweredRequestsSucceed) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(1));
  sim.Step(state, Act("inform(starttime=11:45am)"));
  sim.Step(state, Act("inform(theater=regal la live stadium 14)"));
  const SimStep s = sim.Step(
      state, Act("inform(taskcomplete;numberofpeople=3;date=tomorrow;moviename="
                 "10 cloverfield lane;theater=regal la live stadium 14;"
                 "starttime=11:45am)"));
  EXPECT_EQ(s.status, EpisodeStatus::kSuccess);
  EXPECT_EQ(state.outcome.booked_record, 6);
}

TEST(SimStepTest, InconsistentOffersFail) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(1));
  sim.Step(state, Act("inform(starttime=8:15pm)"));  // friday only
  sim.Step(state, Act("inform(theater=regal la live stadium 14)"));
  sim.Step(state, Act("inform(taskcomplete;date=tomorrow)"));
  EXPECT_EQ(state.outcome.reason, FailureReason::kNoMatchingRecord);
}

TEST(SimStepTest, FailedBookingPayload) {
  UserSimulator sim(MovieSchema(), BookingKb());
  auto [state, first] = sim.Reset(BookingGoal(0));
  const SimStep s = sim.Step(state, Act("inform(taskcomplete=none)"));
  EXPECT_EQ(s.status, EpisodeStatus::kFailure);
  EXPECT_EQ(state.outcome.reason, FailureReason::kBookingFailed);
}

TEST(SimStepTest, TurnCapClosesTheDialogue) {
  SimConfig config;
  config.max_turns = 4;
  UserSimulator sim(MovieSchema(), BookingKb(), config);
  auto [state, first] = sim.Reset(BookingGoal(0));
  EXPECT_EQ(sim.Step(state, Act("greeting()")).status, EpisodeStatus::kOngoing);
  EXPECT_EQ(sim.Step(state, Act("greeting()")).status, EpisodeStatus::kOngoing);
  const SimStep s = sim.Step(state, Act("greeting()"));
  EXPECT_EQ(Str(s.user_act), "closing()");
  EXPECT_EQ(s.status, EpisodeStatus::kFailure);
  EXPECT_EQ(state.outcome.reason, FailureReason::kTurnCap);
  EXPECT_EQ(state.turn, 7);
  EXPECT_THROW(sim.Step(state, Act("closing()")), ProtocolError);
}

TEST(SimConfigTest, ValidatesAndRoundTrips) {
  SimConfig bad;
  bad.max_turns = 1;
  EXPECT_THROW(bad.Validate(), ValidationError);
  SimConfig c;
  c.first_turn_inform_count = 3;
  c.seed = 5;
  const SimConfig back = SimConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.first_turn_inform_count, 3);
  EXPECT_EQ(back.seed, 5u);
  EXPECT_FALSE(SimConfig::FromJson(nlohmann::json::object())
                   .first_turn_inform_count.has_value());
}

// Random agent acts drawn from the schema and KB vocabulary.
DialogAct RandomAgentAct(Rng& rng, const std::vector<std::string>& slots,
                         const std::map<std::string, std::vector<std::string>>& vocab) {
  static const std::vector<std::string> kIntents = {
      "request", "inform", "inform", "confirm_question", "greeting",
      "closing", "thanks", "multiple_choice", "welcome", "deny"};
  DialogAct act(kIntents[rng.UniformIndex(kIntents.size())]);
  if (act.is(intents::kInform) && rng.Bernoulli(0.1)) {
    act.AddInform(kTaskCompleteSlot, rng.Bernoulli(0.2) ? "none" : "booked");
  }
  const int n = rng.UniformInt(0, 2);
  for (int i = 0; i < n; ++i) {
    const std::string& s = slots[rng.UniformIndex(slots.size())];
    if (act.HasSlot(s) || s == kTaskCompleteSlot) continue;
    if (act.is(intents::kRequest)) {
      act.AddRequest(s);
    } else {
      auto it = vocab.find(s);
      act.AddInform(s, it == vocab.end() ? std::string("3")
                                         : it->second[rng.UniformIndex(it->second.size())]);
    }
  }
  return act;
}

struct Trace {
  std::vector<std::string> user_acts;
  EpisodeStatus status;
  FailureReason reason;
  bool operator==(const Trace&) const = default;
};

TEST(SimPropertyTest, DeterminismTerminationConsistencySoundness) {
  const auto goals = LoadGoalDbFile(DataPath("booking.goals.json"));
  const auto vocab = BookingKb().Vocabulary();
  const auto& slots = MovieSchema().all_slots();
  for (int max_turns : {2, 5, 12}) {
    SimConfig config;
    config.max_turns = max_turns;
    config.first_turn_inform_count = max_turns % 3;
    UserSimulator sim(MovieSchema(), BookingKb(), config);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      auto run = [&](std::uint64_t s) {
        Rng rng(s);
        const UserGoal& goal = goals[rng.UniformIndex(goals.size())];
        auto [state, first] = sim.Reset(goal);
        Trace t;
        t.user_acts.push_back(Str(first));
        int exchanges = 0;
        while (state.status == EpisodeStatus::kOngoing) {
          const SimStep step =
              sim.Step(state, RandomAgentAct(rng, slots, vocab));
          ++exchanges;
          t.user_acts.push_back(Str(step.user_act));
          for (const auto& [slot, v] : step.user_act.inform_slots()) {
            const auto it = goal.inform_slots.find(slot);
            if (v.is_anything()) continue;
            EXPECT_TRUE(it != goal.inform_slots.end() && it->second == v)
                << slot << " " << Str(step.user_act);
          }
          EXPECT_LE(state.turn, 2 * max_turns);
          for (const auto& [slot, v] : state.requests_answered) {
            EXPECT_TRUE(goal.request_slots.count(slot)) << slot;
          }
        }
        EXPECT_LE(exchanges, max_turns);
        if (state.status == EpisodeStatus::kSuccess) {
          for (const auto& r : goal.request_slots) {
            EXPECT_TRUE(state.requests_answered.count(r)) << r;
          }
        }
        t.status = state.status;
        t.reason = state.outcome.reason;
        return t;
      };
      ASSERT_EQ(run(seed), run(seed));
    }
  }
}

}  // namespace
}  // namespace tdp

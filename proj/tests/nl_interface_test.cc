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

#include "tdp/nl_interface.h"

#include <gtest/gtest.h>

#include "tdp/dialogue_agents.h"
#include "tdp/errors.h"
#include "tdp/user_simulator.h"
#include "test_util.h"

namespace tdp {
namespace {

using ::tdp::testing::DataPath;
using ::tdp::testing::MovieSchema;
using ::tdp::testing::ReadJson;
using ::tdp::testing::ResourcePath;

const KnowledgeBase& BookingKb() {
  static const KnowledgeBase kb =
      KnowledgeBase::FromFile(DataPath("booking.kb.json"), MovieSchema());
  return kb;
}

const NlInterface& UserNl() {
  static const NlInterface nl(
      MovieSchema(),
      TemplateTable::FromFile(ResourcePath("movie.user.templates.json"), MovieSchema()),
      Lexicon::FromFile(ResourcePath("movie.lexicon.json")), BookingKb().Vocabulary());
  return nl;
}

const NlInterface& AgentNl() {
  static const NlInterface nl(
      MovieSchema(),
      TemplateTable::FromFile(ResourcePath("movie.agent.templates.json"), MovieSchema()),
      Lexicon::FromFile(ResourcePath("movie.lexicon.json")), BookingKb().Vocabulary());
  return nl;
}

DialogAct Act(std::string_view text) { return ParseFrame(text, MovieSchema()); }
std::string Str(const DialogAct& a) { return SerializeFrame(a, MovieSchema()); }

TEST(TemplateTableTest, RejectsMalformedEntries) {
  using nlohmann::json;
  EXPECT_THROW(TemplateTable::FromJson(json{{"inform", "x"}}, MovieSchema()),
               ValidationError);
  EXPECT_THROW(TemplateTable::FromJson(json{{"fly|city", "x"}}, MovieSchema()),
               ValidationError);
  EXPECT_THROW(TemplateTable::FromJson(json{{"inform|city", "at <theater>"}}, MovieSchema()),
               ValidationError);
  EXPECT_THROW(TemplateTable::FromJson(json{{"inform|city,date", "<city><date>"}},
                                       MovieSchema()),
               ValidationError);
  EXPECT_THROW(TemplateTable::FromJson(json{{"inform|spaceship", "x"}}, MovieSchema()),
               ValidationError);
  const auto t = TemplateTable::FromJson(json{{"inform|city", "at <city>."}}, MovieSchema());
  ASSERT_EQ(t.entries().size(), 1u);
  EXPECT_EQ(t.entries()[0].placeholders, std::set<std::string>{"city"});
  EXPECT_NE(t.Find(Act("inform(city=x)")), nullptr);
  EXPECT_EQ(t.Find(Act("request(city)")), nullptr);
  EXPECT_EQ(t.Find(Act("inform(city={a#b})")), nullptr);
}

TEST(NlgTest, BookingSentences) {
  EXPECT_EQ(UserNl().Render(Act("inform(city=seattle)")), "I want to watch at seattle.");
  EXPECT_EQ(AgentNl().Render(Act("request(moviename)")),
            "What movie are you interested in?");
  const DialogAct ask = Act("request(city)");
  EXPECT_EQ(UserNl().Render(Act("inform(city=anything)"), &ask), "I do not care.");
  EXPECT_EQ(AgentNl().Render(Act("inform(starttime=11:45am)")), "11:45am is available.");
  EXPECT_EQ(AgentNl().Render(Act(
                "inform(taskcomplete;city=seattle;numberofpeople=2;theater=regal "
                "meridian 16;starttime=9:25 pm;date=tomorrow;moviename=zoolander 2)")),
            "Great - I was able to purchase 2 tickets for you to see zoolander 2 "
            "tomorrow at regal meridian 16 theater in seattle at 9:25 pm.");
}

TEST(NlgTest, FallbackForm) {
  const DialogAct odd = Act("multiple_choice(theater={a#b};date=x)");
  EXPECT_EQ(UserNl().Render(odd), "I multiple_choice: theater={a#b}; date=x");
  EXPECT_EQ(UserNl().Parse(UserNl().Render(odd)), odd);
  EXPECT_EQ(RenderFallback(Act("welcome()"), MovieSchema()), "I welcome.");
}

TEST(NluTest, ExamplesAndTotality) {
  NlInterface::Source src;
  EXPECT_EQ(Str(UserNl().Parse("I want 2 tickets please!", nullptr, &src)),
            "inform(numberofpeople=2)");
  EXPECT_EQ(src, NlInterface::Source::kTemplate);
  EXPECT_EQ(Str(UserNl().Parse("Thank you.")), "thanks()");
  EXPECT_EQ(Str(UserNl().Parse("blorp qux", nullptr, &src)), "not_sure()");
  EXPECT_EQ(src, NlInterface::Source::kNotSure);
  EXPECT_EQ(Str(UserNl().Parse("")), "not_sure()");
  // Context picks the slot for a bare "I do not care."
  const DialogAct ask = Act("request(date)");
  EXPECT_EQ(Str(UserNl().Parse("I do not care.", &ask)), "inform(date=anything)");
  EXPECT_EQ(Str(UserNl().Parse("I do not care.")), "not_sure()");
}

TEST(NluTest, VocabularyDisambiguatesSharedPatterns) {
  EXPECT_EQ(Str(UserNl().Parse("I want to watch at seattle.")), "inform(city=seattle)");
  EXPECT_EQ(Str(UserNl().Parse("I want to watch at regal meridian 16.")),
            "inform(theater=regal meridian 16)");
  EXPECT_EQ(Str(UserNl().Parse("I want to watch at 9:25 pm.")),
            "inform(starttime=9:25 pm)");
}

TEST(NluTest, LexiconHandlesFreeText) {
  NlInterface::Source src;
  EXPECT_EQ(Str(UserNl().Parse("which theater shows deadpool?", nullptr, &src)),
            "request(theater;moviename=deadpool)");
  EXPECT_EQ(src, NlInterface::Source::kLexicon);
  EXPECT_EQ(Str(UserNl().Parse("we are 4 people, seattle please")),
            "inform(city=seattle;numberofpeople=4)");
  const DialogAct ask = Act("request(theater)");
  EXPECT_EQ(Str(UserNl().Parse("honestly, whatever", &ask)), "inform(theater=anything)");
  EXPECT_EQ(Str(UserNl().Parse("ok bye")), "closing()");
  EXPECT_EQ(Str(UserNl().Parse("I'm not sure")), "not_sure()");
}

TEST(NluTest, ArbitraryInputNeverThrows) {
  const std::string alphabet = "abc xyz?!.,;:=()#{}<>|I 0123456789'-";
  Rng rng(99);
  for (int i = 0; i < 3000; ++i) {
    std::string text;
    const int n = rng.UniformInt(0, 40);
    for (int k = 0; k < n; ++k) text.push_back(alphabet[rng.UniformIndex(alphabet.size())]);
    if (rng.Bernoulli(0.2)) text = "I inform: " + text;
    const DialogAct ctx = Act("request(city)");
    EXPECT_NO_THROW(UserNl().Parse(text, rng.Bernoulli(0.5) ? &ctx : nullptr)) << text;
  }
}

// Every annotated booking utterance is understood as its annotated act, given the
// other party's previous act as context.
TEST(NluTest, BookingUtterances) {
  const auto golden = ReadJson(DataPath("golden_acts.json"));
  std::map<std::string, DialogAct> last;  // per source: previous act
  int checked = 0;
  for (const auto& e : golden) {
    const std::string source = e.at("source");
    if (source.rfind("booking", 0) != 0) continue;
    const DialogAct act = Act(e.at("act").get<std::string>());
    const bool user = e.at("speaker") == "user";
    const NlInterface& nl = user ? UserNl() : AgentNl();
    auto it = last.find(source);
    const DialogAct* ctx = it == last.end() ? nullptr : &it->second;
    EXPECT_EQ(Str(nl.Parse(e.at("utterance").get<std::string>(), ctx)), Str(act))
        << source << ": " << e.at("utterance");
    last[source] = act;
    ++checked;
  }
  EXPECT_EQ(checked, 52);
}

void ExpectClosedLoop(const NlInterface& nl, const DialogAct& act,
                      const DialogAct* ctx, int* templated) {
  const std::string text = nl.Render(act, ctx);
  ASSERT_EQ(nl.Parse(text, ctx), act) << Str(act) << " -> " << text;
  if (nl.RendersWithTemplate(act, ctx)) ++*templated;
}

void ExpectTemplated(const NlInterface& nl, const DialogAct& act) {
  EXPECT_TRUE(nl.RendersWithTemplate(act)) << Str(act) << " -> " << nl.Render(act);
}

TEST(ClosedLoopTest, AgentActionSpaceWithKbBindings) {
  const auto vocab = BookingKb().Vocabulary();
  const auto table = FeasibleActions(MovieSchema());
  int total = 0, templated = 0;
  for (const auto& a : table) {
    switch (a.kind) {
      case AgentAction::Kind::kInform: {
        std::vector<std::string> values = {std::string(kNoBookingValue)};
        auto it = vocab.find(a.slot);
        if (it != vocab.end()) values.insert(values.end(), it->second.begin(), it->second.end());
        for (const auto& v : values) {
          const DialogAct act = DialogAct(intents::kInform).AddInform(a.slot, v);
          ExpectClosedLoop(AgentNl(), act, nullptr, &templated);
          if (v != kNoBookingValue) ExpectTemplated(AgentNl(), act);
          ++total;
        }
        break;
      }
      case AgentAction::Kind::kTaskComplete: {
        const std::vector<std::string> keys = {"city", "numberofpeople", "theater",
                                               "starttime", "date", "moviename"};
        for (const auto& r : BookingKb().records()) {
          for (int mask = 0; mask < (1 << keys.size()); ++mask) {
            DialogAct act(intents::kInform);
            act.AddRequest(kTaskCompleteSlot);
            for (std::size_t k = 0; k < keys.size(); ++k) {
              if (!(mask >> k & 1)) continue;
              const std::string* v = r.Get(keys[k]);
              act.AddInform(keys[k], v ? *v : std::string("3"));
            }
            ExpectClosedLoop(AgentNl(), act, nullptr, &templated);
            if (mask == (1 << keys.size()) - 1) ExpectTemplated(AgentNl(), act);
            ++total;
          }
        }
        ExpectClosedLoop(AgentNl(), Act("inform(taskcomplete=none)"), nullptr, &templated);
        ++total;
        break;
      }
      default:
        ExpectClosedLoop(AgentNl(), a.act_template, nullptr, &templated);
        ExpectTemplated(AgentNl(), a.act_template);
        ++total;
    }
  }
  EXPECT_GT(total, 500);
  EXPECT_GT(templated, 100);
}

TEST(ClosedLoopTest, SimulatorActsWithKbBindings) {
  const auto vocab = BookingKb().Vocabulary();
  const auto table = FeasibleActions(MovieSchema());
  std::vector<UserGoal> goals = LoadGoalDbFile(DataPath("booking.goals.json"));
  goals.push_back(UserGoal::FromJson(ReadJson(DataPath("sample.goal.json"))));
  Rng rng(21);
  for (const auto& r : BookingKb().records()) {
    for (int i = 0; i < 20; ++i) {
      UserGoal g;
      g.request_slots.insert("ticket");
      for (const auto& [s, v] : r.slots) {
        if (rng.Bernoulli(0.3)) {
          g.request_slots.insert(s);
        } else if (rng.Bernoulli(0.6)) {
          g.inform_slots.emplace(s, v);
        }
      }
      if (rng.Bernoulli(0.5)) g.inform_slots.emplace("numberofpeople", "2");
      goals.push_back(g);
    }
  }
  int total = 0, templated = 0;
  for (int k : {-1, 0, 1, 3}) {
    SimConfig config;
    config.max_turns = 12;
    if (k >= 0) config.first_turn_inform_count = k;
    UserSimulator sim(MovieSchema(), BookingKb(), config);
    for (const auto& goal : goals) {
      auto [state, user] = sim.Reset(goal);
      ExpectClosedLoop(UserNl(), user, nullptr, &templated);
      ++total;
      while (state.status == EpisodeStatus::kOngoing) {
        DialogAct agent = table[rng.UniformIndex(table.size())].act_template;
        if (!agent.request_slots().empty() && agent.is(intents::kInform)) {
          agent = DialogAct(intents::kInform);
          auto slot = table[rng.UniformIndex(22)].slot;
          auto it = vocab.find(slot);
          agent.AddInform(slot, it == vocab.end() ? std::string("2")
                                                  : it->second[rng.UniformIndex(it->second.size())]);
        }
        user = sim.Step(state, agent).user_act;
        ExpectClosedLoop(UserNl(), user, &agent, &templated);
        ++total;
      }
    }
  }
  // Single-slot informs, "anything" answers and bare requests.
  for (const auto& s : MovieSchema().informable_slots()) {
    const DialogAct ask = DialogAct(intents::kRequest).AddRequest(s);
    ExpectClosedLoop(UserNl(), DialogAct(intents::kInform).AddInform(s, std::string("anything")),
                     &ask, &templated);
    auto it = vocab.find(s);
    if (it != vocab.end()) {
      for (const auto& v : it->second) {
        ExpectClosedLoop(UserNl(), DialogAct(intents::kInform).AddInform(s, v), &ask, &templated);
        ExpectClosedLoop(UserNl(), DialogAct(intents::kInform).AddInform(s, v), nullptr,
                         &templated);
        total += 2;
      }
    }
    total += 1;
  }
  for (const auto& s : MovieSchema().requestable_slots()) {
    ExpectClosedLoop(UserNl(), DialogAct(intents::kRequest).AddRequest(s), nullptr, &templated);
    ++total;
  }
  EXPECT_GT(total, 1000);
  EXPECT_GT(templated, total / 3);
}

}  // namespace
}  // namespace tdp

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

#include "tdp/schema.h"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "tdp/errors.h"
#include "test_util.h"

namespace tdp {
namespace {

using ::tdp::testing::DataPath;
using ::tdp::testing::MovieSchema;
using ::tdp::testing::ReadJson;
using ::tdp::testing::ResourcePath;

std::size_t SlotCount(const DomainSchema& s) {
  std::set<std::string> all(s.informable_slots().begin(),
                            s.informable_slots().end());
  all.insert(s.requestable_slots().begin(), s.requestable_slots().end());
  return all.size();
}

TEST(SchemaTest, ShippedSchemasMatchTaskStatistics) {
  const auto movie = DomainSchema::FromFile(ResourcePath("movie.schema.json"));
  EXPECT_EQ(movie.intents().size(), 11u);
  EXPECT_EQ(SlotCount(movie), 29u);
  EXPECT_EQ(movie.all_slots().size(), 29u);
  EXPECT_EQ(movie.primary_request_slot(), "ticket");

  const auto rest =
      DomainSchema::FromFile(ResourcePath("restaurant.schema.json"));
  EXPECT_EQ(rest.intents().size(), 11u);
  EXPECT_EQ(SlotCount(rest), 30u);

  const auto taxi = DomainSchema::FromFile(ResourcePath("taxi.schema.json"));
  EXPECT_EQ(taxi.intents().size(), 11u);
  EXPECT_EQ(SlotCount(taxi), 19u);
}

TEST(SchemaTest, PrimarySlotMustBeRequestable) {
  auto doc = ReadJson(ResourcePath("movie.schema.json"));
  doc["primary_request_slot"] = "zip_code_of_mars";
  try {
    DomainSchema::FromJson(doc);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "primary_request_slot");
  }
}

TEST(SchemaTest, RejectsBadDocuments) {
  EXPECT_THROW(DomainSchema::FromString("{ not json"), ParseError);
  auto doc = ReadJson(ResourcePath("movie.schema.json"));
  doc["intents"] = nlohmann::json::array();
  EXPECT_THROW(DomainSchema::FromJson(doc), SchemaError);
  doc = ReadJson(ResourcePath("movie.schema.json"));
  doc["intents"].push_back("inform");
  EXPECT_THROW(DomainSchema::FromJson(doc), SchemaError);
  doc = ReadJson(ResourcePath("movie.schema.json"));
  doc["informable_slots"].push_back("thanks");
  EXPECT_THROW(DomainSchema::FromJson(doc), SchemaError);
  doc = ReadJson(ResourcePath("movie.schema.json"));
  doc["max_turns"] = 1;
  EXPECT_THROW(DomainSchema::FromJson(doc), SchemaError);
}

TEST(SchemaTest, HashIsStableAndSensitive) {
  const auto& movie = MovieSchema();
  EXPECT_EQ(movie.Hash(),
            DomainSchema::FromFile(ResourcePath("movie.schema.json")).Hash());
  auto doc = ReadJson(ResourcePath("movie.schema.json"));
  doc["max_turns"] = 41;
  EXPECT_NE(movie.Hash(), DomainSchema::FromJson(doc).Hash());
}

TEST(ParseFrameTest, RequestWithInforms) {
  const DialogAct act = ParseFrame(
      "request(moviename;genre=action;date=this weekend)", MovieSchema());
  EXPECT_EQ(act.intent(), "request");
  EXPECT_EQ(act.request_slots(), std::set<std::string>{"moviename"});
  ASSERT_EQ(act.inform_slots().size(), 2u);
  EXPECT_EQ(act.inform_slots().at("genre"), SlotValue("action"));
  EXPECT_EQ(act.inform_slots().at("date"), SlotValue("this weekend"));
}

TEST(ParseFrameTest, EmptyFrame) {
  const DialogAct act = ParseFrame("confirm_answer()", MovieSchema());
  EXPECT_EQ(act.intent(), "confirm_answer");
  EXPECT_TRUE(act.empty());
}

TEST(ParseFrameTest, MultiValue) {
  const DialogAct act =
      ParseFrame("inform(theater_chain={amc#regency})", MovieSchema());
  EXPECT_EQ(act.inform_slots().at("theater_chain"),
            SlotValue(std::vector<std::string>{"amc", "regency"}));
}

TEST(ParseFrameTest, UnkIsRequest) {
  EXPECT_EQ(ParseFrame("request(ticket=UNK;city=seattle)"),
            ParseFrame("request(ticket;city=seattle)"));
}

TEST(ParseFrameTest, WhitespaceAndCase) {
  const DialogAct a = ParseFrame("INFORM(City=Seattle)");
  const DialogAct b = ParseFrame("inform(city=Seattle)");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.inform_slots().at("city").front(), "Seattle");
  EXPECT_EQ(ParseFrame("  inform ( starttime=  9:45pm ; date = wednesday )  "),
            ParseFrame("inform(starttime=9:45pm;date=wednesday)"));
}

TEST(ParseFrameTest, SyntaxErrorsCarryOffsets) {
  struct Case {
    const char* text;
    std::size_t offset;
  };
  for (const Case& c : {Case{"foo(", 4}, Case{"(city)", 0},
                        Case{"inform(city=)", 12}, Case{"inform(city=a", 13},
                        Case{"inform(city=a) x", 15}, Case{"inform(=a)", 7},
                        Case{"inform(a={x#})", 12},
                        Case{"inform(city;city=a)", 12}}) {
    try {
      ParseFrame(c.text);
      ADD_FAILURE() << "expected ParseError for " << c.text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), c.offset) << c.text << ": " << e.what();
    }
  }
}

TEST(ParseFrameTest, StrictAndLenientModes) {
  EXPECT_THROW(ParseFrame("book_flight()", MovieSchema()), ValidationError);
  EXPECT_THROW(ParseFrame("request(spaceship)", MovieSchema()),
               ValidationError);
  const DialogAct act =
      ParseFrame("book_flight(spaceship)", MovieSchema(), ParseMode::kLenient);
  EXPECT_EQ(act.intent(), "book_flight");
}

TEST(SerializeFrameTest, CanonicalForms) {
  EXPECT_EQ(SerializeFrame(DialogAct::Make("inform", {}, {{"city", "seattle"}}),
                           MovieSchema()),
            "inform(city=seattle)");
  EXPECT_EQ(SerializeFrame(DialogAct("confirm_answer")), "confirm_answer()");
  // Schema order: city before numberofpeople before moviename.
  EXPECT_EQ(SerializeFrame(ParseFrame("request(moviename=x;ticket;city=y;"
                                      "numberofpeople=2)"),
                           MovieSchema()),
            "request(ticket;city=y;numberofpeople=2;moviename=x)");
  EXPECT_EQ(SerializeFrame(ParseFrame("inform(theater_chain={amc#regency})")),
            "inform(theater_chain={amc#regency})");
}

TEST(SerializeFrameTest, GoldenActsRoundTrip) {
  const auto golden = ReadJson(DataPath("golden_acts.json"));
  ASSERT_GE(golden.size(), 30u);
  for (const auto& entry : golden) {
    const std::string text = entry["act"];
    const DialogAct first = ParseFrame(text);
    const std::string once = SerializeFrame(first, MovieSchema());
    const DialogAct second = ParseFrame(once);
    EXPECT_EQ(first, second) << text;
    EXPECT_EQ(once, SerializeFrame(second, MovieSchema())) << text;
  }
}

TEST(ValidateActTest, Membership) {
  EXPECT_TRUE(ValidateAct(ParseFrame("inform(city=seattle)"), MovieSchema())
                  .empty());
  EXPECT_EQ(ValidateAct(ParseFrame("request(spaceship)"), MovieSchema()),
            (std::vector<Violation>{
                {Violation::Kind::kUnknownSlot, "spaceship"}}));
  EXPECT_EQ(ValidateAct(ParseFrame("book_flight()"), MovieSchema()),
            (std::vector<Violation>{
                {Violation::Kind::kUnknownIntent, "book_flight"}}));
}

TEST(DialogActTest, DisjointSlotSets) {
  DialogAct act("request");
  act.AddRequest("city");
  EXPECT_THROW(act.AddInform("city", "seattle"), ValidationError);
  act.AddInform("date", "UNK");
  EXPECT_TRUE(act.HasRequest("date"));
  EXPECT_THROW(SlotValue("a;b"), ValidationError);
  EXPECT_THROW(SlotValue("   "), ValidationError);
}

// Random acts over the movie schema with values drawn from a small alphabet.
DialogAct RandomAct(std::mt19937_64& rng, const DomainSchema& schema) {
  auto pick = [&rng](const std::vector<std::string>& v) -> const std::string& {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  static const std::vector<std::string> kWords = {
      "seattle", "9:30 pm", "Regal Meridian 16", "2", "this weekend",
      "02/27/2016", "amc", "a-b_c", "x.y", "anything", "London Has Fallen"};
  DialogAct act(pick(schema.intents()));
  const int n = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int i = 0; i < n; ++i) {
    const std::string& slot = pick(schema.all_slots());
    if (act.HasSlot(slot)) continue;
    const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
    if (kind == 0 && schema.IsRequestable(slot)) {
      act.AddRequest(slot);
    } else if (kind == 1) {
      std::vector<std::string> alts;
      const int k = std::uniform_int_distribution<int>(2, 3)(rng);
      for (int j = 0; j < k; ++j) alts.push_back(pick(kWords));
      act.AddInform(slot, SlotValue(alts));
    } else {
      act.AddInform(slot, pick(kWords));
    }
  }
  return act;
}

TEST(FramePropertyTest, RoundTripOverRandomActs) {
  std::mt19937_64 rng(20260101);
  for (int i = 0; i < 5000; ++i) {
    const DialogAct act = RandomAct(rng, MovieSchema());
    ASSERT_TRUE(ValidateAct(act, MovieSchema()).empty());
    const std::string text = SerializeFrame(act, MovieSchema());
    const DialogAct back = ParseFrame(text, MovieSchema());
    ASSERT_EQ(back, act) << text;
    for (const auto& [slot, v] : back.inform_slots()) {
      ASSERT_FALSE(back.HasRequest(slot));
    }
  }
}

TEST(FramePropertyTest, ParserIsTotal) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "inform(city=;#{})= ab\t\x01\xff_UNK";
  int parsed = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string text;
    const int len = std::uniform_int_distribution<int>(0, 24)(rng);
    for (int j = 0; j < len; ++j) {
      text += alphabet[std::uniform_int_distribution<std::size_t>(
          0, alphabet.size() - 1)(rng)];
    }
    if (i % 3 == 0) text = "inform(" + text;
    try {
      ParseFrame(text);
      ++parsed;
    } catch (const ParseError& e) {
      ASSERT_LE(e.offset(), text.size()) << text;
    }
  }
  EXPECT_GT(parsed, 0);
}

}  // namespace
}  // namespace tdp

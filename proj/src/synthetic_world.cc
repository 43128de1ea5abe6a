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

#include "tdp/synthetic_world.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include "tdp/errors.h"
#include "tdp/random.h"

namespace tdp {

namespace {

struct City {
  const char* name;
  const char* state;
  const char* zip_prefix;
};

constexpr City kCities[] = {
    {"seattle", "WA", "981"},   {"portland", "OR", "972"}, {"boston", "MA", "021"},
    {"chicago", "IL", "606"},   {"austin", "TX", "787"},   {"denver", "CO", "802"},
    {"san diego", "CA", "921"}, {"atlanta", "GA", "303"},
};
constexpr const char* kChains[] = {"amc", "regal", "cinemark", "landmark"};
constexpr const char* kTheaterWords[] = {"plaza", "commons", "riverside", "uptown",
                                         "harbor", "central", "grand", "lakeview"};
constexpr const char* kMovieFirst[] = {"silent", "crimson", "last", "hidden", "broken",
                                       "golden", "midnight", "electric", "frozen", "lonely"};
constexpr const char* kMovieSecond[] = {"harbor", "kingdom", "signal", "garden", "horizon",
                                        "protocol", "river", "empire"};
constexpr const char* kGenres[] = {"comedy", "action", "drama", "thriller", "animation",
                                   "horror", "romance"};
constexpr const char* kRatings[] = {"pg", "pg-13", "r"};
constexpr const char* kCritic[] = {"good", "excellent", "mixed"};
constexpr const char* kDates[] = {"today", "tomorrow", "friday", "saturday", "sunday"};
constexpr const char* kTimes[] = {"11:00am", "1:30pm", "3:15pm", "4:45pm", "6:30pm",
                                  "7:15pm", "8:00pm", "9:25pm", "10:40pm"};

template <typename T, std::size_t N>
const T& Pick(const T (&arr)[N], Rng& rng) {
  return arr[rng.UniformIndex(N)];
}

}  // namespace

void SyntheticWorldConfig::Validate() const {
  if (n_records < 1 || n_goals < 1) {
    throw ValidationError("synthetic world needs at least one record and one goal");
  }
  if (!(extra_request_fraction >= 0.0 && extra_request_fraction <= 1.0)) {
    throw ValidationError("extra_request_fraction must lie in [0, 1]");
  }
}

double SyntheticWorld::ExtraRequestShare(const DomainSchema& schema) const {
  if (goals.empty()) return 0.0;
  int n = 0;
  for (const auto& g : goals) {
    for (const auto& s : g.request_slots) {
      if (s != schema.primary_request_slot()) {
        ++n;
        break;
      }
    }
  }
  return static_cast<double>(n) / static_cast<double>(goals.size());
}

SyntheticWorld GenerateMovieWorld(const DomainSchema& schema,
                                  const SyntheticWorldConfig& config) {
  config.Validate();
  for (const char* s : {"city", "state", "zip", "theater", "theater_chain", "moviename", "genre",
                        "mpaa_rating", "critic_rating", "date", "starttime", "numberofpeople"}) {
    if (!schema.IsInformable(s)) {
      throw SchemaError(s, "movie world generator needs slot '" + std::string(s) + "'");
    }
  }
  Rng rng(config.seed);

  struct Theater {
    std::string name, chain, zip;
    std::size_t city;
  };
  std::vector<Theater> theaters;
  std::set<std::string> theater_names;
  for (std::size_t c = 0; c < std::size(kCities); ++c) {
    while (theaters.size() < 3 * (c + 1)) {
      const std::string chain = Pick(kChains, rng);
      const std::string name = chain + " " + Pick(kTheaterWords, rng) + " " +
                               std::to_string(rng.UniformInt(6, 24));
      if (!theater_names.insert(name).second) continue;
      theaters.push_back({name, chain,
                          std::string(kCities[c].zip_prefix) +
                              std::to_string(rng.UniformInt(10, 99)),
                          c});
    }
  }

  struct Movie {
    std::string name, genre, mpaa, critic;
  };
  std::vector<Movie> movies;
  for (const char* a : kMovieFirst) {
    for (const char* b : kMovieSecond) {
      if (rng.Bernoulli(0.4)) {
        movies.push_back({std::string("the ") + a + " " + b, Pick(kGenres, rng),
                          Pick(kRatings, rng), Pick(kCritic, rng)});
      }
    }
  }

  std::vector<std::map<std::string, std::string>> rows;
  std::set<std::tuple<std::size_t, std::size_t, std::string, std::string>> seen;
  while (static_cast<int>(rows.size()) < config.n_records) {
    const std::size_t m = rng.UniformIndex(movies.size());
    const std::size_t t = rng.UniformIndex(theaters.size());
    const std::string date = Pick(kDates, rng);
    const std::string time = Pick(kTimes, rng);
    if (!seen.emplace(m, t, date, time).second) continue;
    const Theater& th = theaters[t];
    const City& city = kCities[th.city];
    rows.push_back({{"moviename", movies[m].name},
                    {"genre", movies[m].genre},
                    {"mpaa_rating", movies[m].mpaa},
                    {"critic_rating", movies[m].critic},
                    {"theater", th.name},
                    {"theater_chain", th.chain},
                    {"zip", th.zip},
                    {"city", city.name},
                    {"state", city.state},
                    {"date", date},
                    {"starttime", time}});
  }

  SyntheticWorld world{KnowledgeBase::FromRecords(schema.domain_name(), rows), {}};

  const int n_extra = static_cast<int>(
      std::ceil(config.extra_request_fraction * static_cast<double>(config.n_goals)));
  std::vector<char> extra(static_cast<std::size_t>(config.n_goals), 0);
  std::fill(extra.begin(), extra.begin() + n_extra, 1);
  rng.Shuffle(extra);

  static const std::vector<std::string> kAskable = {"theater", "starttime", "date", "city"};
  for (int i = 0; i < config.n_goals; ++i) {
    const auto& row = rows[rng.UniformIndex(rows.size())];
    UserGoal g;
    g.request_slots.insert(schema.primary_request_slot());
    if (extra[static_cast<std::size_t>(i)]) {
      const int k = rng.UniformInt(1, 2);
      while (static_cast<int>(g.request_slots.size()) < k + 1) {
        g.request_slots.insert(kAskable[rng.UniformIndex(kAskable.size())]);
      }
    }
    g.inform_slots.insert_or_assign("moviename", SlotValue(row.at("moviename")));
    g.inform_slots.insert_or_assign("numberofpeople",
                                    SlotValue(std::to_string(rng.UniformInt(1, 6))));
    for (const auto& s : kAskable) {
      if (g.request_slots.count(s) || !rng.Bernoulli(0.6)) continue;
      g.inform_slots.insert_or_assign(s, SlotValue(row.at(s)));
    }
    world.goals.push_back(std::move(g));
  }
  return world;
}

nlohmann::ordered_json KbToJson(const KnowledgeBase& kb) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : kb.records()) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.slots) o[k] = v;
    arr.push_back(std::move(o));
  }
  return arr;
}

}  // namespace tdp

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

// Seeded generator for movie-ticket worlds: a showtime KB and a goal DB
// whose goals are all bookable against it.

#ifndef TDP_SYNTHETIC_WORLD_H_
#define TDP_SYNTHETIC_WORLD_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "tdp/corpus.h"
#include "tdp/knowledge_base.h"
#include "tdp/schema.h"

namespace tdp {

struct SyntheticWorldConfig {
  int n_records = 1200;
  int n_goals = 240;
  // Share of goals that also request slots other than the primary one.
  double extra_request_fraction = 0.6;
  std::uint64_t seed = 1;

  void Validate() const;
};

struct SyntheticWorld {
  KnowledgeBase kb;
  std::vector<UserGoal> goals;

  // Share of goals with at least one non-primary request slot.
  double ExtraRequestShare(const DomainSchema& schema) const;
};

// The schema must be the movie schema (or a superset of its slots).
SyntheticWorld GenerateMovieWorld(const DomainSchema& schema,
                                  const SyntheticWorldConfig& config);

// KB records as a JSON array of flat objects, in id order.
nlohmann::ordered_json KbToJson(const KnowledgeBase& kb);

}  // namespace tdp

#endif  // TDP_SYNTHETIC_WORLD_H_

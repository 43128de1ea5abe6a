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

// Episode runner, exact metrics, DQN training loop and reports.

#ifndef TDP_EVAL_HARNESS_H_
#define TDP_EVAL_HARNESS_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tdp/corpus.h"
#include "tdp/dialogue_agents.h"
#include "tdp/errors.h"
#include "tdp/knowledge_base.h"
#include "tdp/nl_interface.h"
#include "tdp/q_function.h"
#include "tdp/random.h"
#include "tdp/rational.h"
#include "tdp/schema.h"
#include "tdp/user_simulator.h"

namespace tdp {

enum class Mode { kFrame, kNaturalLanguage };
std::string_view ModeName(Mode m);
Mode ModeFromName(std::string_view name);  // "frame" | "nl"

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string_view kind() const = 0;
  // Index into FeasibleActions(schema). `epsilon` only affects learned
  // agents. Must be safe to call concurrently.
  virtual int SelectAction(const DialogueState& state, double epsilon,
                           Rng& rng) const = 0;
};

class RuleAgent : public Agent {
 public:
  explicit RuleAgent(const DomainSchema& schema) : policy_(schema) {}
  std::string_view kind() const override { return "rule"; }
  int SelectAction(const DialogueState& state, double epsilon,
                   Rng& rng) const override;

 private:
  RulePolicy policy_;
};

class RlAgent : public Agent {
 public:
  RlAgent(const DomainSchema& schema, int max_turns, std::unique_ptr<QFunction> q);
  // A fresh MLP (hidden == 0: linear) sized for the schema.
  static RlAgent Create(const DomainSchema& schema, int max_turns, int hidden,
                        std::uint64_t seed);
  static RlAgent CreateTabular(const DomainSchema& schema, int max_turns);

  std::string_view kind() const override { return "rl"; }
  int SelectAction(const DialogueState& state, double epsilon,
                   Rng& rng) const override;

  const Featurizer& featurizer() const { return featurizer_; }
  QFunction& q() { return *q_; }
  const QFunction& q() const { return *q_; }
  void set_q(std::unique_ptr<QFunction> q);

 private:
  Featurizer featurizer_;
  std::unique_ptr<QFunction> q_;
};

// Non-owning view of everything an episode needs. The NL interfaces are
// only required in natural-language mode: user_nl reads and writes user
// utterances, agent_nl agent utterances.
struct Environment {
  const DomainSchema* schema = nullptr;
  const KnowledgeBase* kb = nullptr;
  const std::vector<UserGoal>* goals = nullptr;
  SimConfig sim;
  RewardConfig reward;
  const NlInterface* user_nl = nullptr;
  const NlInterface* agent_nl = nullptr;

  // reward defaults to RewardConfig::ForMaxTurns(sim.max_turns).
  Environment(const DomainSchema& schema, const KnowledgeBase& kb,
              const std::vector<UserGoal>& goals, SimConfig sim = {});
};

struct Exchange {
  DialogAct user_act;   // the user act the agent answered
  DialogAct agent_act;  // as received by the simulator
  int reward = 0;       // step reward of this agent turn
  std::string user_text;   // NL mode only
  std::string agent_text;  // NL mode only
};

struct EpisodeRecord {
  UserGoal goal;
  Mode mode = Mode::kFrame;
  std::vector<Exchange> exchanges;
  DialogAct final_user_act;
  std::string final_user_text;
  Outcome outcome;
  int n_turns = 0;  // acts by either party
  int terminal_reward = 0;
  int cumulative_reward = 0;  // sum of step rewards + terminal_reward

  bool success() const { return outcome.success(); }
  nlohmann::ordered_json ToJson(const DomainSchema& schema) const;
  // Frame strings of every act in order, user first.
  std::vector<std::string> ActSequence(const DomainSchema& schema) const;
};

struct EpisodeOptions {
  Mode mode = Mode::kFrame;
  double epsilon = 0.0;
  const UserGoal* goal = nullptr;  // otherwise sampled from env.goals
  // When set, one transition per agent turn is appended.
  const Featurizer* featurizer = nullptr;
  std::vector<Transition>* transitions = nullptr;
};

// Throws ProtocolError if the agent picks an action outside the table or
// binds an act the schema rejects.
EpisodeRecord RunEpisode(const Agent& agent, const Environment& env,
                         std::uint64_t seed, const EpisodeOptions& options = {});

struct Metrics {
  std::int64_t n_episodes = 0;
  std::int64_t successes = 0;
  Rational success_rate;
  Rational avg_turns;
  Rational avg_reward;

  nlohmann::ordered_json ToJson() const;
  static Metrics FromJson(const nlohmann::json& j);
  bool operator==(const Metrics&) const = default;
};

// Throws ValidationError on an empty batch.
Metrics Aggregate(const std::vector<EpisodeRecord>& episodes);

struct Evaluation {
  Metrics metrics;
  std::vector<EpisodeRecord> episodes;
};

// Greedy rollouts; episode i uses seed DeriveSeed(seed, i). `threads` only
// changes speed, never results.
Evaluation Evaluate(const Agent& agent, const Environment& env, int n_episodes,
                    std::uint64_t seed, Mode mode = Mode::kFrame, int threads = 1);

struct TrainSchedule {
  int n_epochs = 100;
  int episodes_per_epoch = 100;
  std::size_t buffer_size = 10000;
  std::size_t batch_size = 16;
  int eval_every = 10;  // epochs
  int eval_episodes = 200;
  int train_steps_per_epoch = 100;
  int warm_start_episodes = 0;  // rule-agent rollouts added to the buffer first
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of all training episodes
  int threads = 1;
  QHyper hyper;

  void Validate() const;
  double EpsilonAt(std::int64_t episode) const;
  std::int64_t total_episodes() const {
    return static_cast<std::int64_t>(n_epochs) * episodes_per_epoch;
  }
  nlohmann::ordered_json ToJson() const;
  static TrainSchedule FromJson(const nlohmann::json& j);
};

struct CurvePoint {
  std::int64_t episode = 0;  // training episodes completed
  Metrics metrics;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  Metrics best_metrics;
  std::int64_t best_episode = 0;
  std::int64_t episodes_trained = 0;
  double last_loss = 0.0;
};

// Raised by Train when an update produces non-finite parameters; holds the
// best model seen so far.
class TrainingDivergedAt : public TrainingDiverged {
 public:
  TrainingDivergedAt(const std::string& what, std::int64_t episode,
                     std::shared_ptr<const QFunction> last_good)
      : TrainingDiverged(what), episode_(episode), last_good_(std::move(last_good)) {}
  std::int64_t episode() const { return episode_; }
  const std::shared_ptr<const QFunction>& last_good() const { return last_good_; }

 private:
  std::int64_t episode_;
  std::shared_ptr<const QFunction> last_good_;
};

using TrainProgress = std::function<void(const CurvePoint&)>;

// Epoch loop: roll out with the scheduled epsilon, add transitions to the
// replay ring, run the train steps, evaluate greedily every eval_every
// epochs and after the last one. On return the agent holds the best model
// by (success_rate, avg_reward), earliest first.
TrainResult Train(RlAgent& agent, const Environment& env,
                  const TrainSchedule& schedule, std::uint64_t seed,
                  const TrainProgress& progress = {});

struct Report {
  std::vector<std::string> labels;
  std::vector<Metrics> rows;

  // Fixed-width table; a delta column against the first row appears when
  // there are two or more rows.
  std::string Text() const;
  nlohmann::ordered_json ToJson() const;
};

// Throws EmptyReport on no rows and ValidationError on a length mismatch.
Report MakeReport(const std::vector<Metrics>& metrics,
                  const std::vector<std::string>& labels);

// `episode,success_rate,avg_turns,avg_reward`, rates as decimals.
std::string CurveCsv(const std::vector<CurvePoint>& curve);

// Rational printed as a decimal with `digits` places, rounded half away
// from zero.
std::string FormatDecimal(const Rational& r, int digits = 4);

}  // namespace tdp

#endif  // TDP_EVAL_HARNESS_H_

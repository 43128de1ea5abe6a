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

// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion
// numbers as arguments to run a subset. Exits non-zero if any check fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tdp/corpus.h"
#include "tdp/eval_harness.h"
#include "tdp/knowledge_base.h"
#include "tdp/nl_interface.h"
#include "tdp/q_function.h"
#include "tdp/synthetic_world.h"
#include "test_util.h"

namespace tdp {
namespace {

namespace fs = std::filesystem;
using ::tdp::testing::DataPath;
using ::tdp::testing::MovieSchema;
using ::tdp::testing::ReadFile;
using ::tdp::testing::ReadJson;
using ::tdp::testing::ResourcePath;
using ::tdp::testing::RestaurantSchema;

// Pinned thresholds.
constexpr std::size_t kMinGoldenActs = 30;
constexpr std::size_t kMinWorldRecords = 1000;
constexpr std::size_t kMinWorldGoals = 200;
constexpr double kMinExtraRequestShare = 0.5;
constexpr std::int64_t kMaxTrainingEpisodes = 20000;
constexpr int kWorldEvalEpisodes = 500;
constexpr double kMinSuccessMargin = 0.10;
constexpr double kMaxWorldSeconds = 600.0;
constexpr int kGradientNetworks = 100;
constexpr double kMaxGradientRelError = 1e-4;
constexpr double kFiniteDifferenceStep = 1e-5;

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Accumulates failed checks with a short reason each.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 3) failures_.push_back(what);
    if (!ok) ++n_failed_;
  }
  Verdict Done(const std::string& summary) const {
    Verdict v;
    v.pass = n_failed_ == 0;
    v.detail = summary;
    if (!v.pass) {
      v.detail += "; " + std::to_string(n_failed_) + " failed check(s):";
      for (const auto& f : failures_) v.detail += " [" + f + "]";
    }
    return v;
  }

 private:
  int n_failed_ = 0;
  std::vector<std::string> failures_;
};

std::string Str(const DialogAct& a) { return SerializeFrame(a, MovieSchema()); }

std::string Fixed(double x, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << x;
  return s.str();
}

const KnowledgeBase& BookingKb() {
  static const KnowledgeBase kb =
      KnowledgeBase::FromFile(DataPath("booking.kb.json"), MovieSchema());
  return kb;
}

const std::vector<UserGoal>& BookingGoals() {
  static const std::vector<UserGoal> goals = LoadGoalDbFile(DataPath("booking.goals.json"));
  return goals;
}

NlInterface MakeNl(const std::string& templates, const KnowledgeBase& kb) {
  return NlInterface(MovieSchema(), TemplateTable::FromFile(ResourcePath(templates), MovieSchema()),
                     Lexicon::FromFile(ResourcePath("movie.lexicon.json")), kb.Vocabulary());
}

class UniformAgent : public Agent {
 public:
  explicit UniformAgent(int n) : n_(n) {}
  std::string_view kind() const override { return "uniform"; }
  int SelectAction(const DialogueState&, double, Rng& rng) const override {
    return static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(n_)));
  }

 private:
  int n_;
};

int NumActions() { return static_cast<int>(FeasibleActions(MovieSchema()).size()); }

// 1: golden acts survive ParseFrame -> SerializeFrame -> ParseFrame.
Verdict FrameDslGoldens() {
  Checker c;
  const auto golden = ReadJson(DataPath("golden_acts.json"));
  std::size_t ok = 0;
  for (const auto& entry : golden) {
    const std::string text = entry["act"];
    const DomainSchema& schema =
        entry.value("domain", std::string("movie")) == "restaurant" ? RestaurantSchema()
                                                                    : MovieSchema();
    try {
      const DialogAct first = ParseFrame(text);
      const std::string once = SerializeFrame(first, schema);
      const DialogAct second = ParseFrame(once);
      const bool same = first == second && once == SerializeFrame(second, schema);
      c.Expect(same, text);
      ok += same;
    } catch (const Error& e) {
      c.Expect(false, text + ": " + e.what());
    }
  }
  c.Expect(golden.size() >= kMinGoldenActs, "fewer than 30 golden acts");
  return c.Done(std::to_string(ok) + "/" + std::to_string(golden.size()) +
                " acts round-trip (need >= " + std::to_string(kMinGoldenActs) + ")");
}

std::vector<int> Ids(const std::vector<const KbRecord*>& rs) {
  std::vector<int> ids;
  for (const KbRecord* r : rs) ids.push_back(r->id);
  return ids;
}

// 2: the two-record movie fixture.
Verdict KbFixture() {
  Checker c;
  const auto kb = KnowledgeBase::FromFile(ResourcePath("movie.kb.json"), MovieSchema());
  c.Expect(Ids(kb.Query({{"city", "seattle"}})) == std::vector<int>{2}, "city=seattle");
  c.Expect(Ids(kb.Query({{"moviename", "zootopia"}})) == std::vector<int>{1, 2},
           "moviename=zootopia");
  c.Expect(kb.Query({{"city", "boston"}}).empty(), "city=boston");
  const auto hist = kb.AvailableValues("starttime", {{"moviename", "zootopia"}});
  c.Expect(hist == std::map<std::string, int>{{"10:30am", 1}, {"6:30pm", 1}},
           "starttime histogram");
  return c.Done("seattle->{2}, zootopia->{1,2}, boston->{}, starttime {10:30am:1, 6:30pm:1}");
}

// 3: both extraction methods against the committed oracle.
Verdict GoalExtraction() {
  Checker c;
  const auto oracle = ReadJson(DataPath("goals.oracle.json"));
  int compared = 0;
  for (const auto& [file, schema] :
       {std::pair{"movie_dialogue.corpus.json", &MovieSchema()},
        std::pair{"restaurant_dialogue.corpus.json", &RestaurantSchema()}}) {
    const Corpus corpus = LoadCorpusFile(DataPath(file), *schema);
    c.Expect(corpus.report.ok(), std::string(file) + " has validation issues");
    const auto first = ExtractGoalsFirstTurn(corpus.dialogues);
    const auto aggregate = ExtractGoalsAggregate(corpus.dialogues);
    for (std::size_t i = 0; i < corpus.dialogues.size(); ++i) {
      const std::string& id = corpus.dialogues[i].id;
      c.Expect(first.goals.at(i) == UserGoal::FromJson(oracle.at(id).at("first_turn")),
               id + " first_turn");
      c.Expect(aggregate.goals.at(i) == UserGoal::FromJson(oracle.at(id).at("aggregate")),
               id + " aggregate");
      compared += 2;
    }
  }
  c.Expect(compared == 2 * static_cast<int>(oracle.size()), "oracle entries not all covered");
  return c.Done(std::to_string(compared) + " extracted goals equal the oracle");
}

TrainSchedule BookingSchedule() {
  TrainSchedule s;
  s.n_epochs = 60;
  s.episodes_per_epoch = 50;
  s.train_steps_per_epoch = 100;
  s.warm_start_episodes = 50;
  s.eval_every = 5;
  s.eval_episodes = 20;
  return s;
}

// 4: rule agent contrast on the two goals and a DQN that solves both, per seed.
Verdict BookingDynamics() {
  Checker c;
  const Environment env(MovieSchema(), BookingKb(), BookingGoals());
  const RuleAgent rule(MovieSchema());
  const UserGoal& informed = BookingGoals().at(0);
  const UserGoal& requesting = BookingGoals().at(1);
  std::string turns;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::string tag = "seed " + std::to_string(seed);
    EpisodeOptions lo, ro;
    lo.goal = &informed;
    ro.goal = &requesting;
    const EpisodeRecord a = RunEpisode(rule, env, seed, lo);
    const EpisodeRecord b = RunEpisode(rule, env, seed, ro);
    c.Expect(a.success(), tag + " rule fails the informed goal");
    c.Expect(b.outcome.status == EpisodeStatus::kFailure &&
                 b.outcome.reason == FailureReason::kUnansweredRequests,
             tag + " rule requesting goal is not an unanswered_requests failure");

    RlAgent agent = RlAgent::Create(MovieSchema(), env.sim.max_turns, 64, seed);
    Train(agent, env, BookingSchedule(), seed);
    for (const UserGoal* g : {&informed, &requesting}) {
      EpisodeOptions o;
      o.goal = g;
      const EpisodeRecord r = RunEpisode(agent, env, seed, o);
      c.Expect(r.success(), tag + (g == &informed ? " rl fails informed" : " rl fails requesting"));
      turns += (turns.empty() ? "" : ",") + std::to_string(r.n_turns);
    }
  }
  return c.Done("rule: informed success, requesting unanswered_requests; rl succeeds on both at seeds 1..5 "
                "(rl turns " + turns + ", " +
                std::to_string(BookingSchedule().total_episodes()) + " episodes per seed)");
}

// 5: synthetic world, DQN vs rule agent, greedy evaluation.
Verdict SyntheticWorldLearning() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  const DomainSchema& schema = MovieSchema();
  const SyntheticWorld world = GenerateMovieWorld(schema, SyntheticWorldConfig{});
  const double share = world.ExtraRequestShare(schema);
  c.Expect(world.kb.size() >= kMinWorldRecords, "KB too small");
  c.Expect(world.goals.size() >= kMinWorldGoals, "too few goals");
  c.Expect(share >= kMinExtraRequestShare, "too few goals with non-primary requests");

  const Environment env(schema, world.kb, world.goals);
  TrainSchedule s;
  s.n_epochs = 150;
  s.episodes_per_epoch = 100;
  s.train_steps_per_epoch = 100;
  s.warm_start_episodes = 200;
  s.eval_every = 5;
  s.eval_episodes = 100;
  const std::int64_t budget = s.total_episodes() + s.warm_start_episodes;
  c.Expect(budget <= kMaxTrainingEpisodes, "training budget above 20000 episodes");

  const RuleAgent rule(schema);
  const Metrics rm = Evaluate(rule, env, kWorldEvalEpisodes, 11).metrics;
  RlAgent agent = RlAgent::Create(schema, env.sim.max_turns, 64, 5);
  Train(agent, env, s, 3);
  const Metrics am = Evaluate(agent, env, kWorldEvalEpisodes, 11).metrics;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Rational margin = am.success_rate - rm.success_rate;
  c.Expect(margin.ToDouble() >= kMinSuccessMargin, "rl margin below 0.10");
  c.Expect(seconds < kMaxWorldSeconds, "over 10 minutes");
  return c.Done(std::to_string(world.kb.size()) + " records, " +
                std::to_string(world.goals.size()) + " goals, extra-request share " +
                Fixed(share, 3) + "; " + std::to_string(budget) +
                " training episodes; rl " + FormatDecimal(am.success_rate) + " vs rule " +
                FormatDecimal(rm.success_rate) + " over " + std::to_string(kWorldEvalEpisodes) +
                " episodes (margin " + FormatDecimal(margin) + ", need >= 0.10); " +
                Fixed(seconds, 1) + "s (limit 600s)");
}

EpisodeRecord Fabricated(bool success, int turns, int reward) {
  EpisodeRecord r;
  r.outcome.status = success ? EpisodeStatus::kSuccess : EpisodeStatus::kFailure;
  r.n_turns = turns;
  r.cumulative_reward = reward;
  return r;
}

// 6: metrics are exact rationals; a success beats a failure of equal length.
Verdict MetricCoherence() {
  Checker c;
  std::vector<EpisodeRecord> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(Fabricated(i < 7, 3 + i % 2, i < 7 ? 70 : -50));
  const Metrics m = Aggregate(ten);
  c.Expect(m.success_rate == Rational(7, 10), "7 of 10 is not 7/10");
  c.Expect(m.avg_turns == Rational(7, 2), "avg turns");
  c.Expect(m.avg_reward == Rational(34), "avg reward");
  c.Expect(Metrics::FromJson(nlohmann::json::parse(m.ToJson().dump())) == m, "JSON round trip");

  const Environment env(MovieSchema(), BookingKb(), BookingGoals(), SimConfig{8, std::nullopt, 0, 0.0});
  const UniformAgent uniform(NumActions());
  const RuleAgent rule(MovieSchema());
  std::map<int, std::pair<int, int>> by_len;  // turns -> (min success, max failure)
  int episodes = 0;
  for (const Agent* agent : {static_cast<const Agent*>(&uniform), static_cast<const Agent*>(&rule)}) {
    const Evaluation ev = Evaluate(*agent, env, 400, 5);
    std::int64_t successes = 0, turns = 0, reward = 0;
    for (const auto& e : ev.episodes) {
      successes += e.success();
      turns += e.n_turns;
      reward += e.cumulative_reward;
      auto [it, fresh] = by_len.try_emplace(e.n_turns, 1 << 30, -(1 << 30));
      if (e.success()) {
        it->second.first = std::min(it->second.first, e.cumulative_reward);
      } else {
        it->second.second = std::max(it->second.second, e.cumulative_reward);
      }
      ++episodes;
    }
    c.Expect(ev.metrics.success_rate == Rational(successes, 400), "success rate recomputation");
    c.Expect(ev.metrics.avg_turns == Rational(turns, 400), "avg turns recomputation");
    c.Expect(ev.metrics.avg_reward == Rational(reward, 400), "avg reward recomputation");
  }
  int lengths = 0;
  for (const auto& [len, p] : by_len) {
    if (p.first == (1 << 30) || p.second == -(1 << 30)) continue;
    c.Expect(p.first > p.second, "failure out-rewards success at " + std::to_string(len) + " turns");
    ++lengths;
  }
  c.Expect(lengths > 0, "no length with both outcomes");
  // Closed form over every length the cap allows.
  for (int len = 3; len <= 2 * env.sim.max_turns + 1; len += 2) {
    const int steps = -(len - 1) / 2;
    c.Expect(steps + Reward(EpisodeStatus::kSuccess, env.reward) >
                 steps + Reward(EpisodeStatus::kFailure, env.reward),
             "reward rule at " + std::to_string(len));
  }
  return c.Done("exact 7/10, 7/2, 34 and recomputed sums over " + std::to_string(episodes) +
                " episodes; success > failure at " + std::to_string(lengths) +
                " shared lengths");
}

// 7: nlu(nlg(a)) == a over both action spaces, and NL episodes equal frame episodes.
Verdict ClosedLoopNl() {
  Checker c;
  const NlInterface user_nl = MakeNl("movie.user.templates.json", BookingKb());
  const NlInterface agent_nl = MakeNl("movie.agent.templates.json", BookingKb());
  int agent_acts = 0, user_acts = 0;
  const auto loop = [&](const NlInterface& nl, const DialogAct& act, const DialogAct* ctx, int* n) {
    const std::string text = nl.Render(act, ctx);
    c.Expect(nl.Parse(text, ctx) == act, Str(act) + " -> " + text);
    ++*n;
  };

  const auto vocab = BookingKb().Vocabulary();
  const auto table = FeasibleActions(MovieSchema());
  for (const auto& a : table) {
    if (a.kind == AgentAction::Kind::kInform) {
      std::vector<std::string> values = {std::string(kNoBookingValue)};
      auto it = vocab.find(a.slot);
      if (it != vocab.end()) values.insert(values.end(), it->second.begin(), it->second.end());
      for (const auto& v : values) {
        loop(agent_nl, DialogAct(intents::kInform).AddInform(a.slot, v), nullptr, &agent_acts);
      }
    } else if (a.kind == AgentAction::Kind::kTaskComplete) {
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
          loop(agent_nl, act, nullptr, &agent_acts);
        }
      }
      loop(agent_nl, ParseFrame("inform(taskcomplete=none)", MovieSchema()), nullptr, &agent_acts);
    } else {
      loop(agent_nl, a.act_template, nullptr, &agent_acts);
    }
  }

  Rng rng(21);
  std::vector<UserGoal> goals = BookingGoals();
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
      goals.push_back(g);
    }
  }
  for (int k : {-1, 0, 1, 3}) {
    SimConfig config;
    config.max_turns = 12;
    if (k >= 0) config.first_turn_inform_count = k;
    UserSimulator sim(MovieSchema(), BookingKb(), config);
    for (const auto& goal : goals) {
      auto [state, user] = sim.Reset(goal);
      loop(user_nl, user, nullptr, &user_acts);
      while (state.status == EpisodeStatus::kOngoing) {
        DialogAct agent = table[rng.UniformIndex(table.size())].act_template;
        if (!agent.request_slots().empty() && agent.is(intents::kInform)) {
          agent = DialogAct(intents::kInform);
          const std::string slot = table[rng.UniformIndex(22)].slot;
          auto it = vocab.find(slot);
          agent.AddInform(slot, it == vocab.end()
                                    ? std::string("2")
                                    : it->second[rng.UniformIndex(it->second.size())]);
        }
        user = sim.Step(state, agent).user_act;
        loop(user_nl, user, &agent, &user_acts);
      }
    }
  }

  Environment env(MovieSchema(), BookingKb(), BookingGoals(), SimConfig{12, 1, 0, 0.0});
  env.user_nl = &user_nl;
  env.agent_nl = &agent_nl;
  const RuleAgent rule(MovieSchema());
  const UniformAgent uniform(NumActions());
  int episodes = 0;
  for (const Agent* agent : {static_cast<const Agent*>(&rule), static_cast<const Agent*>(&uniform)}) {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
      EpisodeOptions nl;
      nl.mode = Mode::kNaturalLanguage;
      const EpisodeRecord a = RunEpisode(*agent, env, seed);
      const EpisodeRecord b = RunEpisode(*agent, env, seed, nl);
      c.Expect(a.ActSequence(MovieSchema()) == b.ActSequence(MovieSchema()) &&
                   a.cumulative_reward == b.cumulative_reward,
               "episode " + std::to_string(seed) + " differs between modes");
      ++episodes;
    }
  }
  return c.Done(std::to_string(agent_acts) + " agent acts, " + std::to_string(user_acts) +
                " simulator acts round-trip; " + std::to_string(episodes) +
                " episodes identical in frame and NL mode");
}

double Norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// 8: analytic gradients of the TD loss against central differences.
Verdict GradientCheck() {
  Checker c;
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < kGradientNetworks; ++trial) {
    const int in = rng.UniformInt(1, 8);
    const int hidden = rng.UniformInt(0, 8);
    const int out = rng.UniformInt(1, 5);
    QNetwork net(in, hidden, out, rng);
    std::vector<Transition> batch;
    const int n = rng.UniformInt(1, 6);
    for (int i = 0; i < n; ++i) {
      Transition t;
      for (int k = 0; k < in; ++k) t.features.push_back(rng.Uniform() * 2.0 - 1.0);
      for (int k = 0; k < in; ++k) t.next_features.push_back(rng.Uniform() * 2.0 - 1.0);
      t.action = rng.UniformInt(0, out - 1);
      t.reward = rng.Uniform() * 10.0 - 5.0;
      t.terminal = rng.Bernoulli(0.3);
      batch.push_back(std::move(t));
    }
    const auto targets = BellmanTargets(net, batch, 0.9);
    const auto g = net.Gradient(batch, targets);
    std::vector<double> p = net.params();
    std::vector<double> diff(g.size()), fd(g.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + kFiniteDifferenceStep;
      const double up = net.Loss(p, batch, targets);
      p[i] = keep - kFiniteDifferenceStep;
      const double down = net.Loss(p, batch, targets);
      p[i] = keep;
      fd[i] = (up - down) / (2 * kFiniteDifferenceStep);
      diff[i] = g[i] - fd[i];
    }
    const double rel = Norm(diff) / std::max(Norm(g) + Norm(fd), 1e-12);
    worst = std::max(worst, rel);
    c.Expect(rel < kMaxGradientRelError, "network " + std::to_string(trial));
  }
  std::ostringstream w;
  w << worst;
  return c.Done(std::to_string(kGradientNetworks) + " networks, worst relative error " + w.str() +
                " (limit 1e-4)");
}

std::string RunCli(const std::string& args, const fs::path& dir, int* exit_code) {
  const std::string out = (dir / "stdout").string();
  const std::string cmd = std::string(TDP_CLI_PATH) + " " + args + " >" + out + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return ReadFile(out);
}

// 9: the CLI's machine-readable outputs repeat byte for byte.
Verdict CliDeterminism() {
  Checker c;
  const fs::path dir = fs::temp_directory_path() / ("tdp_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string world =
      " --kb " + DataPath("booking.kb.json") + " --goals " + DataPath("booking.goals.json");
  const std::string ckpt = (dir / "rl.json").string();
  int code = 0;
  RunCli("train --epochs 4 --episodes-per-epoch 25 --eval-every 2 --eval-episodes 20 --hidden 16"
         " --checkpoint " + ckpt + world,
         dir, &code);
  c.Expect(code == 0, "train exited " + std::to_string(code));
  const std::vector<std::string> commands = {
      "simulate --json --agent rule --episodes 200 --seed 1" + world,
      "simulate --json --agent rl --checkpoint " + ckpt + " --episodes 200 --seed 1" + world,
      "simulate --json --agent rule --episodes 50 --seed 9 --mode nl" + world,
      "evaluate --json --agent rule --agent rl:" + ckpt + " --episodes 200 --seed 3" + world,
  };
  std::size_t bytes = 0;
  for (const std::string& cmd : commands) {
    int c1 = 0, c2 = 0;
    const std::string a = RunCli(cmd, dir, &c1);
    const std::string b = RunCli(cmd + " --threads 2", dir, &c2);
    c.Expect(c1 == 0 && c2 == 0, cmd.substr(0, cmd.find(' ')) + " exited non-zero");
    c.Expect(!a.empty() && a == b, cmd.substr(0, 40) + "... differs across runs");
    bytes += a.size();
  }
  fs::remove_all(dir);
  return c.Done(std::to_string(commands.size()) + " simulate/evaluate invocations repeated, " +
                std::to_string(bytes) + " bytes identical");
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

int Main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "frame DSL golden suite", FrameDslGoldens},
      {2, "KB fixture", KbFixture},
      {3, "goal extraction oracle", GoalExtraction},
      {4, "two-goal booking dynamics", BookingDynamics},
      {5, "synthetic world learning", SyntheticWorldLearning},
      {6, "metric coherence", MetricCoherence},
      {7, "closed-loop NL", ClosedLoopNl},
      {8, "gradient check", GradientCheck},
      {9, "CLI determinism", CliDeterminism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& cr : all) {
    if (!only.empty() && !only.count(cr.id)) continue;
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << cr.id << "] " << cr.name << ": "
              << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace tdp

int main(int argc, char** argv) { return tdp::Main(argc, argv); }

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

#include "tdp/eval_harness.h"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace tdp {

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
// exception is rethrown after all workers stop.
template <typename Fn>
void ParallelFor(int n, int threads, Fn fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) {
        {
          std::lock_guard<std::mutex> lock(mu);
          if (error) return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

Rational ParseRational(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  const std::string s = j.get<std::string>();
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s));
    return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw ValidationError("bad rational '" + s + "'");
  }
}

std::string Pad(const std::string& s, std::size_t width, bool left) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::string_view ModeName(Mode m) {
  return m == Mode::kFrame ? "frame" : "nl";
}

Mode ModeFromName(std::string_view name) {
  if (name == "frame") return Mode::kFrame;
  if (name == "nl" || name == "natural_language") return Mode::kNaturalLanguage;
  throw ValidationError("unknown mode '" + std::string(name) + "'");
}

// Agents

int RuleAgent::SelectAction(const DialogueState& state, double /*epsilon*/,
                            Rng& /*rng*/) const {
  return policy_.SelectAction(state);
}

RlAgent::RlAgent(const DomainSchema& schema, int max_turns,
                 std::unique_ptr<QFunction> q)
    : featurizer_(schema, max_turns) {
  set_q(std::move(q));
  const int n = static_cast<int>(FeasibleActions(schema).size());
  if (q_->num_actions() != n) {
    throw ValidationError("Q-function has " + std::to_string(q_->num_actions()) +
                          " actions, schema has " + std::to_string(n));
  }
}

RlAgent RlAgent::Create(const DomainSchema& schema, int max_turns, int hidden,
                        std::uint64_t seed) {
  Rng rng(seed);
  const Featurizer f(schema, max_turns);
  const int n = static_cast<int>(FeasibleActions(schema).size());
  return RlAgent(schema, max_turns, std::make_unique<QNetwork>(f.size(), hidden, n, rng));
}

RlAgent RlAgent::CreateTabular(const DomainSchema& schema, int max_turns) {
  const Featurizer f(schema, max_turns);
  const int n = static_cast<int>(FeasibleActions(schema).size());
  return RlAgent(schema, max_turns, std::make_unique<TabularQ>(f.size(), n));
}

void RlAgent::set_q(std::unique_ptr<QFunction> q) {
  if (!q) throw ValidationError("RL agent needs a Q-function");
  if (q->input_size() != featurizer_.size()) {
    throw ValidationError("Q-function input size " + std::to_string(q->input_size()) +
                          " does not match features " +
                          std::to_string(featurizer_.size()));
  }
  q_ = std::move(q);
}

int RlAgent::SelectAction(const DialogueState& state, double epsilon, Rng& rng) const {
  return tdp::SelectAction(*q_, featurizer_(state), epsilon, rng);
}

Environment::Environment(const DomainSchema& s, const KnowledgeBase& k,
                         const std::vector<UserGoal>& g, SimConfig sim_config)
    : schema(&s),
      kb(&k),
      goals(&g),
      sim(sim_config),
      reward(RewardConfig::ForMaxTurns(sim_config.max_turns)) {}

// Episodes

nlohmann::ordered_json EpisodeRecord::ToJson(const DomainSchema& schema) const {
  nlohmann::ordered_json j;
  j["goal"] = goal.ToJson(&schema);
  j["mode"] = std::string(ModeName(mode));
  auto& ex = j["exchanges"] = nlohmann::ordered_json::array();
  for (const auto& e : exchanges) {
    nlohmann::ordered_json x;
    x["user"] = SerializeFrame(e.user_act, schema);
    if (mode == Mode::kNaturalLanguage) x["user_text"] = e.user_text;
    x["agent"] = SerializeFrame(e.agent_act, schema);
    if (mode == Mode::kNaturalLanguage) x["agent_text"] = e.agent_text;
    x["reward"] = e.reward;
    ex.push_back(std::move(x));
  }
  j["final_user"] = SerializeFrame(final_user_act, schema);
  if (mode == Mode::kNaturalLanguage) j["final_user_text"] = final_user_text;
  j["status"] = std::string(StatusName(outcome.status));
  j["reason"] = std::string(FailureReasonName(outcome.reason));
  if (!outcome.unanswered.empty()) j["unanswered"] = outcome.unanswered;
  if (outcome.booked_record) j["booked_record"] = *outcome.booked_record;
  j["n_turns"] = n_turns;
  j["terminal_reward"] = terminal_reward;
  j["cumulative_reward"] = cumulative_reward;
  return j;
}

std::vector<std::string> EpisodeRecord::ActSequence(const DomainSchema& schema) const {
  std::vector<std::string> out;
  for (const auto& e : exchanges) {
    out.push_back(SerializeFrame(e.user_act, schema));
    out.push_back(SerializeFrame(e.agent_act, schema));
  }
  out.push_back(SerializeFrame(final_user_act, schema));
  return out;
}

EpisodeRecord RunEpisode(const Agent& agent, const Environment& env, std::uint64_t seed,
                         const EpisodeOptions& options) {
  const DomainSchema& schema = *env.schema;
  const bool nl = options.mode == Mode::kNaturalLanguage;
  if (nl && (env.user_nl == nullptr || env.agent_nl == nullptr)) {
    throw ValidationError("natural-language mode needs user and agent NL interfaces");
  }
  if ((options.transitions == nullptr) != (options.featurizer == nullptr)) {
    throw ValidationError("transitions and featurizer must be given together");
  }
  Rng rng(seed);
  SimConfig sim_config = env.sim;
  sim_config.seed = DeriveSeed(seed, 1);
  const UserSimulator sim(schema, *env.kb, sim_config);
  const StateTracker tracker(schema, *env.kb);
  const std::vector<AgentAction> actions = FeasibleActions(schema);

  EpisodeRecord rec;
  rec.mode = options.mode;
  rec.goal = options.goal ? *options.goal : SampleGoal(*env.goals, rng);

  auto [sim_state, user_act] = sim.Reset(rec.goal);
  DialogAct last_agent_received;
  bool have_agent = false;
  std::string user_text;
  auto through_user_channel = [&](const DialogAct& act) {
    if (!nl) return act;
    const DialogAct* ctx = have_agent ? &last_agent_received : nullptr;
    user_text = env.user_nl->Render(act, ctx);
    return env.user_nl->Parse(user_text, ctx);
  };
  DialogAct heard = through_user_channel(user_act);
  DialogueState state = tracker.Initial();
  tracker.Track(state, heard, Speaker::kUser);

  while (true) {
    std::vector<double> x;
    if (options.featurizer) x = (*options.featurizer)(state);
    const int index = agent.SelectAction(state, options.epsilon, rng);
    if (index < 0 || index >= static_cast<int>(actions.size())) {
      throw ProtocolError("agent chose action " + std::to_string(index) + " outside the table");
    }
    const DialogAct agent_act = BindAction(actions[static_cast<std::size_t>(index)], state, *env.kb);
    if (auto v = ValidateAct(agent_act, schema); !v.empty()) {
      throw ProtocolError("agent act " + SerializeFrame(agent_act, schema) +
                          " is invalid: " + v.front().ToString());
    }
    Exchange ex;
    ex.user_act = heard;
    ex.user_text = user_text;
    DialogAct received = agent_act;
    if (nl) {
      ex.agent_text = env.agent_nl->Render(agent_act, &heard);
      received = env.agent_nl->Parse(ex.agent_text, &heard);
    }
    ex.agent_act = received;
    tracker.Track(state, agent_act, Speaker::kAgent);
    last_agent_received = received;
    have_agent = true;

    const SimStep step = sim.Step(sim_state, received);
    heard = through_user_channel(step.user_act);
    tracker.Track(state, heard, Speaker::kUser);

    ex.reward = env.reward.step_penalty;
    const bool terminal = step.status != EpisodeStatus::kOngoing;
    if (options.transitions) {
      Transition t;
      t.features = std::move(x);
      t.action = index;
      t.reward = ex.reward + (terminal ? Reward(step.status, env.reward) : 0);
      t.next_features = (*options.featurizer)(state);
      t.terminal = terminal;
      options.transitions->push_back(std::move(t));
    }
    rec.exchanges.push_back(std::move(ex));
    if (terminal) break;
  }
  rec.final_user_act = heard;
  rec.final_user_text = nl ? user_text : std::string();
  rec.outcome = sim_state.outcome;
  rec.n_turns = sim_state.turn;
  rec.terminal_reward = Reward(sim_state.status, env.reward);
  rec.cumulative_reward = rec.terminal_reward;
  for (const auto& e : rec.exchanges) rec.cumulative_reward += e.reward;
  return rec;
}

// Metrics

nlohmann::ordered_json Metrics::ToJson() const {
  nlohmann::ordered_json j;
  j["n_episodes"] = n_episodes;
  j["successes"] = successes;
  j["success_rate"] = success_rate.ToDouble();
  j["avg_turns"] = avg_turns.ToDouble();
  j["avg_reward"] = avg_reward.ToDouble();
  j["exact"] = {{"success_rate", success_rate.ToString()},
                {"avg_turns", avg_turns.ToString()},
                {"avg_reward", avg_reward.ToString()}};
  return j;
}

Metrics Metrics::FromJson(const nlohmann::json& j) {
  Metrics m;
  try {
    m.n_episodes = j.at("n_episodes").get<std::int64_t>();
    m.successes = j.at("successes").get<std::int64_t>();
    const auto& e = j.at("exact");
    m.success_rate = ParseRational(e.at("success_rate"));
    m.avg_turns = ParseRational(e.at("avg_turns"));
    m.avg_reward = ParseRational(e.at("avg_reward"));
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("bad metrics JSON: ") + ex.what());
  }
  return m;
}

Metrics Aggregate(const std::vector<EpisodeRecord>& episodes) {
  if (episodes.empty()) throw ValidationError("cannot aggregate zero episodes");
  Metrics m;
  m.n_episodes = static_cast<std::int64_t>(episodes.size());
  std::int64_t turns = 0, reward = 0;
  for (const auto& e : episodes) {
    if (e.success()) ++m.successes;
    turns += e.n_turns;
    reward += e.cumulative_reward;
  }
  m.success_rate = Rational(m.successes, m.n_episodes);
  m.avg_turns = Rational(turns, m.n_episodes);
  m.avg_reward = Rational(reward, m.n_episodes);
  return m;
}

Evaluation Evaluate(const Agent& agent, const Environment& env, int n_episodes,
                    std::uint64_t seed, Mode mode, int threads) {
  if (n_episodes < 1) throw ValidationError("evaluate needs at least one episode");
  Evaluation ev;
  ev.episodes.resize(static_cast<std::size_t>(n_episodes));
  EpisodeOptions opt;
  opt.mode = mode;
  ParallelFor(n_episodes, threads, [&](int i) {
    ev.episodes[static_cast<std::size_t>(i)] =
        RunEpisode(agent, env, DeriveSeed(seed, static_cast<std::uint64_t>(i)), opt);
  });
  ev.metrics = Aggregate(ev.episodes);
  return ev;
}

// Training

void TrainSchedule::Validate() const {
  if (n_epochs < 0) throw ValidationError("n_epochs must be >= 0");
  if (episodes_per_epoch < 1 || buffer_size < 1 || batch_size < 1 || eval_every < 1 ||
      eval_episodes < 1 || train_steps_per_epoch < 0 || warm_start_episodes < 0 ||
      threads < 1) {
    throw ValidationError("training schedule fields must be positive");
  }
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(epsilon_start) || !unit(epsilon_end) || !unit(epsilon_decay_fraction)) {
    throw ValidationError("epsilon schedule values must lie in [0, 1]");
  }
  if (!(hyper.learning_rate >= 0.0) || !(hyper.gamma >= 0.0 && hyper.gamma <= 1.0) ||
      hyper.target_sync < 1) {
    throw ValidationError("bad Q-learning hyperparameters");
  }
}

double TrainSchedule::EpsilonAt(std::int64_t episode) const {
  const double horizon = epsilon_decay_fraction * static_cast<double>(total_episodes());
  if (horizon <= 0.0 || static_cast<double>(episode) >= horizon) return epsilon_end;
  const double f = static_cast<double>(episode) / horizon;
  return epsilon_start + (epsilon_end - epsilon_start) * f;
}

nlohmann::ordered_json TrainSchedule::ToJson() const {
  nlohmann::ordered_json j;
  j["n_epochs"] = n_epochs;
  j["episodes_per_epoch"] = episodes_per_epoch;
  j["buffer_size"] = buffer_size;
  j["batch_size"] = batch_size;
  j["eval_every"] = eval_every;
  j["eval_episodes"] = eval_episodes;
  j["train_steps_per_epoch"] = train_steps_per_epoch;
  j["warm_start_episodes"] = warm_start_episodes;
  j["epsilon_start"] = epsilon_start;
  j["epsilon_end"] = epsilon_end;
  j["epsilon_decay_fraction"] = epsilon_decay_fraction;
  j["hyper"] = hyper.ToJson();
  return j;
}

TrainSchedule TrainSchedule::FromJson(const nlohmann::json& j) {
  TrainSchedule s;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("n_epochs", s.n_epochs);
    get("episodes_per_epoch", s.episodes_per_epoch);
    get("buffer_size", s.buffer_size);
    get("batch_size", s.batch_size);
    get("eval_every", s.eval_every);
    get("eval_episodes", s.eval_episodes);
    get("train_steps_per_epoch", s.train_steps_per_epoch);
    get("warm_start_episodes", s.warm_start_episodes);
    get("epsilon_start", s.epsilon_start);
    get("epsilon_end", s.epsilon_end);
    get("epsilon_decay_fraction", s.epsilon_decay_fraction);
    get("threads", s.threads);
    if (j.contains("hyper")) s.hyper = QHyper::FromJson(j.at("hyper"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad training schedule: ") + e.what());
  }
  s.Validate();
  return s;
}

TrainResult Train(RlAgent& agent, const Environment& env, const TrainSchedule& schedule,
                  std::uint64_t seed, const TrainProgress& progress) {
  schedule.Validate();
  TrainResult result;
  if (schedule.n_epochs == 0) return result;

  const std::uint64_t rollout_seed = DeriveSeed(seed, 1);
  const std::uint64_t warm_seed = DeriveSeed(seed, 2);
  const std::uint64_t eval_seed = DeriveSeed(seed, 3);
  Rng sample_rng(DeriveSeed(seed, 4));
  ReplayBuffer buffer(schedule.buffer_size);

  auto rollouts = [&](const Agent& actor, int n, std::uint64_t base, std::int64_t offset,
                      bool explore) {
    std::vector<std::vector<Transition>> per(static_cast<std::size_t>(n));
    ParallelFor(n, schedule.threads, [&](int i) {
      const std::int64_t episode = offset + i;
      EpisodeOptions opt;
      opt.epsilon = explore ? schedule.EpsilonAt(episode) : 0.0;
      opt.featurizer = &agent.featurizer();
      opt.transitions = &per[static_cast<std::size_t>(i)];
      RunEpisode(actor, env, DeriveSeed(base, static_cast<std::uint64_t>(episode)), opt);
    });
    for (auto& ts : per) {
      for (auto& t : ts) buffer.Add(std::move(t));
    }
  };

  if (schedule.warm_start_episodes > 0) {
    const RuleAgent rule(*env.schema);
    rollouts(rule, schedule.warm_start_episodes, warm_seed, 0, false);
  }

  std::shared_ptr<const QFunction> best(agent.q().Clone());
  bool have_best = false;
  std::int64_t episodes = 0;
  for (int epoch = 0; epoch < schedule.n_epochs; ++epoch) {
    rollouts(agent, schedule.episodes_per_epoch, rollout_seed, episodes, true);
    episodes += schedule.episodes_per_epoch;
    if (buffer.size() >= schedule.batch_size) {
      for (int s = 0; s < schedule.train_steps_per_epoch; ++s) {
        try {
          result.last_loss =
              agent.q().TrainStep(buffer.Sample(schedule.batch_size, sample_rng), schedule.hyper);
        } catch (const TrainingDiverged& e) {
          throw TrainingDivergedAt(e.what(), episodes, best);
        }
      }
    }
    if ((epoch + 1) % schedule.eval_every == 0 || epoch + 1 == schedule.n_epochs) {
      CurvePoint p;
      p.episode = episodes;
      p.metrics = Evaluate(agent, env, schedule.eval_episodes, eval_seed, Mode::kFrame,
                           schedule.threads)
                      .metrics;
      result.curve.push_back(p);
      const Metrics& b = result.best_metrics;
      if (!have_best || p.metrics.success_rate > b.success_rate ||
          (p.metrics.success_rate == b.success_rate && p.metrics.avg_reward > b.avg_reward)) {
        best = agent.q().Clone();
        result.best_metrics = p.metrics;
        result.best_episode = episodes;
        have_best = true;
      }
      if (progress) progress(p);
    }
  }
  result.episodes_trained = episodes;
  agent.set_q(best->Clone());
  return result;
}

// Reports

std::string FormatDecimal(const Rational& r, int digits) {
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const bool negative = r.num() < 0;
  const std::int64_t n = std::llabs(r.num());
  // round(n * scale / den), half away from zero
  const std::int64_t q = (2 * n * scale + r.den()) / (2 * r.den());
  std::string out = std::to_string(q / scale);
  if (digits > 0) {
    std::string frac = std::to_string(q % scale);
    out += "." + std::string(static_cast<std::size_t>(digits) - frac.size(), '0') + frac;
  }
  return (negative && q != 0 ? "-" : "") + out;
}

Report MakeReport(const std::vector<Metrics>& metrics, const std::vector<std::string>& labels) {
  if (metrics.empty()) throw EmptyReport();
  if (metrics.size() != labels.size()) {
    throw ValidationError("report has " + std::to_string(metrics.size()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
  }
  return Report{labels, metrics};
}

std::string Report::Text() const {
  const bool delta = rows.size() >= 2;
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head = {"agent", "episodes", "success_rate", "avg_turns",
                                   "avg_reward"};
  if (delta) head.push_back("delta_success");
  cells.push_back(head);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Metrics& m = rows[i];
    std::vector<std::string> row = {labels[i], std::to_string(m.n_episodes),
                                    FormatDecimal(m.success_rate), FormatDecimal(m.avg_turns),
                                    FormatDecimal(m.avg_reward)};
    if (delta) {
      const Rational d = m.success_rate - rows[0].success_rate;
      row.push_back(i == 0 ? "-" : (d > Rational(0) ? "+" : "") + FormatDecimal(d));
    }
    cells.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      out << Pad(row[c], width[c], c == 0);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json Report::ToJson() const {
  nlohmann::ordered_json j;
  j["format"] = "tdp-report";
  auto& arr = j["rows"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    nlohmann::ordered_json r;
    r["label"] = labels[i];
    r["metrics"] = rows[i].ToJson();
    if (i > 0) {
      const Rational d = rows[i].success_rate - rows[0].success_rate;
      r["delta_success_rate"] = d.ToDouble();
      r["delta_success_rate_exact"] = d.ToString();
    }
    arr.push_back(std::move(r));
  }
  return j;
}

std::string CurveCsv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "episode,success_rate,avg_turns,avg_reward\n";
  for (const auto& p : curve) {
    out << p.episode << ',' << FormatDecimal(p.metrics.success_rate, 6) << ','
        << FormatDecimal(p.metrics.avg_turns, 6) << ',' << FormatDecimal(p.metrics.avg_reward, 6)
        << '\n';
  }
  return out.str();
}

}  // namespace tdp

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

// tdp: command-line entry point for corpus tooling, simulation, training,
// evaluation and the live chat service.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdp/corpus.h"
#include "tdp/dialog_service.h"
#include "tdp/eval_harness.h"
#include "tdp/synthetic_world.h"

namespace {

using namespace tdp;
using ojson = nlohmann::ordered_json;

struct Options {
  std::string config;
  bool json = false;
  std::string resources;
  std::string domain = "movie";
  std::string schema;

  // corpus tools
  std::string corpus;
  std::string method = "aggregate";
  std::string out;

  // simulation
  std::string kb;
  std::string goals;
  std::vector<std::string> agents;
  std::string checkpoint;
  int episodes = 100;
  std::uint64_t seed = 1;
  int max_turns = 0;  // 0: the schema's
  int first_turn_informs = -1;
  std::string mode = "frame";
  int threads = 1;
  std::string transcripts;

  // training
  TrainSchedule schedule;
  int hidden = 64;
  std::uint64_t init_seed = 1;
  std::string curve;

  // service
  std::string host = "127.0.0.1";
  int port = 0;
  std::string data_dir;
  std::string checkpoint_dir;
  std::string static_dir;
  int idle_timeout_min = 30;

  // synthetic world
  SyntheticWorldConfig world;
  std::string kb_out;
  std::string goals_out;
};

std::string DefaultResources() {
  if (const char* env = std::getenv("TDP_RESOURCE_DIR")) return env;
  return TDP_DEFAULT_RESOURCE_DIR;
}

void Common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON file supplying any flag; flags win");
  sub->add_flag("--json", o.json, "Machine-readable output");
  sub->add_option("--resources", o.resources, "Resource directory");
  sub->add_option("--domain", o.domain, "Domain name")->capture_default_str();
  sub->add_option("--schema", o.schema, "Schema file (default <resources>/<domain>.schema.json)");
}

void World(CLI::App* sub, Options& o) {
  sub->add_option("--kb", o.kb, "Knowledge base JSON (default <resources>/<domain>.kb.json)");
  sub->add_option("--goals", o.goals, "Goal database JSON")->required();
  sub->add_option("--seed", o.seed, "Seed")->capture_default_str();
  sub->add_option("--max-turns", o.max_turns, "Turn cap (default from the schema)");
  sub->add_option("--first-turn-informs", o.first_turn_informs,
                  "Inform slots in the opening act (-1: all)")
      ->capture_default_str();
  sub->add_option("--threads", o.threads, "Rollout threads")->capture_default_str();
}

std::unique_ptr<CLI::App> BuildApp(Options& o) {
  auto app = std::make_unique<CLI::App>("Task-completion dialogue platform", "tdp");
  app->require_subcommand(1, 1);

  auto* validate = app->add_subcommand("validate", "Validate an annotated corpus");
  Common(validate, o);
  validate->add_option("--corpus", o.corpus, "Corpus JSON")->required();

  auto* extract = app->add_subcommand("extract-goals", "Extract a goal database from a corpus");
  Common(extract, o);
  extract->add_option("--corpus", o.corpus, "Corpus JSON")->required();
  extract->add_option("--method", o.method, "first | aggregate")
      ->check(CLI::IsMember({"first", "aggregate"}))
      ->capture_default_str();
  extract->add_option("--out", o.out, "Goal database output (default stdout)");

  auto* stats = app->add_subcommand("stats", "Corpus statistics");
  Common(stats, o);
  stats->add_option("--corpus", o.corpus, "Corpus JSON")->required();

  auto* simulate = app->add_subcommand("simulate", "Run one agent against the user simulator");
  Common(simulate, o);
  World(simulate, o);
  simulate->add_option("--agent", o.agents, "rule | rl | rl:<checkpoint>")
      ->expected(1)
      ->default_str("rule");
  simulate->add_option("--checkpoint", o.checkpoint, "Checkpoint for --agent rl");
  simulate->add_option("--episodes", o.episodes, "Episodes")->capture_default_str();
  simulate->add_option("--mode", o.mode, "frame | nl")
      ->check(CLI::IsMember({"frame", "nl"}))
      ->capture_default_str();
  simulate->add_option("--transcripts", o.transcripts, "Write episodes as JSON lines");

  auto* evaluate = app->add_subcommand("evaluate", "Compare agents on the same episodes");
  Common(evaluate, o);
  World(evaluate, o);
  evaluate->add_option("--agent", o.agents, "rule | rl:<checkpoint>, repeatable")->required();
  evaluate->add_option("--episodes", o.episodes, "Episodes per agent")->capture_default_str();
  evaluate->add_option("--mode", o.mode, "frame | nl")
      ->check(CLI::IsMember({"frame", "nl"}))
      ->capture_default_str();
  evaluate->add_option("--out", o.out, "Also write the JSON report here");

  auto* train = app->add_subcommand("train", "Train a DQN agent against the simulator");
  Common(train, o);
  World(train, o);
  TrainSchedule& s = o.schedule;
  train->add_option("--checkpoint", o.checkpoint, "Checkpoint output")->required();
  train->add_option("--curve", o.curve, "Learning curve CSV output");
  train->add_option("--hidden", o.hidden, "Hidden units (0: linear)")->capture_default_str();
  train->add_option("--init-seed", o.init_seed, "Weight initialisation seed")
      ->capture_default_str();
  train->add_option("--epochs", s.n_epochs, "Epochs")->capture_default_str();
  train->add_option("--episodes-per-epoch", s.episodes_per_epoch, "Rollouts per epoch")
      ->capture_default_str();
  train->add_option("--train-steps", s.train_steps_per_epoch, "Updates per epoch")
      ->capture_default_str();
  train->add_option("--eval-every", s.eval_every, "Epochs between evaluations")
      ->capture_default_str();
  train->add_option("--eval-episodes", s.eval_episodes, "Episodes per evaluation")
      ->capture_default_str();
  train->add_option("--warm-start", s.warm_start_episodes, "Rule-agent rollouts added first")
      ->capture_default_str();
  train->add_option("--buffer", s.buffer_size, "Replay capacity")->capture_default_str();
  train->add_option("--batch", s.batch_size, "Batch size")->capture_default_str();
  train->add_option("--epsilon-start", s.epsilon_start, "Initial epsilon")->capture_default_str();
  train->add_option("--epsilon-end", s.epsilon_end, "Final epsilon")->capture_default_str();
  train->add_option("--epsilon-decay", s.epsilon_decay_fraction,
                    "Share of episodes over which epsilon decays")
      ->capture_default_str();
  train->add_option("--lr", s.hyper.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--gamma", s.hyper.gamma, "Discount")->capture_default_str();
  train->add_option("--target-sync", s.hyper.target_sync, "Updates between target refreshes")
      ->capture_default_str();

  auto* serve = app->add_subcommand("serve", "Run the chat service for human judges");
  Common(serve, o);
  serve->add_option("--kb", o.kb, "Knowledge base JSON");
  serve->add_option("--goals", o.goals, "Goal cards JSON (default <resources>/<domain>.goals.json)");
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port (default $TDP_PORT, else 8080)");
  serve->add_option("--data-dir", o.data_dir, "Session store (or $TDP_DATA_DIR)");
  serve->add_option("--checkpoint-dir", o.checkpoint_dir,
                    "Directory for rl:<name> agents (or $TDP_CHECKPOINT_DIR)");
  serve->add_option("--static", o.static_dir, "Serve the judge UI from this directory");
  serve->add_option("--idle-timeout", o.idle_timeout_min, "Minutes before an idle session ends")
      ->capture_default_str();
  serve->add_option("--seed", o.seed, "Goal-card seed (0: random)")->capture_default_str();

  auto* world = app->add_subcommand("make-world", "Generate a synthetic movie KB and goals");
  Common(world, o);
  world->add_option("--records", o.world.n_records, "KB records")->capture_default_str();
  world->add_option("--n-goals", o.world.n_goals, "Goals")->capture_default_str();
  world->add_option("--extra-request-fraction", o.world.extra_request_fraction,
                    "Share of goals with non-primary requests")
      ->capture_default_str();
  world->add_option("--seed", o.world.seed, "Seed")->capture_default_str();
  world->add_option("--kb-out", o.kb_out, "KB output")->required();
  world->add_option("--goals-out", o.goals_out, "Goal database output")->required();
  return app;
}

// Appends the config file's entries the command line did not set.
std::vector<std::string> MergeConfig(const CLI::App& sub, const std::string& path,
                                     std::vector<std::string> args) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw ValidationError("config '" + path + "' must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt == nullptr || key == "config") {
      throw CLI::ExtrasError(sub.get_name(), {flag});
    }
    if (opt->count() > 0) continue;
    const auto push = [&](const nlohmann::json& v) {
      args.push_back(flag);
      args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) push(v);
    } else {
      push(value);
    }
  }
  return args;
}

void Emit(const Options& o, const ojson& j, const std::string& text) {
  if (o.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string ResourceFile(const Options& o, const std::string& suffix) {
  return o.resources + "/" + o.domain + "." + suffix;
}

DomainSchema LoadSchema(const Options& o) {
  return DomainSchema::FromFile(o.schema.empty() ? ResourceFile(o, "schema.json") : o.schema);
}

int RunValidate(const Options& o) {
  const DomainSchema schema = LoadSchema(o);
  const Corpus corpus = LoadCorpusFile(o.corpus, schema);
  ojson j;
  j["dialogues"] = corpus.dialogues.size();
  j["ok"] = corpus.report.ok();
  j["report"] = corpus.report.ToJson();
  std::ostringstream text;
  text << corpus.dialogues.size() << " dialogues, " << corpus.report.issues.size()
       << " issues\n"
       << corpus.report.ToText();
  Emit(o, j, text.str());
  return corpus.report.ok() ? 0 : ValidationError("").exit_code();
}

int RunExtract(const Options& o) {
  const DomainSchema schema = LoadSchema(o);
  const Corpus corpus = LoadCorpusFile(o.corpus, schema);
  const GoalExtraction ex = o.method == "first" ? ExtractGoalsFirstTurn(corpus.dialogues)
                                                : ExtractGoalsAggregate(corpus.dialogues);
  std::ostringstream db;
  const std::size_t n = WriteGoalDb(ex.goals, db, &schema);
  if (o.out.empty()) {
    std::cout << db.str();
  } else {
    WriteFile(o.out, db.str());
    ojson j;
    j["goals"] = n;
    j["skipped"] = ex.skipped;
    j["out"] = o.out;
    Emit(o, j, std::to_string(n) + " goals written to " + o.out + "\n");
  }
  for (const std::string& id : ex.skipped) {
    std::cerr << "skipped dialogue '" << id << "': no user goal\n";
  }
  return 0;
}

int RunStats(const Options& o) {
  const DomainSchema schema = LoadSchema(o);
  const Corpus corpus = LoadCorpusFile(o.corpus, schema);
  const CorpusStats st = ComputeCorpusStats(corpus.dialogues);
  std::ostringstream text;
  text << "dialogues         " << st.n_dialogues << "\n"
       << "turns             " << st.n_turns << "\n"
       << "avg_turns         "
       << (st.avg_turns_defined ? FormatDecimal(st.avg_turns) : std::string("n/a")) << "\n"
       << "intents_observed  " << st.n_intents_observed << "\n"
       << "slots_observed    " << st.n_slots_observed << "\n";
  Emit(o, st.ToJson(), text.str());
  return 0;
}

struct LoadedWorld {
  DomainSchema schema;
  KnowledgeBase kb;
  std::vector<UserGoal> goals;
  SimConfig sim;
};

LoadedWorld LoadWorld(const Options& o) {
  DomainSchema schema = LoadSchema(o);
  KnowledgeBase kb =
      KnowledgeBase::FromFile(o.kb.empty() ? ResourceFile(o, "kb.json") : o.kb, schema);
  std::vector<UserGoal> goals = LoadGoalDbFile(o.goals);
  if (goals.empty()) throw EmptyGoalSet();
  SimConfig sim;
  sim.max_turns = o.max_turns > 0 ? o.max_turns : schema.max_turns();
  if (o.first_turn_informs >= 0) sim.first_turn_inform_count = o.first_turn_informs;
  sim.seed = o.seed;
  sim.Validate();
  return {std::move(schema), std::move(kb), std::move(goals), sim};
}

// Template and lexicon files for natural-language rollouts.
struct NlChannel {
  std::unique_ptr<NlInterface> user_nl, agent_nl;

  void Attach(const Options& o, const LoadedWorld& w, Environment& env) {
    const Lexicon lexicon = Lexicon::FromFile(ResourceFile(o, "lexicon.json"));
    const auto vocab = w.kb.Vocabulary();
    user_nl = std::make_unique<NlInterface>(
        w.schema, TemplateTable::FromFile(ResourceFile(o, "user.templates.json"), w.schema),
        lexicon, vocab);
    agent_nl = std::make_unique<NlInterface>(
        w.schema, TemplateTable::FromFile(ResourceFile(o, "agent.templates.json"), w.schema),
        lexicon, vocab);
    env.user_nl = user_nl.get();
    env.agent_nl = agent_nl.get();
  }
};

std::unique_ptr<Agent> MakeAgent(const std::string& spec, const std::string& checkpoint,
                                 const DomainSchema& schema, int max_turns) {
  if (spec == "rule") return std::make_unique<RuleAgent>(schema);
  std::string path;
  if (spec == "rl") {
    path = checkpoint;
  } else if (spec.rfind("rl:", 0) == 0) {
    path = spec.substr(3);
  } else {
    throw CLI::ValidationError("--agent", "expected rule, rl or rl:<checkpoint>, got '" + spec + "'");
  }
  if (path.empty()) throw CLI::RequiredError("--checkpoint");
  Checkpoint cp = LoadCheckpoint(path, schema, max_turns);
  return std::make_unique<RlAgent>(schema, max_turns, std::move(cp.q));
}

std::string MetricsText(const std::string& label, const Metrics& m) {
  return MakeReport({m}, {label}).Text();
}

int RunSimulate(const Options& o) {
  LoadedWorld w = LoadWorld(o);
  const std::string spec = o.agents.empty() ? "rule" : o.agents.front();
  const auto agent = MakeAgent(spec, o.checkpoint, w.schema, w.sim.max_turns);

  Environment env(w.schema, w.kb, w.goals, w.sim);
  const Mode mode = ModeFromName(o.mode);
  NlChannel nl;
  if (mode == Mode::kNaturalLanguage) nl.Attach(o, w, env);
  const Evaluation ev = Evaluate(*agent, env, o.episodes, o.seed, mode, o.threads);
  if (!o.transcripts.empty()) {
    std::ostringstream lines;
    for (const EpisodeRecord& r : ev.episodes) lines << r.ToJson(w.schema).dump() << "\n";
    WriteFile(o.transcripts, lines.str());
  }
  ojson j;
  j["agent"] = spec;
  j["episodes"] = o.episodes;
  j["seed"] = o.seed;
  j["mode"] = o.mode;
  j["metrics"] = ev.metrics.ToJson();
  Emit(o, j, MetricsText(spec, ev.metrics));
  return 0;
}

int RunEvaluate(const Options& o) {
  LoadedWorld w = LoadWorld(o);
  Environment env(w.schema, w.kb, w.goals, w.sim);
  const Mode mode = ModeFromName(o.mode);
  NlChannel nl;
  if (mode == Mode::kNaturalLanguage) nl.Attach(o, w, env);
  std::vector<Metrics> rows;
  for (const std::string& spec : o.agents) {
    const auto agent = MakeAgent(spec, "", w.schema, w.sim.max_turns);
    rows.push_back(Evaluate(*agent, env, o.episodes, o.seed, mode, o.threads).metrics);
  }
  const Report report = MakeReport(rows, o.agents);
  ojson j = report.ToJson();
  if (!o.out.empty()) WriteFile(o.out, j.dump(2) + "\n");
  Emit(o, j, report.Text());
  return 0;
}

int RunTrain(const Options& o) {
  LoadedWorld w = LoadWorld(o);
  Environment env(w.schema, w.kb, w.goals, w.sim);
  TrainSchedule schedule = o.schedule;
  schedule.threads = o.threads;
  schedule.Validate();
  RlAgent agent = RlAgent::Create(w.schema, w.sim.max_turns, o.hidden, o.init_seed);
  const TrainResult result = Train(agent, env, schedule, o.seed, [](const CurvePoint& p) {
    std::cerr << "episode " << p.episode << " success_rate "
              << FormatDecimal(p.metrics.success_rate) << " avg_turns "
              << FormatDecimal(p.metrics.avg_turns) << "\n";
  });
  nlohmann::json meta;
  meta["seed"] = o.seed;
  meta["init_seed"] = o.init_seed;
  meta["hidden"] = o.hidden;
  meta["schedule"] = nlohmann::json::parse(schedule.ToJson().dump());
  meta["best_episode"] = result.best_episode;
  meta["best_metrics"] = nlohmann::json::parse(result.best_metrics.ToJson().dump());
  SaveCheckpoint(o.checkpoint, agent.q(), w.schema, w.sim.max_turns, meta);
  if (!o.curve.empty()) WriteFile(o.curve, CurveCsv(result.curve));

  ojson j;
  j["checkpoint"] = o.checkpoint;
  j["episodes_trained"] = result.episodes_trained;
  j["best_episode"] = result.best_episode;
  j["best_metrics"] = result.best_metrics.ToJson();
  ojson curve = ojson::array();
  for (const CurvePoint& p : result.curve) {
    curve.push_back(ojson{{"episode", p.episode}, {"metrics", p.metrics.ToJson()}});
  }
  j["curve"] = curve;
  Emit(o, j,
       MetricsText("rl@" + std::to_string(result.best_episode), result.best_metrics) +
           "checkpoint written to " + o.checkpoint + "\n");
  return 0;
}

int RunServe(const Options& o) {
  ServiceConfig cfg;
  cfg.data_dir = o.data_dir;
  cfg.checkpoint_dir = o.checkpoint_dir;
  cfg.idle_timeout = std::chrono::minutes(o.idle_timeout_min);
  cfg.seed = o.seed;
  if (o.data_dir.empty() || o.checkpoint_dir.empty()) {
    ServiceConfig env_cfg = cfg;
    env_cfg.ApplyEnvironment();
    if (o.data_dir.empty()) cfg.data_dir = env_cfg.data_dir;
    if (o.checkpoint_dir.empty()) cfg.checkpoint_dir = env_cfg.checkpoint_dir;
  }
  if (cfg.data_dir.empty()) throw CLI::RequiredError("--data-dir (or TDP_DATA_DIR)");
  int port = o.port;
  if (port == 0) {
    const char* env = std::getenv("TDP_PORT");
    port = env != nullptr ? std::atoi(env) : 8080;
  }
  std::map<std::string, std::shared_ptr<const DomainBundle>> domains;
  domains[o.domain] = DomainBundle::Load(o.resources, o.domain, o.kb, o.goals);
  DialogService service(cfg, domains);
  HttpFrontend http(service, o.static_dir);
  std::cerr << "serving " << o.domain << " on " << o.host << ":" << port << "\n";
  http.Run(o.host, port);
  return 0;
}

int RunMakeWorld(const Options& o) {
  const DomainSchema schema = LoadSchema(o);
  const SyntheticWorld world = GenerateMovieWorld(schema, o.world);
  WriteFile(o.kb_out, KbToJson(world.kb).dump(1) + "\n");
  std::ostringstream db;
  const std::size_t n = WriteGoalDb(world.goals, db, &schema);
  WriteFile(o.goals_out, db.str());
  ojson j;
  j["records"] = world.kb.size();
  j["goals"] = n;
  j["extra_request_share"] = world.ExtraRequestShare(schema);
  Emit(o, j,
       std::to_string(world.kb.size()) + " records, " + std::to_string(n) + " goals\n");
  return 0;
}

int Dispatch(const CLI::App& sub, const Options& o) {
  const std::string& name = sub.get_name();
  if (name == "validate") return RunValidate(o);
  if (name == "extract-goals") return RunExtract(o);
  if (name == "stats") return RunStats(o);
  if (name == "simulate") return RunSimulate(o);
  if (name == "evaluate") return RunEvaluate(o);
  if (name == "train") return RunTrain(o);
  if (name == "serve") return RunServe(o);
  return RunMakeWorld(o);
}

constexpr int kUsageExit = 2;

int UsageError(const CLI::App& app, const CLI::Error& e) {
  std::cerr << "error: " << e.what() << "\n\n";
  const auto subs = app.get_subcommands();
  std::cerr << (subs.empty() ? app.help() : subs.front()->help());
  return kUsageExit;
}

int Main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  Options o;
  auto app = BuildApp(o);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app->parse(reversed);
    } catch (const CLI::RequiredError&) {
      // The config file may supply the missing flags.
      if (o.config.empty() || app->get_subcommands().empty()) throw;
    }
    if (!o.config.empty()) {
      args = MergeConfig(*app->get_subcommands().front(), o.config, args);
      o = Options();
      app = BuildApp(o);
      reversed.assign(args.rbegin(), args.rend());
      app->parse(reversed);
    }
  } catch (const CLI::CallForHelp&) {
    const auto subs = app->get_subcommands();
    std::cout << (subs.empty() ? app->help() : subs.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    return UsageError(*app, e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
  if (o.resources.empty()) o.resources = DefaultResources();
  try {
    return Dispatch(*app->get_subcommands().front(), o);
  } catch (const CLI::Error& e) {
    return UsageError(*app, e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return SchemaError("json", e.what()).exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return Main(argc, argv); }

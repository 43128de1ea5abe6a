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

#include "tdp/q_function.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "io_util.h"
#include "tdp/dialogue_agents.h"
#include "tdp/errors.h"

namespace tdp {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr char kCheckpointFormat[] = "tdp-checkpoint";

void CheckBatch(const std::vector<Transition>& batch, int in, int out) {
  if (batch.empty()) throw ValidationError("train_step needs a non-empty batch");
  for (const auto& t : batch) {
    if (static_cast<int>(t.features.size()) != in ||
        (!t.terminal && static_cast<int>(t.next_features.size()) != in)) {
      throw ValidationError("transition feature size mismatch");
    }
    if (t.action < 0 || t.action >= out) {
      throw ValidationError("transition action out of range");
    }
  }
}

std::string HexHash(std::uint64_t h) {
  static const char* kDigits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace

nlohmann::ordered_json QHyper::ToJson() const {
  nlohmann::ordered_json j;
  j["learning_rate"] = learning_rate;
  j["gamma"] = gamma;
  j["target_sync"] = target_sync;
  return j;
}

QHyper QHyper::FromJson(const nlohmann::json& j) {
  QHyper h;
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.gamma = j.value("gamma", h.gamma);
  h.target_sync = j.value("target_sync", h.target_sync);
  if (h.learning_rate < 0 || h.gamma < 0 || h.gamma > 1 || h.target_sync < 1) {
    throw ValidationError("invalid Q-learning hyperparameters");
  }
  return h;
}

std::vector<double> BellmanTargets(const QFunction& q,
                                   const std::vector<Transition>& batch,
                                   double gamma) {
  std::vector<double> y;
  y.reserve(batch.size());
  for (const auto& t : batch) {
    if (t.terminal || gamma == 0.0) {
      y.push_back(t.reward);
      continue;
    }
    const auto next = q.TargetValues(t.next_features);
    y.push_back(t.reward + gamma * *std::max_element(next.begin(), next.end()));
  }
  return y;
}

// QNetwork

QNetwork::QNetwork(int input_size, int hidden, int num_actions, Rng& rng)
    : in_(input_size), hidden_(hidden), out_(num_actions) {
  if (in_ < 1 || out_ < 1 || hidden_ < 0) {
    throw ValidationError("invalid network dimensions");
  }
  auto fill = [&](int rows, int cols) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows * cols; ++i) params_.push_back(rng.Normal() * scale);
    for (int i = 0; i < rows; ++i) params_.push_back(0.0);
  };
  if (hidden_ == 0) {
    fill(out_, in_);
  } else {
    fill(hidden_, in_);
    fill(out_, hidden_);
  }
  target_ = params_;
}

std::vector<double> QNetwork::Forward(const std::vector<double>& p,
                                      const std::vector<double>& x,
                                      std::vector<double>* hidden_out) const {
  if (static_cast<int>(x.size()) != in_) {
    throw ValidationError("feature vector has the wrong size");
  }
  const std::vector<double>* layer_in = &x;
  std::vector<double> a;
  std::size_t off = 0;
  int width = in_;
  if (hidden_ > 0) {
    a.assign(static_cast<std::size_t>(hidden_), 0.0);
    for (int j = 0; j < hidden_; ++j) {
      double z = p[off + static_cast<std::size_t>(hidden_ * in_ + j)];
      const double* w = &p[off + static_cast<std::size_t>(j * in_)];
      for (int i = 0; i < in_; ++i) z += w[i] * x[static_cast<std::size_t>(i)];
      a[static_cast<std::size_t>(j)] = std::tanh(z);
    }
    off += static_cast<std::size_t>(hidden_ * in_ + hidden_);
    layer_in = &a;
    width = hidden_;
  }
  std::vector<double> q(static_cast<std::size_t>(out_));
  for (int k = 0; k < out_; ++k) {
    double v = p[off + static_cast<std::size_t>(out_ * width + k)];
    const double* w = &p[off + static_cast<std::size_t>(k * width)];
    for (int j = 0; j < width; ++j) v += w[j] * (*layer_in)[static_cast<std::size_t>(j)];
    q[static_cast<std::size_t>(k)] = v;
  }
  if (hidden_out) *hidden_out = std::move(a);
  return q;
}

std::vector<double> QNetwork::Values(const std::vector<double>& x) const {
  return Forward(params_, x, nullptr);
}

std::vector<double> QNetwork::TargetValues(const std::vector<double>& x) const {
  return Forward(target_, x, nullptr);
}

double QNetwork::Loss(const std::vector<double>& p,
                      const std::vector<Transition>& batch,
                      const std::vector<double>& targets) const {
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto q = Forward(p, batch[b].features, nullptr);
    const double d = q[static_cast<std::size_t>(batch[b].action)] - targets[b];
    sum += d * d;
  }
  return sum / static_cast<double>(batch.size());
}

std::vector<double> QNetwork::Gradient(const std::vector<Transition>& batch,
                                       const std::vector<double>& targets) const {
  std::vector<double> g(params_.size(), 0.0);
  const double scale = 2.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& x = batch[b].features;
    std::vector<double> a;
    const auto q = Forward(params_, x, &a);
    const int k = batch[b].action;
    const double d = scale * (q[static_cast<std::size_t>(k)] - targets[b]);
    if (hidden_ == 0) {
      for (int i = 0; i < in_; ++i) {
        g[static_cast<std::size_t>(k * in_ + i)] += d * x[static_cast<std::size_t>(i)];
      }
      g[static_cast<std::size_t>(out_ * in_ + k)] += d;
      continue;
    }
    const std::size_t off2 = static_cast<std::size_t>(hidden_ * in_ + hidden_);
    for (int j = 0; j < hidden_; ++j) {
      const double aj = a[static_cast<std::size_t>(j)];
      const std::size_t w2 = off2 + static_cast<std::size_t>(k * hidden_ + j);
      g[w2] += d * aj;
      const double dz = d * params_[w2] * (1.0 - aj * aj);
      for (int i = 0; i < in_; ++i) {
        g[static_cast<std::size_t>(j * in_ + i)] += dz * x[static_cast<std::size_t>(i)];
      }
      g[static_cast<std::size_t>(hidden_ * in_ + j)] += dz;
    }
    g[off2 + static_cast<std::size_t>(out_ * hidden_ + k)] += d;
  }
  return g;
}

double QNetwork::TrainStep(const std::vector<Transition>& batch,
                           const QHyper& hyper) {
  CheckBatch(batch, in_, out_);
  const auto targets = BellmanTargets(*this, batch, hyper.gamma);
  const double loss = Loss(params_, batch, targets);
  if (hyper.learning_rate != 0.0) {
    const auto g = Gradient(batch, targets);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i] -= hyper.learning_rate * g[i];
    }
  }
  if (!AllFinite() || !std::isfinite(loss)) {
    throw TrainingDiverged("non-finite network parameters after train step " +
                           std::to_string(steps_ + 1));
  }
  ++steps_;
  if (steps_ % hyper.target_sync == 0) SyncTarget();
  return loss;
}

bool QNetwork::AllFinite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::unique_ptr<QFunction> QNetwork::Clone() const {
  return std::make_unique<QNetwork>(*this);
}

nlohmann::json QNetwork::ParamsToJson() const {
  nlohmann::json j;
  j["input_size"] = in_;
  j["hidden"] = hidden_;
  j["num_actions"] = out_;
  j["steps"] = steps_;
  j["params"] = params_;
  j["target"] = target_;
  return j;
}

std::unique_ptr<QNetwork> QNetwork::FromParamsJson(const nlohmann::json& j) {
  std::unique_ptr<QNetwork> net(new QNetwork());
  try {
    net->in_ = j.at("input_size").get<int>();
    net->hidden_ = j.at("hidden").get<int>();
    net->out_ = j.at("num_actions").get<int>();
    net->steps_ = j.value("steps", std::int64_t{0});
    net->params_ = j.at("params").get<std::vector<double>>();
    net->target_ = j.contains("target") ? j.at("target").get<std::vector<double>>()
                                        : net->params_;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed network parameters: ") + e.what());
  }
  const std::size_t h = static_cast<std::size_t>(net->hidden_);
  const std::size_t in = static_cast<std::size_t>(net->in_);
  const std::size_t out = static_cast<std::size_t>(net->out_);
  const std::size_t expected =
      h == 0 ? out * in + out : h * in + h + out * h + out;
  if (net->params_.size() != expected || net->target_.size() != expected) {
    throw CheckpointError("network parameter count does not match its shape");
  }
  if (!net->AllFinite()) throw CheckpointError("non-finite network parameters");
  return net;
}

// TabularQ

std::string TabularQ::Key(const std::vector<double>& x) {
  std::string key(x.size() * sizeof(double), '\0');
  if (!x.empty()) std::memcpy(key.data(), x.data(), key.size());
  return key;
}

std::vector<double> TabularQ::Values(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != in_) {
    throw ValidationError("feature vector has the wrong size");
  }
  auto it = table_.find(Key(x));
  if (it == table_.end()) return std::vector<double>(static_cast<std::size_t>(out_), 0.0);
  return it->second;
}

double TabularQ::TrainStep(const std::vector<Transition>& batch,
                           const QHyper& hyper) {
  CheckBatch(batch, in_, out_);
  const auto targets = BellmanTargets(*this, batch, hyper.gamma);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto [it, inserted] = table_.try_emplace(
        Key(batch[b].features), std::vector<double>(static_cast<std::size_t>(out_), 0.0));
    double& q = it->second[static_cast<std::size_t>(batch[b].action)];
    const double d = q - targets[b];
    loss += d * d;
    q -= hyper.learning_rate * d;
  }
  loss /= static_cast<double>(batch.size());
  if (!AllFinite() || !std::isfinite(loss)) {
    throw TrainingDiverged("non-finite table entry");
  }
  return loss;
}

bool TabularQ::AllFinite() const {
  for (const auto& [k, v] : table_) {
    for (double d : v) {
      if (!std::isfinite(d)) return false;
    }
  }
  return true;
}

std::unique_ptr<QFunction> TabularQ::Clone() const {
  return std::make_unique<TabularQ>(*this);
}

nlohmann::json TabularQ::ParamsToJson() const {
  std::vector<const std::string*> keys;
  for (const auto& [k, v] : table_) keys.push_back(&k);
  std::sort(keys.begin(), keys.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  nlohmann::json entries = nlohmann::json::array();
  for (const std::string* k : keys) {
    std::vector<double> x(k->size() / sizeof(double));
    if (!x.empty()) std::memcpy(x.data(), k->data(), k->size());
    entries.push_back({{"x", x}, {"q", table_.at(*k)}});
  }
  nlohmann::json j;
  j["input_size"] = in_;
  j["num_actions"] = out_;
  j["entries"] = std::move(entries);
  return j;
}

std::unique_ptr<TabularQ> TabularQ::FromParamsJson(const nlohmann::json& j) {
  try {
    auto t = std::make_unique<TabularQ>(j.at("input_size").get<int>(),
                                        j.at("num_actions").get<int>());
    for (const auto& e : j.at("entries")) {
      auto x = e.at("x").get<std::vector<double>>();
      auto q = e.at("q").get<std::vector<double>>();
      if (static_cast<int>(x.size()) != t->in_ || static_cast<int>(q.size()) != t->out_) {
        throw CheckpointError("table entry has the wrong shape");
      }
      t->table_.emplace(Key(x), std::move(q));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed table: ") + e.what());
  }
}

// Action selection and replay

int ArgMax(const std::vector<double>& values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int SelectAction(const QFunction& q, const std::vector<double>& features,
                 double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw ValidationError("epsilon must lie in [0, 1]");
  }
  if (epsilon > 0.0 && rng.Uniform() < epsilon) {
    return static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(q.num_actions())));
  }
  return ArgMax(q.Values(features));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ValidationError("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::Add(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::Sample(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> out;
  if (items_.empty()) return out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    out.push_back(items_[rng.UniformIndex(items_.size())]);
  }
  return out;
}

// Checkpoints

nlohmann::ordered_json CheckpointToJson(const QFunction& q,
                                        const DomainSchema& schema,
                                        int max_turns,
                                        const nlohmann::json& meta) {
  const Featurizer features(schema, max_turns);
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["domain"] = schema.domain_name();
  j["schema_hash"] = HexHash(schema.Hash());
  j["feature_layout"] = features.Layout();
  nlohmann::ordered_json actions = nlohmann::ordered_json::array();
  for (const auto& a : FeasibleActions(schema)) {
    actions.push_back(SerializeFrame(a.act_template, schema));
  }
  j["actions"] = std::move(actions);
  j["backend"] = std::string(q.backend());
  j["model"] = q.ParamsToJson();
  if (!meta.is_null()) j["meta"] = meta;
  return j;
}

Checkpoint CheckpointFromJson(const nlohmann::json& j, const DomainSchema& schema,
                              int max_turns) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
    throw CheckpointError("not a checkpoint file");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version");
  }
  if (j.value("schema_hash", "") != HexHash(schema.Hash())) {
    throw CheckpointError("checkpoint was trained on a different schema (hash " +
                          j.value("schema_hash", std::string("?")) + ", expected " +
                          HexHash(schema.Hash()) + ")");
  }
  const Featurizer features(schema, max_turns);
  if (nlohmann::json(features.Layout()) != j.value("feature_layout", nlohmann::json())) {
    throw CheckpointError("checkpoint feature layout differs");
  }
  nlohmann::json actions = nlohmann::json::array();
  const auto table = FeasibleActions(schema);
  for (const auto& a : table) actions.push_back(SerializeFrame(a.act_template, schema));
  if (actions != j.value("actions", nlohmann::json())) {
    throw CheckpointError("checkpoint action table differs");
  }
  Checkpoint c;
  const std::string backend = j.value("backend", "");
  if (!j.contains("model")) throw CheckpointError("checkpoint has no model");
  if (backend == "mlp") {
    c.q = QNetwork::FromParamsJson(j.at("model"));
  } else if (backend == "tabular") {
    c.q = TabularQ::FromParamsJson(j.at("model"));
  } else {
    throw CheckpointError("unknown model backend '" + backend + "'");
  }
  if (c.q->input_size() != features.size() ||
      c.q->num_actions() != static_cast<int>(table.size())) {
    throw CheckpointError("model shape does not match the schema");
  }
  c.meta = j.value("meta", nlohmann::json());
  return c;
}

void SaveCheckpoint(const std::string& path, const QFunction& q,
                    const DomainSchema& schema, int max_turns,
                    const nlohmann::json& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << CheckpointToJson(q, schema, max_turns, meta).dump() << "\n";
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint LoadCheckpoint(const std::string& path, const DomainSchema& schema,
                          int max_turns) {
  nlohmann::json j;
  try {
    j = internal::ReadJson(path);
  } catch (const ParseError& e) {
    throw CheckpointError(std::string("unreadable checkpoint: ") + e.what());
  }
  return CheckpointFromJson(j, schema, max_turns);
}

}  // namespace tdp

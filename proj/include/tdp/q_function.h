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

// Action-value functions for the learned agent: a one-hidden-layer tanh
// network trained by SGD with a target network, and a lookup table for tiny
// worlds. Both take one-step Q-learning batches.

#ifndef TDP_Q_FUNCTION_H_
#define TDP_Q_FUNCTION_H_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tdp/random.h"
#include "tdp/schema.h"

namespace tdp {

struct Transition {
  std::vector<double> features;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_features;
  bool terminal = false;
};

struct QHyper {
  double learning_rate = 1e-3;
  double gamma = 0.9;
  int target_sync = 100;  // train steps between target refreshes

  nlohmann::ordered_json ToJson() const;
  static QHyper FromJson(const nlohmann::json& j);
};

class QFunction {
 public:
  virtual ~QFunction() = default;

  virtual std::string_view backend() const = 0;
  virtual int input_size() const = 0;
  virtual int num_actions() const = 0;

  virtual std::vector<double> Values(const std::vector<double>& x) const = 0;
  virtual std::vector<double> TargetValues(const std::vector<double>& x) const = 0;

  // One update on the batch; returns the mean squared TD error measured
  // before the update. Throws TrainingDiverged on non-finite parameters.
  virtual double TrainStep(const std::vector<Transition>& batch,
                           const QHyper& hyper) = 0;

  virtual bool AllFinite() const = 0;
  virtual std::unique_ptr<QFunction> Clone() const = 0;
  virtual nlohmann::json ParamsToJson() const = 0;
};

// r for terminal transitions, r + gamma * max_a Q_target(next, a) otherwise.
std::vector<double> BellmanTargets(const QFunction& q,
                                   const std::vector<Transition>& batch,
                                   double gamma);

class QNetwork : public QFunction {
 public:
  // hidden == 0 gives a linear model.
  QNetwork(int input_size, int hidden, int num_actions, Rng& rng);

  std::string_view backend() const override { return "mlp"; }
  int input_size() const override { return in_; }
  int num_actions() const override { return out_; }
  int hidden() const { return hidden_; }

  std::vector<double> Values(const std::vector<double>& x) const override;
  std::vector<double> TargetValues(const std::vector<double>& x) const override;
  double TrainStep(const std::vector<Transition>& batch,
                   const QHyper& hyper) override;
  bool AllFinite() const override;
  std::unique_ptr<QFunction> Clone() const override;
  nlohmann::json ParamsToJson() const override;
  static std::unique_ptr<QNetwork> FromParamsJson(const nlohmann::json& j);

  // Flat layout: W1 (hidden x in), b1, W2 (out x hidden), b2; or W, b when
  // linear.
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  void SyncTarget() { target_ = params_; }
  std::int64_t steps() const { return steps_; }

  // Mean over the batch of (Q(s, a) - y)^2 under `params`, and its analytic
  // gradient.
  double Loss(const std::vector<double>& params,
              const std::vector<Transition>& batch,
              const std::vector<double>& targets) const;
  std::vector<double> Gradient(const std::vector<Transition>& batch,
                               const std::vector<double>& targets) const;

 private:
  QNetwork() = default;
  std::vector<double> Forward(const std::vector<double>& params,
                              const std::vector<double>& x,
                              std::vector<double>* hidden_out) const;

  int in_ = 0;
  int hidden_ = 0;
  int out_ = 0;
  std::vector<double> params_;
  std::vector<double> target_;
  std::int64_t steps_ = 0;
};

// Table keyed by the exact feature vector; unseen states read as zero.
class TabularQ : public QFunction {
 public:
  TabularQ(int input_size, int num_actions)
      : in_(input_size), out_(num_actions) {}

  std::string_view backend() const override { return "tabular"; }
  int input_size() const override { return in_; }
  int num_actions() const override { return out_; }
  std::size_t num_states() const { return table_.size(); }

  std::vector<double> Values(const std::vector<double>& x) const override;
  std::vector<double> TargetValues(const std::vector<double>& x) const override {
    return Values(x);
  }
  double TrainStep(const std::vector<Transition>& batch,
                   const QHyper& hyper) override;
  bool AllFinite() const override;
  std::unique_ptr<QFunction> Clone() const override;
  nlohmann::json ParamsToJson() const override;
  static std::unique_ptr<TabularQ> FromParamsJson(const nlohmann::json& j);

 private:
  static std::string Key(const std::vector<double>& x);

  int in_;
  int out_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Greedy with lowest-index tie-break; with probability epsilon a uniform
// index instead. No random draw is made when epsilon is 0.
int SelectAction(const QFunction& q, const std::vector<double>& features,
                 double epsilon, Rng& rng);
int ArgMax(const std::vector<double>& values);

// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void Add(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<Transition> Sample(std::size_t batch_size, Rng& rng) const;
  const std::vector<Transition>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// Versioned JSON checkpoint carrying the schema hash, the feature layout and
// the action table so a mismatched model is refused on load.
struct Checkpoint {
  std::unique_ptr<QFunction> q;
  nlohmann::json meta;  // free-form training metadata
};

nlohmann::ordered_json CheckpointToJson(const QFunction& q,
                                        const DomainSchema& schema,
                                        int max_turns,
                                        const nlohmann::json& meta = {});
// Throws CheckpointError on version, schema or layout mismatch.
Checkpoint CheckpointFromJson(const nlohmann::json& j, const DomainSchema& schema,
                              int max_turns);
void SaveCheckpoint(const std::string& path, const QFunction& q,
                    const DomainSchema& schema, int max_turns,
                    const nlohmann::json& meta = {});
Checkpoint LoadCheckpoint(const std::string& path, const DomainSchema& schema,
                          int max_turns);

}  // namespace tdp

#endif  // TDP_Q_FUNCTION_H_

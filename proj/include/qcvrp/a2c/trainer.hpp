// Copyright 2026 The qcvrp Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcvrp/ad/nn.hpp"
#include "qcvrp/env/cvrp.hpp"
#include "qcvrp/harness/metrics.hpp"
#include "qcvrp/policy/policy.hpp"

namespace qcvrp::a2c {

struct TrainConfig {
  std::size_t episodes = 1000;
  double lr = 1e-5;
  double gamma = 0.97;
  double entropy_start = 0.1;
  double entropy_end = 0.01;
  double value_coef = 0.5;
  std::size_t eval_every = 50;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double grad_clip_norm = 1.0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Instance used for every greedy evaluation; unset derives one from the
  // run seed, disjoint from the training instance stream.
  std::optional<std::uint64_t> eval_seed;

  void validate() const;
};

// Per-variant defaults: CPN 1000 episodes, lr 1e-5, entropy 0.1 -> 0.01;
// HQP/FQP 500 episodes, lr 1e-6, entropy 0.5 -> 0.03.
TrainConfig default_train_config(policy::Variant variant);

void to_json(nlohmann::json& j, const TrainConfig& c);
// Overlays the given fields on `c`; unknown keys are a ConfigError.
void from_json(const nlohmann::json& j, TrainConfig& c);

struct StepRecord {
  std::vector<double> observation;
  env::ActionSet actions;
  // Row-major [n_vehicles][n_clients + 1], the mask each vehicle saw when it
  // acted. All zero for a vehicle that was skipped because every client had
  // already been served earlier in the step.
  std::vector<std::uint8_t> masks;
  std::vector<double> log_probs;
  std::vector<double> entropies;
  double reward = 0.0;
  double value = 0.0;
  // Graph handles, valid while the episode graph lives. Unset when the
  // episode was collected without a graph.
  ad::Var log_prob_sum;
  ad::Var entropy_sum;
  ad::Var value_node;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  std::vector<double> returns;  // filled by the caller

  std::size_t length() const { return steps.size(); }
  double total_reward() const;
  std::vector<double> rewards() const;
};

// Runs `state` to termination. With a binder the policy is evaluated on its
// graph so a loss can be built afterwards. Masks are recomputed per vehicle
// on a scratch copy so each vehicle sees the state it will act in.
Trajectory collect_episode(env::EnvState& state, const policy::Policy& policy,
                           ad::Binder* bind, Rng& rng, policy::SampleMode mode);

// G_t = r_t + gamma * G_{t+1}.
std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma);

struct LossReport {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

struct Loss {
  ad::Var total;
  LossReport report;
};

// policy = -sum_t (sum_v log pi) * (G_t - V_t) with V_t a constant,
// value = sum_t (G_t - V_t)^2, entropy = sum_t sum_v H,
// total = policy + value_coef * value - entropy_coef * entropy.
Loss a2c_loss(const Trajectory& traj, double entropy_coef, double value_coef);

// Linear from entropy_start at episode 0 to entropy_end at the last episode.
double entropy_coef_schedule(std::size_t episode, const TrainConfig& config);

struct EvalResult {
  harness::MetricsRecord metrics;
  env::Instance instance;
  env::RouteLog routes;
  std::size_t steps = 0;
};

// One greedy episode on the instance drawn from `eval_seed`.
EvalResult evaluate_deterministic(const env::EnvConfig& env_config,
                                  const policy::Policy& policy,
                                  std::uint64_t eval_seed);

// One greedy episode on a given instance.
EvalResult evaluate_instance(const env::EnvConfig& env_config,
                             const env::Instance& instance,
                             const policy::Policy& policy);

std::uint64_t default_eval_seed(std::uint64_t run_seed);

struct EvalPoint {
  std::size_t episode = 0;  // training episodes completed
  EvalResult result;
};

struct RunOptions {
  // Empty: nothing is written to disk.
  std::filesystem::path out_dir;
  bool write_svgs = true;
  bool write_checkpoints = true;
};

struct TrainResult {
  std::vector<nlohmann::json> log;  // the run-log records, in order
  std::vector<EvalPoint> evals;
  std::optional<policy::Policy> policy;
  std::size_t episodes_completed = 0;
  bool aborted = false;
  std::string abort_reason;
  std::filesystem::path last_checkpoint;
};

nlohmann::json checkpoint_json(const env::EnvConfig& env_config,
                               const TrainConfig& train, const policy::Policy& policy,
                               std::uint64_t seed, std::size_t episode);

// Policy with parameters and optimizer state restored.
policy::Policy restore_policy(const nlohmann::json& checkpoint);

TrainResult train(const env::EnvConfig& env_config, const policy::PolicySpec& spec,
                  const TrainConfig& config, std::uint64_t seed,
                  const RunOptions& options = {});

// Same, starting from the given parameters instead of a fresh draw.
TrainResult train_policy(const env::EnvConfig& env_config, policy::Policy policy,
                         const TrainConfig& config, std::uint64_t seed,
                         const RunOptions& options = {});

// Continues a run from a checkpoint written by train(). The log holds only
// the records after the checkpoint.
TrainResult resume(const nlohmann::json& checkpoint, const RunOptions& options = {});

}  // namespace qcvrp::a2c

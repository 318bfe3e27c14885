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

#include "qcvrp/a2c/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "qcvrp/ad/optim.hpp"
#include "qcvrp/common/error.hpp"
#include "qcvrp/env/serialize.hpp"
#include "qcvrp/harness/svg.hpp"

namespace qcvrp::a2c {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTrainInstances = 1;
constexpr std::uint64_t kSampling = 2;
constexpr std::uint64_t kEvalInstance = 3;

}  // namespace

void TrainConfig::validate() const {
  if (episodes == 0) throw ConfigError("episodes must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(entropy_end <= entropy_start)) {
    throw ConfigError("entropy_end must not exceed entropy_start");
  }
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
  if (value_coef < 0.0 || weight_decay < 0.0) {
    throw ConfigError("value_coef and weight_decay must be non-negative");
  }
}

TrainConfig default_train_config(policy::Variant variant) {
  TrainConfig c;
  if (variant != policy::Variant::kCpn) {
    c.episodes = 500;
    c.lr = 1e-6;
    c.entropy_start = 0.5;
    c.entropy_end = 0.03;
  }
  return c;
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"episodes", c.episodes},
           {"lr", c.lr},
           {"gamma", c.gamma},
           {"entropy_start", c.entropy_start},
           {"entropy_end", c.entropy_end},
           {"value_coef", c.value_coef},
           {"eval_every", c.eval_every},
           {"seeds", c.seeds},
           {"grad_clip_norm", c.grad_clip_norm},
           {"weight_decay", c.weight_decay},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"adam_eps", c.adam_eps},
           {"eval_seed", c.eval_seed ? json(*c.eval_seed) : json(nullptr)}};
}

void from_json(const json& j, TrainConfig& c) {
  static const std::set<std::string> known = {
      "episodes", "lr", "gamma", "entropy_start", "entropy_end", "value_coef",
      "eval_every", "seeds", "grad_clip_norm", "weight_decay", "beta1", "beta2",
      "adam_eps", "eval_seed"};
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown train field '" + key + "'");
  }
  try {
    auto read = [&](const char* key, auto& out) {
      if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    read("episodes", c.episodes);
    read("lr", c.lr);
    read("gamma", c.gamma);
    read("entropy_start", c.entropy_start);
    read("entropy_end", c.entropy_end);
    read("value_coef", c.value_coef);
    read("eval_every", c.eval_every);
    read("seeds", c.seeds);
    read("grad_clip_norm", c.grad_clip_norm);
    read("weight_decay", c.weight_decay);
    read("beta1", c.beta1);
    read("beta2", c.beta2);
    read("adam_eps", c.adam_eps);
    if (j.contains("eval_seed")) {
      const auto& e = j.at("eval_seed");
      c.eval_seed = e.is_null() ? std::nullopt
                                : std::optional<std::uint64_t>(e.get<std::uint64_t>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
}

double Trajectory::total_reward() const {
  double r = 0.0;
  for (const auto& s : steps) r += s.reward;
  return r;
}

std::vector<double> Trajectory::rewards() const {
  std::vector<double> r;
  r.reserve(steps.size());
  for (const auto& s : steps) r.push_back(s.reward);
  return r;
}

Trajectory collect_episode(env::EnvState& state, const policy::Policy& policy,
                           ad::Binder* bind, Rng& rng, policy::SampleMode mode) {
  const auto& spec = policy.spec();
  if (state.config.n_clients != spec.n_clients ||
      state.config.n_vehicles != spec.n_vehicles) {
    throw ContractError("policy was built for " + std::to_string(spec.n_clients) +
                        " clients and " + std::to_string(spec.n_vehicles) +
                        " vehicles");
  }
  const std::size_t V = spec.n_vehicles, S = spec.candidates();
  Trajectory traj;
  while (!env::is_terminal(state)) {
    StepRecord rec;
    rec.observation = env::observe(state);
    policy::GraphOutput out;
    std::vector<double> logits;
    if (bind) {
      out = policy.forward(*bind, rec.observation);
      logits = out.logits.value();
      rec.value = out.value.value()[0];
      rec.value_node = out.value;
    } else {
      auto o = policy.evaluate(rec.observation);
      logits = std::move(o.logits);
      rec.value = o.value;
    }
    rec.masks.assign(V * S, 0);
    rec.actions.assign(V, spec.n_clients);
    rec.log_probs.assign(V, 0.0);
    rec.entropies.assign(V, 0.0);

    env::EnvState scratch = state;
    std::vector<ad::Var> lp_terms, ent_terms;
    for (std::size_t v = 0; v < V; ++v) {
      if (env::all_served(scratch)) break;
      const auto mask = env::valid_action_mask(scratch, v);
      const auto pick = policy::sample_row(
          std::span<const double>(logits).subspan(v * S, S), mask, mode, rng);
      std::copy(mask.begin(), mask.end(), rec.masks.begin() + v * S);
      rec.actions[v] = pick.action;
      rec.log_probs[v] = pick.log_prob;
      rec.entropies[v] = pick.entropy;
      env::step_vehicle(scratch, v, pick.action);
      if (bind) {
        ad::Var row = ad::row(out.logits, v);
        ad::Var lp = ad::reshape(ad::masked_log_softmax(row, mask), {1, S});
        lp_terms.push_back(ad::reshape(ad::pick(lp, {pick.action}), {}));
        ent_terms.push_back(ad::masked_entropy(row, mask));
      }
    }
    const auto result = env::step(state, rec.actions);
    for (const auto& r : result.rewards) rec.reward += r.total;
    if (bind) {
      rec.log_prob_sum = ad::sum(ad::stack(lp_terms));
      rec.entropy_sum = ad::sum(ad::stack(ent_terms));
    }
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma) {
  if (rewards.empty()) throw ContractError("no rewards to discount");
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

Loss a2c_loss(const Trajectory& traj, double entropy_coef, double value_coef) {
  if (traj.steps.empty()) throw ContractError("empty trajectory");
  if (traj.returns.size() != traj.steps.size()) {
    throw ContractError("trajectory has " + std::to_string(traj.steps.size()) +
                        " steps but " + std::to_string(traj.returns.size()) +
                        " returns");
  }
  std::vector<ad::Var> pol, val, ent;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& s = traj.steps[t];
    if (!s.log_prob_sum.valid() || !s.value_node.valid() || !s.entropy_sum.valid()) {
      throw ContractError("trajectory was collected without a graph");
    }
    ad::Graph& g = *s.value_node.graph();
    const double advantage = traj.returns[t] - s.value_node.value()[0];
    pol.push_back(ad::scale(s.log_prob_sum, -advantage));
    ad::Var target = g.constant(ad::Tensor({1}, {traj.returns[t]}));
    val.push_back(ad::sum(ad::square(ad::sub(target, s.value_node))));
    ent.push_back(s.entropy_sum);
  }
  ad::Var p = ad::sum(ad::stack(pol));
  ad::Var v = ad::sum(ad::stack(val));
  ad::Var e = ad::sum(ad::stack(ent));
  ad::Var total = ad::sub(ad::add(p, ad::scale(v, value_coef)), ad::scale(e, entropy_coef));
  return Loss{total, LossReport{p.item(), v.item(), e.item(), total.item()}};
}

double entropy_coef_schedule(std::size_t episode, const TrainConfig& c) {
  if (c.episodes <= 1) return c.entropy_start;
  const double frac = static_cast<double>(std::min(episode, c.episodes - 1)) /
                      static_cast<double>(c.episodes - 1);
  return c.entropy_start + (c.entropy_end - c.entropy_start) * frac;
}

std::uint64_t default_eval_seed(std::uint64_t run_seed) {
  return derive_seed(run_seed, kEvalInstance);
}

EvalResult evaluate_instance(const env::EnvConfig& env_config,
                             const env::Instance& instance,
                             const policy::Policy& policy) {
  EvalResult r;
  auto state = env::make_state(env_config, instance);
  r.instance = env::instance_of(state);
  Rng unused(0);
  auto traj = collect_episode(state, policy, nullptr, unused, policy::SampleMode::kGreedy);
  r.metrics = harness::measure(state);
  r.metrics.reward = traj.total_reward();
  r.metrics.variant = policy::variant_name(policy.spec().variant);
  r.metrics.seed = instance.seed;
  r.routes = state.routes;
  r.steps = traj.length();
  return r;
}

EvalResult evaluate_deterministic(const env::EnvConfig& env_config,
                                  const policy::Policy& policy,
                                  std::uint64_t eval_seed) {
  return evaluate_instance(env_config, env::generate_instance(env_config, eval_seed),
                           policy);
}

json checkpoint_json(const env::EnvConfig& env_config, const TrainConfig& train,
                     const policy::Policy& policy, std::uint64_t seed,
                     std::size_t episode) {
  json j = policy::policy_to_json(policy);
  j["episode"] = episode;
  j["rng_seed"] = seed;
  j["env"] = env_config;
  j["train"] = train;
  json m = json::object(), v = json::object();
  for (const auto& [name, t] : policy.params().first_moments()) m[name] = t.values;
  for (const auto& [name, t] : policy.params().second_moments()) v[name] = t.values;
  j["optimizer"] = json{{"step", policy.params().step()}, {"m", m}, {"v", v}};
  return j;
}

policy::Policy restore_policy(const json& j) {
  policy::Policy p = policy::policy_from_json(j);
  if (!j.contains("optimizer")) return p;
  try {
    const auto& opt = j.at("optimizer");
    std::map<std::string, ad::Tensor> m, v;
    for (const auto& [name, t] : p.params().params()) {
      m.emplace(name, ad::Tensor(t.shape, opt.at("m").at(name).get<std::vector<double>>()));
      v.emplace(name, ad::Tensor(t.shape, opt.at("v").at(name).get<std::vector<double>>()));
    }
    p.params().restore_moments(std::move(m), std::move(v),
                               opt.at("step").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed optimizer state: ") + e.what());
  }
  return p;
}

namespace {

json eval_record(std::size_t episode, const EvalResult& r) {
  const auto& m = r.metrics;
  return json{{"type", "eval"},
              {"episode", episode},
              {"reward", m.reward},
              {"distance", m.distance},
              {"compactness", m.compactness ? json(*m.compactness) : json(nullptr)},
              {"crossings", m.crossings},
              {"served", m.served},
              {"steps", r.steps}};
}

std::string numbered(const char* stem, std::size_t episode, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu%s", stem, episode, ext);
  return buf;
}

class RunLog {
 public:
  RunLog(const std::filesystem::path& dir, TrainResult& result) : result_(result) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    file_.open(dir / "run.jsonl", std::ios::binary | std::ios::trunc);
    if (!file_) throw IoError("cannot open " + (dir / "run.jsonl").string());
  }
  void write(json record) {
    if (file_.is_open()) {
      file_ << record.dump() << '\n';
      file_.flush();
      if (!file_) throw IoError("failed writing run log");
    }
    result_.log.push_back(std::move(record));
  }

 private:
  TrainResult& result_;
  std::ofstream file_;
};

TrainResult run(const env::EnvConfig& env_config, const TrainConfig& config,
                policy::Policy policy, std::uint64_t seed, std::size_t start,
                const RunOptions& options) {
  env_config.validate();
  config.validate();
  const auto& spec = policy.spec();
  if (spec.n_clients != env_config.n_clients || spec.n_vehicles != env_config.n_vehicles) {
    throw ConfigError("policy spec does not match the environment size");
  }
  if (start > config.episodes) throw ConfigError("checkpoint is past the last episode");

  TrainResult result;
  RunLog log(options.out_dir, result);
  const std::uint64_t eval_seed = config.eval_seed.value_or(default_eval_seed(seed));
  const auto& dir = options.out_dir;

  auto evaluate = [&](std::size_t episode) {
    EvalPoint point{episode, evaluate_deterministic(env_config, policy, eval_seed)};
    point.result.metrics.seed = seed;
    log.write(eval_record(episode, point.result));
    if (!dir.empty() && options.write_svgs) {
      harness::render_routes_svg(
          point.result.instance, point.result.routes,
          dir / "routes" / numbered("episode", episode, ".svg"),
          policy::variant_name(spec.variant) + " seed " + std::to_string(seed) +
              " episode " + std::to_string(episode));
    }
    if (!dir.empty() && options.write_checkpoints) {
      auto path = dir / "checkpoints" / numbered("episode", episode, ".json");
      harness::write_text(path,
                          checkpoint_json(env_config, config, policy, seed, episode).dump());
      result.last_checkpoint = path;
    }
    result.evals.push_back(std::move(point));
  };

  if (start == 0) evaluate(0);
  for (std::size_t e = start; e < config.episodes; ++e) {
    auto state = env::reset(env_config, derive_seed(seed, kTrainInstances, e));
    Rng rng(derive_seed(seed, kSampling, e));
    ad::Graph graph;
    ad::Binder bind(graph, policy.params());
    Trajectory traj =
        collect_episode(state, policy, &bind, rng, policy::SampleMode::kStochastic);
    traj.returns = discounted_returns(traj.rewards(), config.gamma);
    const double ec = entropy_coef_schedule(e, config);
    Loss loss = a2c_loss(traj, ec, config.value_coef);
    json record{{"type", "episode"},
                {"episode", e},
                {"reward", traj.total_reward()},
                {"steps", traj.length()},
                {"policy_loss", loss.report.policy},
                {"value_loss", loss.report.value},
                {"entropy", loss.report.entropy},
                {"total_loss", loss.report.total},
                {"entropy_coef", ec}};
    if (!std::isfinite(loss.report.total)) {
      record["type"] = "abort";
      record["reason"] = "non-finite loss";
      // json cannot hold NaN; keep the offending terms readable.
      for (const char* k : {"policy_loss", "value_loss", "entropy", "total_loss"}) {
        const double x = record[k].get<double>();
        if (!std::isfinite(x)) record[k] = std::to_string(x);
      }
      log.write(record);
      result.aborted = true;
      result.abort_reason = "non-finite loss at episode " + std::to_string(e);
      result.episodes_completed = e;
      result.policy = std::move(policy);
      return result;
    }
    graph.backward(loss.total);
    auto grads = bind.gradients();
    record["grad_norm"] = ad::clip_grad_norm(grads, config.grad_clip_norm);
    ad::adamw_step(policy.params(), grads, config.lr, config.beta1, config.beta2,
                   config.adam_eps, config.weight_decay);
    log.write(std::move(record));

    const std::size_t done = e + 1;
    if (done % config.eval_every == 0 || done == config.episodes) evaluate(done);
  }
  result.episodes_completed = config.episodes;
  result.policy = std::move(policy);
  return result;
}

}  // namespace

TrainResult train(const env::EnvConfig& env_config, const policy::PolicySpec& spec,
                  const TrainConfig& config, std::uint64_t seed,
                  const RunOptions& options) {
  return run(env_config, config, policy::Policy(spec, seed), seed, 0, options);
}

TrainResult train_policy(const env::EnvConfig& env_config, policy::Policy policy,
                         const TrainConfig& config, std::uint64_t seed,
                         const RunOptions& options) {
  return run(env_config, config, std::move(policy), seed, 0, options);
}

TrainResult resume(const json& checkpoint, const RunOptions& options) {
  try {
    auto env_config = checkpoint.at("env").get<env::EnvConfig>();
    auto config = checkpoint.at("train").get<TrainConfig>();
    const auto seed = checkpoint.at("rng_seed").get<std::uint64_t>();
    const auto episode = checkpoint.at("episode").get<std::size_t>();
    return run(env_config, config, restore_policy(checkpoint), seed, episode, options);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace qcvrp::a2c

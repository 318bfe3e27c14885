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

#include "qcvrp/qcvrp.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "qcvrp/a2c/trainer.hpp"
#include "qcvrp/common/error.hpp"
#include "qcvrp/common/rng.hpp"
#include "qcvrp/env/cvrp.hpp"
#include "qcvrp/env/serialize.hpp"
#include "qcvrp/harness/bench.hpp"
#include "qcvrp/harness/svg.hpp"
#include "qcvrp/policy/policy.hpp"

struct qcvrp_env {
  qcvrp::env::EnvState state;
};

struct qcvrp_policy {
  qcvrp::policy::Policy policy;
};

namespace {

using nlohmann::json;
using namespace qcvrp;

thread_local std::string g_last_error;

qcvrp_status fail(qcvrp_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the library's exception hierarchy onto status codes.
template <typename F>
qcvrp_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return QCVRP_OK;
  } catch (const DimensionError& e) {
    return fail(QCVRP_ERR_DIMENSION, e.what());
  } catch (const ContractError& e) {
    return fail(QCVRP_ERR_CONTRACT, e.what());
  } catch (const ConfigError& e) {
    return fail(QCVRP_ERR_CONFIG, e.what());
  } catch (const InfeasibleError& e) {
    return fail(QCVRP_ERR_INFEASIBLE, e.what());
  } catch (const EmbeddingError& e) {
    return fail(QCVRP_ERR_EMBEDDING, e.what());
  } catch (const IoError& e) {
    return fail(QCVRP_ERR_IO, e.what());
  } catch (const NumericError& e) {
    return fail(QCVRP_ERR_NUMERIC, e.what());
  } catch (const json::exception& e) {
    return fail(QCVRP_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(QCVRP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QCVRP_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void hand_out(char** out, const json& j) {
  if (out) *out = duplicate(j.dump());
}

json parse(const char* text, const char* what) {
  if (!text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("cannot parse ") + what + ": " + e.what());
  }
}

env::EnvConfig env_config(const char* text) {
  env::EnvConfig c;
  env::from_json(parse(text, "environment config"), c);
  c.validate();
  return c;
}

void check_buffer(std::size_t have, std::size_t need, const char* what) {
  if (have < need) {
    throw ContractError(std::string(what) + " buffer holds " + std::to_string(have) +
                        " entries, needs " + std::to_string(need));
  }
}

json eval_summary(const a2c::EvalResult& r) {
  return json{{"metrics", r.metrics},
              {"steps", r.steps},
              {"routes", env::route_log_to_json(r.routes)}};
}

}  // namespace

extern "C" {

const char* qcvrp_version(void) { return "0.1.0"; }

const char* qcvrp_last_error(void) { return g_last_error.c_str(); }

const char* qcvrp_status_name(qcvrp_status s) {
  switch (s) {
    case QCVRP_OK: return "ok";
    case QCVRP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QCVRP_ERR_DIMENSION: return "dimension error";
    case QCVRP_ERR_CONTRACT: return "contract error";
    case QCVRP_ERR_CONFIG: return "config error";
    case QCVRP_ERR_INFEASIBLE: return "infeasible";
    case QCVRP_ERR_EMBEDDING: return "embedding error";
    case QCVRP_ERR_IO: return "i/o error";
    case QCVRP_ERR_NUMERIC: return "numeric error";
    case QCVRP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void qcvrp_string_free(char* s) { std::free(s); }

qcvrp_status qcvrp_env_create(const char* config_json, uint64_t seed, qcvrp_env** out) {
  if (!out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null output handle");
  return guarded([&] {
    *out = new qcvrp_env{env::reset(env_config(config_json), seed)};
  });
}

qcvrp_status qcvrp_env_from_instance(const char* instance_json, qcvrp_env** out) {
  if (!out || !instance_json) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto [config, inst] = env::instance_from_json(parse(instance_json, "instance"));
    *out = new qcvrp_env{env::make_state(config, inst)};
  });
}

void qcvrp_env_destroy(qcvrp_env* env) { delete env; }

qcvrp_status qcvrp_env_dims(const qcvrp_env* env, size_t* n_clients,
                            size_t* n_vehicles, size_t* obs_size) {
  if (!env) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null environment");
  const auto& c = env->state.config;
  if (n_clients) *n_clients = c.n_clients;
  if (n_vehicles) *n_vehicles = c.n_vehicles;
  if (obs_size) *obs_size = c.observation_size();
  g_last_error.clear();
  return QCVRP_OK;
}

qcvrp_status qcvrp_env_observe(const qcvrp_env* env, double* obs, size_t len) {
  if (!env || !obs) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto o = env::observe(env->state);
    check_buffer(len, o.size(), "observation");
    std::copy(o.begin(), o.end(), obs);
  });
}

qcvrp_status qcvrp_env_mask(const qcvrp_env* env, size_t vehicle, uint8_t* mask,
                            size_t len) {
  if (!env || !mask) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto m = env::valid_action_mask(env->state, vehicle);
    check_buffer(len, m.size(), "mask");
    std::copy(m.begin(), m.end(), mask);
  });
}

qcvrp_status qcvrp_env_step(qcvrp_env* env, const size_t* actions, size_t n_actions,
                            double* rewards, int* done) {
  if (!env || !actions) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    env::ActionSet a(actions, actions + n_actions);
    auto r = env::step(env->state, a);
    if (rewards) {
      for (std::size_t v = 0; v < r.rewards.size(); ++v) rewards[v] = r.rewards[v].total;
    }
    if (done) *done = r.done ? 1 : 0;
  });
}

qcvrp_status qcvrp_env_distance(const qcvrp_env* env, double* out) {
  if (!env || !out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  *out = env->state.distance_travelled;
  g_last_error.clear();
  return QCVRP_OK;
}

qcvrp_status qcvrp_env_served(const qcvrp_env* env, size_t* out) {
  if (!env || !out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  *out = env::served_count(env->state);
  g_last_error.clear();
  return QCVRP_OK;
}

qcvrp_status qcvrp_env_routes_json(const qcvrp_env* env, char** out) {
  if (!env || !out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { hand_out(out, env::route_log_to_json(env->state.routes)); });
}

qcvrp_status qcvrp_env_instance_json(const qcvrp_env* env, char** out) {
  if (!env || !out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    hand_out(out, env::instance_to_json(env->state.config, env::instance_of(env->state)));
  });
}

qcvrp_status qcvrp_instance_json(const char* config_json, uint64_t seed, char** out) {
  if (!out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null output");
  return guarded([&] {
    auto c = env_config(config_json);
    hand_out(out, env::instance_to_json(c, env::generate_instance(c, seed)));
  });
}

qcvrp_status qcvrp_instance_write(const char* config_json, uint64_t seed,
                                  const char* path) {
  if (!path) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null path");
  return guarded([&] {
    auto c = env_config(config_json);
    harness::write_text(path,
                        env::instance_to_json(c, env::generate_instance(c, seed)).dump(2) + "\n");
  });
}

qcvrp_status qcvrp_policy_create(const char* variant, const char* spec_json,
                                 uint64_t seed, qcvrp_policy** out) {
  if (!variant || !out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    policy::PolicySpec spec;
    spec.variant = policy::parse_variant(variant);
    json j = parse(spec_json, "policy spec");
    if (j.contains("variant") && policy::parse_variant(j.at("variant").get<std::string>()) !=
                                     spec.variant) {
      throw ConfigError("spec variant disagrees with the requested variant");
    }
    policy::from_json(j, spec);
    *out = new qcvrp_policy{policy::Policy(spec, seed)};
  });
}

qcvrp_status qcvrp_policy_load(const char* checkpoint_path, qcvrp_policy** out) {
  if (!checkpoint_path || !out) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto j = parse(harness::read_text(checkpoint_path).c_str(), "checkpoint");
    *out = new qcvrp_policy{a2c::restore_policy(j)};
  });
}

void qcvrp_policy_destroy(qcvrp_policy* policy) { delete policy; }

qcvrp_status qcvrp_policy_dims(const qcvrp_policy* p, size_t* n_vehicles,
                               size_t* n_candidates, size_t* n_parameters) {
  if (!p) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null policy");
  const auto& s = p->policy.spec();
  if (n_vehicles) *n_vehicles = s.n_vehicles;
  if (n_candidates) *n_candidates = s.candidates();
  if (n_parameters) *n_parameters = p->policy.params().total_size();
  g_last_error.clear();
  return QCVRP_OK;
}

qcvrp_status qcvrp_policy_forward(const qcvrp_policy* p, const double* obs,
                                  size_t obs_len, double* logits, size_t logits_len,
                                  double* value) {
  if (!p || !obs || !logits) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto out = p->policy.evaluate(std::span<const double>(obs, obs_len));
    check_buffer(logits_len, out.logits.size(), "logits");
    std::copy(out.logits.begin(), out.logits.end(), logits);
    if (value) *value = out.value;
  });
}

qcvrp_status qcvrp_policy_act(const qcvrp_policy* p, const qcvrp_env* env,
                              size_t* actions, size_t n_actions) {
  if (!p || !env || !actions) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& state = env->state;
    check_buffer(n_actions, state.config.n_vehicles, "actions");
    auto out = p->policy.evaluate(env::observe(state));
    env::EnvState scratch = state;
    Rng unused(0);
    for (std::size_t v = 0; v < state.config.n_vehicles; ++v) {
      actions[v] = state.config.depot_action();
      if (env::all_served(scratch)) continue;
      auto pick = policy::sample_row(out.row(v), env::valid_action_mask(scratch, v),
                                     policy::SampleMode::kGreedy, unused);
      actions[v] = pick.action;
      env::step_vehicle(scratch, v, pick.action);
    }
  });
}

qcvrp_status qcvrp_train(const char* variant, const char* config_path, uint64_t seed,
                         const char* out_dir, char** summary_json) {
  if (!variant) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null variant");
  return guarded([&] {
    const auto v = policy::parse_variant(variant);
    auto cfg = config_path ? harness::load_run_config(config_path, v)
                           : harness::parse_run_config(json::object(), v);
    a2c::RunOptions ro;
    if (out_dir) ro.out_dir = out_dir;
    auto r = a2c::train(cfg.env, cfg.policy, cfg.train, seed, ro);
    if (out_dir) {
      harness::write_text(std::filesystem::path(out_dir) / "config.json",
                          harness::run_config_json(cfg).dump(2) + "\n");
    }
    json summary{{"variant", policy::variant_name(v)},
                 {"seed", seed},
                 {"episodes", r.episodes_completed},
                 {"aborted", r.aborted},
                 {"last_checkpoint", r.last_checkpoint.string()}};
    if (!r.evals.empty()) {
      summary["first_eval"] = r.evals.front().result.metrics;
      summary["final_eval"] = r.evals.back().result.metrics;
    }
    if (r.aborted) {
      hand_out(summary_json, summary);
      throw NumericError(r.abort_reason);
    }
    hand_out(summary_json, summary);
  });
}

qcvrp_status qcvrp_eval(const char* checkpoint_path, const char* instance_path,
                        const char* out_dir, char** summary_json) {
  if (!checkpoint_path || !instance_path) {
    return fail(QCVRP_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    auto policy = a2c::restore_policy(
        parse(harness::read_text(checkpoint_path).c_str(), "checkpoint"));
    auto [config, inst] = env::instance_from_json(
        parse(harness::read_text(instance_path).c_str(), "instance"));
    if (config.n_clients != policy.spec().n_clients ||
        config.n_vehicles != policy.spec().n_vehicles) {
      throw ConfigError("instance size does not match the checkpoint's policy");
    }
    auto r = a2c::evaluate_instance(config, inst, policy);
    json summary = eval_summary(r);
    if (out_dir) {
      std::filesystem::path dir(out_dir);
      harness::write_text(dir / "eval.json", summary.dump(2) + "\n");
      harness::render_routes_svg(r.instance, r.routes, dir / "routes.svg",
                                 policy::variant_name(policy.spec().variant) +
                                     " instance " + std::to_string(inst.seed));
    }
    hand_out(summary_json, summary);
  });
}

qcvrp_status qcvrp_bench(const char* variants, size_t n_seeds, const char* config_path,
                         const char* out_dir, unsigned threads, char** report_json) {
  if (!variants) return fail(QCVRP_ERR_INVALID_ARGUMENT, "null variants");
  return guarded([&] {
    harness::BenchOptions o;
    o.variants = harness::parse_variant_list(variants);
    if (config_path) o.config = parse(harness::read_text(config_path).c_str(), "config");
    if (n_seeds == 0) throw ConfigError("bench needs at least one seed");
    // Seed list from the first variant's training config.
    auto base = harness::parse_run_config(o.config, o.variants.front()).train.seeds;
    for (std::size_t i = 0; i < n_seeds; ++i) {
      o.seeds.push_back(i < base.size() ? base[i]
                                        : (base.empty() ? i : base.back() + (i - base.size() + 1)));
    }
    if (out_dir) o.out_dir = out_dir;
    o.threads = threads == 0 ? 1 : threads;
    auto r = harness::run_bench(o);
    hand_out(report_json, harness::report_to_json(r));
  });
}

}  // extern "C"

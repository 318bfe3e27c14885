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

/* C interface to the qcvrp library. Every call returns a qcvrp_status; on
 * failure qcvrp_last_error() describes the problem (thread-local, valid until
 * the next call on the same thread). Strings returned through char** are
 * owned by the caller and released with qcvrp_string_free. */
#ifndef QCVRP_QCVRP_H_
#define QCVRP_QCVRP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QCVRP_API __declspec(dllexport)
#else
#define QCVRP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qcvrp_status {
  QCVRP_OK = 0,
  QCVRP_ERR_INVALID_ARGUMENT = 1, /* null pointer, short buffer */
  QCVRP_ERR_DIMENSION = 2,
  QCVRP_ERR_CONTRACT = 3,
  QCVRP_ERR_CONFIG = 4,
  QCVRP_ERR_INFEASIBLE = 5,
  QCVRP_ERR_EMBEDDING = 6,
  QCVRP_ERR_IO = 7,
  QCVRP_ERR_NUMERIC = 8,
  QCVRP_ERR_INTERNAL = 9
} qcvrp_status;

typedef struct qcvrp_env qcvrp_env;
typedef struct qcvrp_policy qcvrp_policy;

QCVRP_API const char* qcvrp_version(void);
QCVRP_API const char* qcvrp_last_error(void);
QCVRP_API const char* qcvrp_status_name(qcvrp_status status);
QCVRP_API void qcvrp_string_free(char* s);

/* Environments. config_json may be NULL for the defaults. */
QCVRP_API qcvrp_status qcvrp_env_create(const char* config_json, uint64_t seed,
                                        qcvrp_env** out);
/* From an instance document as written by qcvrp_instance_write. */
QCVRP_API qcvrp_status qcvrp_env_from_instance(const char* instance_json,
                                               qcvrp_env** out);
QCVRP_API void qcvrp_env_destroy(qcvrp_env* env);

QCVRP_API qcvrp_status qcvrp_env_dims(const qcvrp_env* env, size_t* n_clients,
                                      size_t* n_vehicles, size_t* obs_size);
QCVRP_API qcvrp_status qcvrp_env_observe(const qcvrp_env* env, double* obs,
                                         size_t len);
/* n_clients + 1 entries; the last is the depot. */
QCVRP_API qcvrp_status qcvrp_env_mask(const qcvrp_env* env, size_t vehicle,
                                      uint8_t* mask, size_t len);
/* rewards may be NULL; otherwise it receives one total per vehicle. */
QCVRP_API qcvrp_status qcvrp_env_step(qcvrp_env* env, const size_t* actions,
                                      size_t n_actions, double* rewards,
                                      int* done);
QCVRP_API qcvrp_status qcvrp_env_distance(const qcvrp_env* env, double* out);
QCVRP_API qcvrp_status qcvrp_env_served(const qcvrp_env* env, size_t* out);
QCVRP_API qcvrp_status qcvrp_env_routes_json(const qcvrp_env* env, char** out);
QCVRP_API qcvrp_status qcvrp_env_instance_json(const qcvrp_env* env, char** out);

/* Instance document for (config, seed); path variant writes it to disk. */
QCVRP_API qcvrp_status qcvrp_instance_json(const char* config_json, uint64_t seed,
                                           char** out);
QCVRP_API qcvrp_status qcvrp_instance_write(const char* config_json, uint64_t seed,
                                            const char* path);

/* Policies. variant is "cpn", "hqp" or "fqp"; spec_json may be NULL or hold
 * policy spec fields. Client and vehicle counts come from the spec. */
QCVRP_API qcvrp_status qcvrp_policy_create(const char* variant, const char* spec_json,
                                           uint64_t seed, qcvrp_policy** out);
QCVRP_API qcvrp_status qcvrp_policy_load(const char* checkpoint_path,
                                         qcvrp_policy** out);
QCVRP_API void qcvrp_policy_destroy(qcvrp_policy* policy);
QCVRP_API qcvrp_status qcvrp_policy_dims(const qcvrp_policy* policy,
                                         size_t* n_vehicles, size_t* n_candidates,
                                         size_t* n_parameters);
/* logits: n_vehicles * (n_clients + 1) entries, depot column last. */
QCVRP_API qcvrp_status qcvrp_policy_forward(const qcvrp_policy* policy,
                                            const double* obs, size_t obs_len,
                                            double* logits, size_t logits_len,
                                            double* value);
/* Greedy action per vehicle for the environment's current state. */
QCVRP_API qcvrp_status qcvrp_policy_act(const qcvrp_policy* policy,
                                        const qcvrp_env* env, size_t* actions,
                                        size_t n_actions);

/* Runs. config_path may be NULL. Summaries are JSON documents; pass NULL
 * to discard them. */
QCVRP_API qcvrp_status qcvrp_train(const char* variant, const char* config_path,
                                   uint64_t seed, const char* out_dir,
                                   char** summary_json);
QCVRP_API qcvrp_status qcvrp_eval(const char* checkpoint_path,
                                  const char* instance_path, const char* out_dir,
                                  char** summary_json);
/* variants is comma separated. The first n_seeds entries of the training
 * seed list are used (extended with consecutive integers if needed). */
QCVRP_API qcvrp_status qcvrp_bench(const char* variants, size_t n_seeds,
                                   const char* config_path, const char* out_dir,
                                   unsigned threads, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* QCVRP_QCVRP_H_ */

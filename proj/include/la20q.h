/* Copyright 2026 The la20q Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the la20q library: configuration, knowledge bases,
 * experiments and the game service.
 *
 * Conventions:
 *   - Every fallible call returns la_status; on failure the message is
 *     available from la_last_error() on the same thread until the next call.
 *   - Strings returned through char** are owned by the caller and must be
 *     released with la_string_free().
 *   - Handles are released with their *_destroy function; destroying NULL is
 *     a no-op.
 */

#ifndef LA20Q_H_
#define LA20Q_H_

#include <stddef.h>

#if defined(_WIN32)
#define LA20Q_API __declspec(dllexport)
#else
#define LA20Q_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum la_status {
  LA_OK = 0,
  LA_ERR_INVALID_ARGUMENT = 1,
  LA_ERR_STRUCTURAL = 2, /* mismatched shapes or dimensions */
  LA_ERR_PARSE = 3,
  LA_ERR_IO = 4,
  LA_ERR_STATE = 5, /* operation not allowed in the current state */
  LA_ERR_NOT_FOUND = 6,
  LA_ERR_CAPACITY = 7,
  LA_ERR_INTERNAL = 8
} la_status;

typedef struct la_config la_config;
typedef struct la_kb la_kb;
typedef struct la_service la_service;

typedef void (*la_progress_fn)(const char* message, void* user);

LA20Q_API const char* la_version(void);
LA20Q_API const char* la_status_name(la_status status);
LA20Q_API const char* la_last_error(void);
LA20Q_API void la_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

LA20Q_API la_status la_config_create(la_config** out);
LA20Q_API void la_config_destroy(la_config* config);
/* INI file with [section] headers and key = value lines. */
LA20Q_API la_status la_config_load_file(la_config* config, const char* path);
/* Dotted key such as "train.episodes". */
LA20Q_API la_status la_config_set(la_config* config, const char* key, const char* value);
/* "key=value" */
LA20Q_API la_status la_config_apply(la_config* config, const char* assignment);
LA20Q_API la_status la_config_get(const la_config* config, const char* key, char** value);
LA20Q_API la_status la_config_to_ini(const la_config* config, char** text);

/* --- knowledge bases ---------------------------------------------------- */

/* The synthetic KB described by the kb.* settings (kb.path is ignored). */
LA20Q_API la_status la_kb_generate(const la_config* config, la_kb** out);
LA20Q_API la_status la_kb_load(const char* path, la_kb** out);
LA20Q_API la_status la_kb_save(const la_kb* kb, const char* path);
LA20Q_API void la_kb_destroy(la_kb* kb);
LA20Q_API la_status la_kb_dims(const la_kb* kb, size_t* entities, size_t* questions,
                               size_t* known);
LA20Q_API la_status la_kb_distance(const la_kb* agent, const la_kb* player, double* distance);

/* --- experiments ---------------------------------------------------------
 * out_dir may be NULL to skip writing files. A non-empty out_dir is only
 * reused when force is non-zero. summary_json may be NULL.
 */

LA20Q_API la_status la_train_is(const la_config* config, const char* out_dir, int force,
                                la_progress_fn progress, void* user, char** summary_json);
/* Evaluates agent.policy (or the entropy agent) without training. */
LA20Q_API la_status la_eval_is(const la_config* config, const char* out_dir, int force,
                               la_progress_fn progress, void* user, char** summary_json);
LA20Q_API la_status la_run_ka(const la_config* config, const char* out_dir, int force,
                              la_progress_fn progress, void* user, char** summary_json);
LA20Q_API la_status la_sweep_t1(const la_config* config, const char* out_dir, int force,
                                la_progress_fn progress, void* user, char** summary_json);

/* --- game service --------------------------------------------------------
 * The service plays with agent.policy, or the entropy agent when agent.type
 * is "entropy", over the KB from kb.path or kb.*.
 */

LA20Q_API la_status la_service_create(const la_config* config, la_service** out);
LA20Q_API void la_service_destroy(la_service* service);
/* Dispatches one API request; http_status and response_json are always set
 * on LA_OK, including for API-level errors (404, 409, ...). */
LA20Q_API la_status la_service_handle(la_service* service, const char* method, const char* path,
                                      const char* body, int* http_status, char** response_json);
/* port 0 picks a free port; the bound port is written to bound_port. */
LA20Q_API la_status la_service_bind(la_service* service, const char* host, int port,
                                    int* bound_port);
/* Blocks until la_service_stop(). */
LA20Q_API la_status la_service_serve(la_service* service);
LA20Q_API la_status la_service_stop(la_service* service);

#ifdef __cplusplus
}
#endif

#endif /* LA20Q_H_ */

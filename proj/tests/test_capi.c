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

/* Exercises the C interface from C. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "la20q.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static int progress_calls = 0;

static void count_progress(const char* message, void* user) {
  (void)message;
  ++*(int*)user;
}

static la_config* small_config(void) {
  la_config* config = NULL;
  EXPECT(la_config_create(&config) == LA_OK);
  EXPECT(la_config_set(config, "kb.entities", "20") == LA_OK);
  EXPECT(la_config_set(config, "kb.questions", "16") == LA_OK);
  EXPECT(la_config_apply(config, "game.questions=6") == LA_OK);
  EXPECT(la_config_apply(config, "game.is_questions=5") == LA_OK);
  EXPECT(la_config_apply(config, "eval.episodes=50") == LA_OK);
  return config;
}

static void test_config(void) {
  la_config* config = small_config();
  char* value = NULL;
  EXPECT(la_config_get(config, "kb.entities", &value) == LA_OK);
  EXPECT(value && strcmp(value, "20") == 0);
  la_string_free(value);

  EXPECT(la_config_set(config, "kb.nonsense", "1") == LA_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(la_last_error(), "kb.nonsense") != NULL);
  EXPECT(la_config_set(config, "kb.entities", "lots") == LA_ERR_INVALID_ARGUMENT);
  EXPECT(la_config_load_file(config, "/nonexistent/la.ini") == LA_ERR_IO);
  EXPECT(la_config_get(NULL, "kb.entities", &value) == LA_ERR_INVALID_ARGUMENT);

  char* ini = NULL;
  EXPECT(la_config_to_ini(config, &ini) == LA_OK);
  EXPECT(ini && strstr(ini, "[kb]") != NULL);
  la_string_free(ini);
  la_config_destroy(config);
  la_config_destroy(NULL);
}

static void test_kb(void) {
  la_config* config = small_config();
  la_kb* kb = NULL;
  EXPECT(la_kb_generate(config, &kb) == LA_OK);
  size_t entities = 0, questions = 0, known = 0;
  EXPECT(la_kb_dims(kb, &entities, &questions, &known) == LA_OK);
  EXPECT(entities == 20 && questions == 16 && known > 0);

  const char* path = "capi_test_kb.txt";
  EXPECT(la_kb_save(kb, path) == LA_OK);
  la_kb* back = NULL;
  EXPECT(la_kb_load(path, &back) == LA_OK);
  double distance = 0.0;
  EXPECT(la_kb_distance(kb, back, &distance) == LA_OK);
  EXPECT(distance == 1.0);
  remove(path);

  la_kb* other = NULL;
  EXPECT(la_config_set(config, "kb.entities", "21") == LA_OK);
  EXPECT(la_kb_generate(config, &other) == LA_OK);
  EXPECT(la_kb_distance(kb, other, &distance) == LA_ERR_STRUCTURAL);
  EXPECT(la_kb_load("/nonexistent/kb.txt", &back) != LA_OK);

  la_kb_destroy(kb);
  la_kb_destroy(back);
  la_kb_destroy(other);
  la_config_destroy(config);
}

static void test_experiments(void) {
  la_config* config = small_config();
  char* summary = NULL;
  EXPECT(la_eval_is(config, NULL, 0, NULL, NULL, &summary) == LA_ERR_INVALID_ARGUMENT);
  EXPECT(la_config_set(config, "agent.type", "entropy") == LA_OK);
  EXPECT(la_eval_is(config, NULL, 0, count_progress, &progress_calls, &summary) == LA_OK);
  EXPECT(summary && strstr(summary, "\"kind\": \"is\"") != NULL);
  la_string_free(summary);

  EXPECT(la_config_set(config, "agent.type", "la-lin") == LA_OK);
  EXPECT(la_config_set(config, "train.episodes", "20") == LA_OK);
  EXPECT(la_train_is(config, NULL, 0, count_progress, &progress_calls, &summary) == LA_OK);
  EXPECT(summary && strstr(summary, "winning_rate") != NULL);
  la_string_free(summary);
  EXPECT(progress_calls > 0);

  EXPECT(la_config_set(config, "game.is_questions", "9") == LA_OK);
  EXPECT(la_train_is(config, NULL, 0, NULL, NULL, NULL) == LA_ERR_INVALID_ARGUMENT);
  la_config_destroy(config);
}

static void test_service(void) {
  la_config* config = small_config();
  la_service* service = NULL;
  EXPECT(la_service_create(config, &service) == LA_ERR_INVALID_ARGUMENT);
  EXPECT(la_config_set(config, "agent.type", "entropy") == LA_OK);
  EXPECT(la_service_create(config, &service) == LA_OK);

  int status = 0;
  char* body = NULL;
  EXPECT(la_service_handle(service, "GET", "/api/v1/health", "", &status, &body) == LA_OK);
  EXPECT(status == 200);
  EXPECT(body && strstr(body, "\"kb_entities\":20") != NULL);
  la_string_free(body);

  EXPECT(la_service_handle(service, "POST", "/api/v1/sessions", NULL, &status, &body) == LA_OK);
  EXPECT(status == 201);
  la_string_free(body);
  EXPECT(la_service_handle(service, "GET", "/api/v1/sessions/none", NULL, &status, &body) == LA_OK);
  EXPECT(status == 404);
  la_string_free(body);
  EXPECT(la_service_serve(service) == LA_ERR_STATE);
  la_service_destroy(service);
  la_config_destroy(config);
}

int main(void) {
  EXPECT(strcmp(la_version(), "1.0.0") == 0);
  EXPECT(strcmp(la_status_name(LA_ERR_CAPACITY), "at capacity") == 0);
  test_config();
  test_kb();
  test_experiments();
  test_service();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("c api: all checks passed\n");
  return 0;
}

// Copyright 2026 The la20q Authors
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

#include "la20q.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "la/config.hpp"
#include "la/error.hpp"
#include "la/game_service.hpp"
#include "la/harness.hpp"
#include "la/kb.hpp"

struct la_config {
  la::ExperimentConfig value;
};

struct la_kb {
  la::KnowledgeBase value;
};

struct la_service {
  std::unique_ptr<la::GameService> value;
};

namespace {

thread_local std::string last_error;

la_status fail(la_status status, const char* message) {
  last_error = message;
  return status;
}

// Runs `body`, mapping exceptions onto status codes.
template <typename F>
la_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return LA_OK;
  } catch (const la::InvalidArgument& e) {
    return fail(LA_ERR_INVALID_ARGUMENT, e.what());
  } catch (const la::StructuralError& e) {
    return fail(LA_ERR_STRUCTURAL, e.what());
  } catch (const la::ParseError& e) {
    return fail(LA_ERR_PARSE, e.what());
  } catch (const la::IoError& e) {
    return fail(LA_ERR_IO, e.what());
  } catch (const la::StateError& e) {
    return fail(LA_ERR_STATE, e.what());
  } catch (const la::NotFound& e) {
    return fail(LA_ERR_NOT_FOUND, e.what());
  } catch (const la::CapacityError& e) {
    return fail(LA_ERR_CAPACITY, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LA_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LA_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw la::InvalidArgument(std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_output(char** out, const std::string& s) {
  if (out != nullptr) *out = copy_string(s);
}

la::ProgressFn progress_adapter(la_progress_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const std::string& message) { fn(message.c_str(), user); };
}

// Validates and prepares the output directory before any work starts.
const char* prepare(const char* out_dir, int force) {
  if (out_dir != nullptr) la::prepare_output_dir(out_dir, force != 0);
  return out_dir;
}

}  // namespace

extern "C" {

const char* la_version(void) { return la::kLibraryVersion; }

const char* la_status_name(la_status status) {
  switch (status) {
    case LA_OK:
      return "ok";
    case LA_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case LA_ERR_STRUCTURAL:
      return "structural mismatch";
    case LA_ERR_PARSE:
      return "parse error";
    case LA_ERR_IO:
      return "i/o error";
    case LA_ERR_STATE:
      return "invalid state";
    case LA_ERR_NOT_FOUND:
      return "not found";
    case LA_ERR_CAPACITY:
      return "at capacity";
    case LA_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* la_last_error(void) { return last_error.c_str(); }

void la_string_free(char* s) { std::free(s); }

la_status la_config_create(la_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new la_config();
  });
}

void la_config_destroy(la_config* config) { delete config; }

la_status la_config_load_file(la_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    la::load_config_file(config->value, path);
  });
}

la_status la_config_set(la_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    la::apply_setting(config->value, key, value);
  });
}

la_status la_config_apply(la_config* config, const char* assignment) {
  return guarded([&] {
    require(config, "config");
    require(assignment, "assignment");
    la::apply_override(config->value, assignment);
  });
}

la_status la_config_get(const la_config* config, const char* key, char** value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    *value = copy_string(la::get_setting(config->value, key));
  });
}

la_status la_config_to_ini(const la_config* config, char** text) {
  return guarded([&] {
    require(config, "config");
    require(text, "text");
    std::ostringstream out;
    la::write_config(out, config->value);
    *text = copy_string(out.str());
  });
}

la_status la_kb_generate(const la_config* config, la_kb** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = new la_kb{la::generate_synthetic_kb(config->value.kb_spec)};
  });
}

la_status la_kb_load(const char* path, la_kb** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new la_kb{la::load_kb(path)};
  });
}

la_status la_kb_save(const la_kb* kb, const char* path) {
  return guarded([&] {
    require(kb, "kb");
    require(path, "path");
    la::save_kb(kb->value, path);
  });
}

void la_kb_destroy(la_kb* kb) { delete kb; }

la_status la_kb_dims(const la_kb* kb, size_t* entities, size_t* questions, size_t* known) {
  return guarded([&] {
    require(kb, "kb");
    if (entities) *entities = kb->value.num_entities();
    if (questions) *questions = kb->value.num_questions();
    if (known) *known = kb->value.known_count();
  });
}

la_status la_kb_distance(const la_kb* agent, const la_kb* player, double* distance) {
  return guarded([&] {
    require(agent, "agent");
    require(player, "player");
    require(distance, "distance");
    *distance = la::kb_distance(agent->value, player->value);
  });
}

la_status la_train_is(const la_config* config, const char* out_dir, int force,
                      la_progress_fn progress, void* user, char** summary_json) {
  return guarded([&] {
    require(config, "config");
    la::ExperimentConfig c = config->value;
    c.policy_path.clear();
    const char* dir = prepare(out_dir, force);
    const auto report = la::run_is_experiment(c, progress_adapter(progress, user));
    set_output(summary_json, dir ? la::export_is_report(report, dir) : la::is_summary_json(report));
  });
}

la_status la_eval_is(const la_config* config, const char* out_dir, int force,
                     la_progress_fn progress, void* user, char** summary_json) {
  return guarded([&] {
    require(config, "config");
    const la::ExperimentConfig& c = config->value;
    if (c.agent != la::AgentType::entropy && c.policy_path.empty())
      throw la::InvalidArgument("eval needs agent.policy (a trained checkpoint) or agent.type=entropy");
    const char* dir = prepare(out_dir, force);
    const auto report = la::run_is_experiment(c, progress_adapter(progress, user));
    set_output(summary_json, dir ? la::export_is_report(report, dir) : la::is_summary_json(report));
  });
}

la_status la_run_ka(const la_config* config, const char* out_dir, int force,
                    la_progress_fn progress, void* user, char** summary_json) {
  return guarded([&] {
    require(config, "config");
    const char* dir = prepare(out_dir, force);
    const auto report = la::run_ka_experiment(config->value, progress_adapter(progress, user));
    set_output(summary_json, dir ? la::export_ka_report(report, dir) : la::ka_summary_json(report));
  });
}

la_status la_sweep_t1(const la_config* config, const char* out_dir, int force,
                      la_progress_fn progress, void* user, char** summary_json) {
  return guarded([&] {
    require(config, "config");
    la::ExperimentConfig c = config->value;
    c.policy_path.clear();
    const char* dir = prepare(out_dir, force);
    const auto rows = la::sweep_t1(c, progress_adapter(progress, user));
    set_output(summary_json,
               dir ? la::export_sweep(c, rows, dir) : la::sweep_summary_json(c, rows));
  });
}

la_status la_service_create(const la_config* config, la_service** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const la::ExperimentConfig& c = config->value;
    auto kb = std::make_shared<la::KnowledgeBase>(la::load_experiment_kb(c));
    la::validate(c, kb->num_questions());
    std::shared_ptr<const la::QNetwork> policy;
    if (c.agent != la::AgentType::entropy) {
      if (c.policy_path.empty())
        throw la::InvalidArgument("serve needs agent.policy (a trained checkpoint) or agent.type=entropy");
      policy = la::load_q_network(la::nn::load_checkpoint(c.policy_path));
    }
    auto service = std::make_unique<la::GameService>(std::move(kb), std::move(policy),
                                                     la::ServiceOptions::from_config(c));
    *out = new la_service{std::move(service)};
  });
}

void la_service_destroy(la_service* service) { delete service; }

la_status la_service_handle(la_service* service, const char* method, const char* path,
                            const char* body, int* http_status, char** response_json) {
  return guarded([&] {
    require(service, "service");
    require(method, "method");
    require(path, "path");
    require(http_status, "http_status");
    require(response_json, "response_json");
    const auto reply = service->value->handle(method, path, body ? body : "");
    *response_json = copy_string(reply.body);
    *http_status = reply.status;
  });
}

la_status la_service_bind(la_service* service, const char* host, int port, int* bound_port) {
  return guarded([&] {
    require(service, "service");
    require(host, "host");
    const int bound = service->value->bind(host, port);
    if (bound < 0)
      throw la::IoError("cannot bind " + std::string(host) + ":" + std::to_string(port));
    if (bound_port) *bound_port = bound;
  });
}

la_status la_service_serve(la_service* service) {
  return guarded([&] {
    require(service, "service");
    if (!service->value->serve()) throw la::IoError("HTTP server stopped with an error");
  });
}

la_status la_service_stop(la_service* service) {
  return guarded([&] {
    require(service, "service");
    service->value->stop();
  });
}

}  // extern "C"

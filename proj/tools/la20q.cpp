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

// Command-line front end. Talks to the library only through la20q.h.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "la20q.h"

namespace {

struct Options {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string seed;
  std::string out;
  bool force = false;
  bool quiet = false;
};

int report_failure(la_status status, const char* what) {
  std::fprintf(stderr, "la20q: %s failed (%s): %s\n", what, la_status_name(status),
               la_last_error());
  return 1;
}

void print_progress(const char* message, void* user) {
  if (!*static_cast<bool*>(user)) std::fprintf(stderr, "%s\n", message);
}

struct ConfigHandle {
  la_config* ptr = nullptr;
  ~ConfigHandle() { la_config_destroy(ptr); }
};

// Config file first, then --seed, then --set overrides in order.
la_status build_config(const Options& o, ConfigHandle& config) {
  la_status s = la_config_create(&config.ptr);
  if (s != LA_OK) return s;
  if (!o.config_file.empty() && (s = la_config_load_file(config.ptr, o.config_file.c_str())) != LA_OK)
    return s;
  if (!o.seed.empty()) {
    for (const char* key : {"kb.seed", "train.seed", "world.seed", "eval.seed", "ka.seed"})
      if ((s = la_config_set(config.ptr, key, o.seed.c_str())) != LA_OK) return s;
  }
  for (const auto& assignment : o.overrides)
    if ((s = la_config_apply(config.ptr, assignment.c_str())) != LA_OK) return s;
  return LA_OK;
}

using Experiment = la_status (*)(const la_config*, const char*, int, la_progress_fn, void*, char**);

int run_experiment(const Options& o, Experiment fn, const char* name) {
  ConfigHandle config;
  if (la_status s = build_config(o, config); s != LA_OK) return report_failure(s, "configuration");
  char* summary = nullptr;
  bool quiet = o.quiet;
  const la_status s = fn(config.ptr, o.out.empty() ? nullptr : o.out.c_str(), o.force ? 1 : 0,
                         print_progress, &quiet, &summary);
  if (s != LA_OK) return report_failure(s, name);
  std::fputs(summary, stdout);
  la_string_free(summary);
  return 0;
}

int gen_kb(const Options& o) {
  ConfigHandle config;
  if (la_status s = build_config(o, config); s != LA_OK) return report_failure(s, "configuration");
  if (o.out.empty()) {
    std::fprintf(stderr, "la20q: gen-kb needs --out <file>\n");
    return 2;
  }
  if (std::filesystem::exists(o.out) && !o.force) {
    std::fprintf(stderr, "la20q: '%s' exists; pass --force to overwrite\n", o.out.c_str());
    return 1;
  }
  la_kb* kb = nullptr;
  if (la_status s = la_kb_generate(config.ptr, &kb); s != LA_OK) return report_failure(s, "gen-kb");
  size_t entities = 0, questions = 0, known = 0;
  la_kb_dims(kb, &entities, &questions, &known);
  const la_status s = la_kb_save(kb, o.out.c_str());
  la_kb_destroy(kb);
  if (s != LA_OK) return report_failure(s, "gen-kb");
  std::printf("{\"entities\": %zu, \"questions\": %zu, \"known\": %zu, \"path\": \"%s\"}\n",
              entities, questions, known, o.out.c_str());
  return 0;
}

la_service* g_service = nullptr;

void on_signal(int) {
  if (g_service) la_service_stop(g_service);
}

int serve(const Options& o) {
  ConfigHandle config;
  if (la_status s = build_config(o, config); s != LA_OK) return report_failure(s, "configuration");
  char* host = nullptr;
  char* port_text = nullptr;
  la_config_get(config.ptr, "service.host", &host);
  la_config_get(config.ptr, "service.port", &port_text);
  const std::string host_str = host;
  const int port = std::stoi(port_text);
  la_string_free(host);
  la_string_free(port_text);

  la_service* service = nullptr;
  if (la_status s = la_service_create(config.ptr, &service); s != LA_OK)
    return report_failure(s, "serve");
  int bound = 0;
  if (la_status s = la_service_bind(service, host_str.c_str(), port, &bound); s != LA_OK) {
    la_service_destroy(service);
    return report_failure(s, "serve");
  }
  g_service = service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::fprintf(stderr, "serving on http://%s:%d/api/v1\n", host_str.c_str(), bound);
  const la_status s = la_service_serve(service);
  g_service = nullptr;
  la_service_destroy(service);
  return s == LA_OK ? 0 : report_failure(s, "serve");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-to-ask 20 Questions: training, evaluation, knowledge acquisition, live play"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(la_version()));

  Options o;
  app.add_option("-c,--config", o.config_file, "INI config file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", o.overrides, "Override a setting, e.g. --set train.episodes=5000")
      ->type_name("KEY=VALUE");
  app.add_option("--seed", o.seed, "Use this seed for kb, train, world, eval and ka");
  app.add_option("-o,--out", o.out, "Output directory (a file for gen-kb)");
  app.add_flag("-f,--force", o.force, "Overwrite existing output");
  app.add_flag("-q,--quiet", o.quiet, "No progress messages");

  auto* gen = app.add_subcommand("gen-kb", "Generate the synthetic knowledge base");
  auto* train = app.add_subcommand("train-is", "Train an IS agent and evaluate it");
  auto* eval = app.add_subcommand("eval-is", "Evaluate a trained policy or the entropy agent");
  auto* ka = app.add_subcommand("run-ka", "Run knowledge-acquisition cycles on a holdout KB");
  auto* sweep = app.add_subcommand("sweep-t1", "Train and evaluate for each T1 in sweep.t1");
  auto* srv = app.add_subcommand("serve", "Serve the JSON game API");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) return gen_kb(o);
  if (train->parsed()) return run_experiment(o, la_train_is, "train-is");
  if (eval->parsed()) return run_experiment(o, la_eval_is, "eval-is");
  if (ka->parsed()) return run_experiment(o, la_run_ka, "run-ka");
  if (sweep->parsed()) return run_experiment(o, la_sweep_t1, "sweep-t1");
  if (srv->parsed()) return serve(o);
  return 2;
}

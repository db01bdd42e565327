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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "la/is_agents.hpp"
#include "la/ka_gmf.hpp"
#include "la/kb.hpp"
#include "la/q_network.hpp"

namespace la {

/// Everything an experiment, the CLI or the service needs. Defaults are the
/// desk-scale settings; every field is reachable through a dotted key
/// ("train.episodes", "ka.selector", ...) in config files and overrides.
struct ExperimentConfig {
  // kb
  std::string kb_path;  // empty: generate from kb_spec
  SyntheticKbSpec kb_spec;

  // game
  std::size_t total_questions = 20;  // T
  std::size_t is_questions = 20;     // T1; T2 = T - T1

  // agent
  AgentType agent = AgentType::la_drqn;
  NetworkConfig network;
  std::uint64_t network_seed = 3;
  double entropy_threshold = EntropyAgent::kDefaultThreshold;
  std::size_t entropy_bins = EntropyAgent::kDefaultBins;
  std::string policy_path;  // trained checkpoint to load instead of training

  TrainConfig train;
  std::uint64_t world_seed = 5;

  // eval
  std::size_t eval_episodes = 2000;
  std::uint64_t eval_seed = 999;

  // ka
  double holdout = 0.2;
  std::uint64_t holdout_seed = 11;
  KaSelector selector = KaSelector::la_gmf;
  std::size_t candidates = 32;    // N_c
  std::size_t buffer_size = 300;  // N_k
  std::size_t cycles = 10;
  RejectionRule rejection;
  bool commit_all = false;
  std::uint64_t ka_seed = 13;
  std::size_t continue_episodes = 0;  // IS training on the post-KA KB, 0 = skip
  GmfConfig gmf;

  // sweep
  std::vector<std::size_t> sweep_t1 = {5, 10, 15, 20};

  // service
  std::size_t service_capacity = 256;
  double service_timeout_seconds = 600.0;
  std::string service_host = "127.0.0.1";
  int service_port = 8080;
  std::uint64_t service_seed = 17;
  std::string service_kb_save;  // KB file rewritten after every service commit

  std::size_t ka_questions() const { return total_questions - is_questions; }  // T2
};

/// Throws InvalidArgument if T1 + T2 = T <= N is violated for a KB with
/// `num_questions` questions (pass 0 to skip the KB check) or any size is 0.
void validate(const ExperimentConfig& config, std::size_t num_questions = 0);

/// Sets one dotted key from text. Throws InvalidArgument on an unknown key or
/// a value that does not parse.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
// "key=value"
void apply_override(ExperimentConfig& config, const std::string& assignment);

std::string get_setting(const ExperimentConfig& config, const std::string& key);
std::vector<std::string> setting_keys();

/// INI text: [section] headers with key = value lines; ';' and '#' comments.
void load_config(ExperimentConfig& config, std::istream& in, const std::string& source = "<stream>");
void load_config_file(ExperimentConfig& config, const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace la

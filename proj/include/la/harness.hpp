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

// Experiment orchestration: building the KB and world from a config,
// IS training and evaluation, KA cycles, the T1 sweep and report export.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "la/config.hpp"
#include "la/is_agents.hpp"
#include "la/ka_gmf.hpp"
#include "la/kb.hpp"
#include "la/player_sim.hpp"
#include "la/q_network.hpp"

namespace la {

inline constexpr const char* kLibraryVersion = "1.0.0";

using ProgressFn = std::function<void(const std::string&)>;

KnowledgeBase load_experiment_kb(const ExperimentConfig& config);

/// IS policy for `kb`: the entropy agent, or a greedy policy over `net`.
std::unique_ptr<IsPolicy> make_policy(const ExperimentConfig& config, const KnowledgeBase& kb,
                                      const QNetwork* net);

struct EvalEpisode {
  std::size_t episode = 0;
  std::size_t target = 0;
  std::size_t guess = 0;
  bool win = false;
};

struct EvalReport {
  std::size_t wins = 0;
  std::size_t episodes = 0;
  double winning_rate = 0.0;  // wins / episodes
  std::vector<EvalEpisode> records;
};

/// Greedy (epsilon = 0) episodes with streams derived from `seed`.
EvalReport eval_winning_rate(IsPolicy& policy, const SimulatorWorld& world,
                             const KnowledgeBase& agent_kb, std::size_t questions,
                             std::size_t episodes, std::uint64_t seed);

/// Builds and trains a Q-network per config on `agent_kb` against `world`.
std::unique_ptr<QNetwork> train_is_policy(const ExperimentConfig& config,
                                          const SimulatorWorld& world,
                                          const KnowledgeBase& agent_kb,
                                          std::vector<CurvePoint>* curve = nullptr,
                                          const ProgressFn& progress = {});

/// Continues training a copy of `policy` for `episodes` episodes at the final
/// exploration rate with a fresh replay buffer.
std::unique_ptr<QNetwork> continue_is_training(const ExperimentConfig& config,
                                               const QNetwork& policy,
                                               const SimulatorWorld& world,
                                               const KnowledgeBase& agent_kb,
                                               std::size_t episodes);

struct IsReport {
  ExperimentConfig config;
  std::vector<CurvePoint> curve;  // empty for the entropy agent
  EvalReport eval;
  std::unique_ptr<QNetwork> policy;  // null for the entropy agent
};

/// Trains (or loads agent.policy) and evaluates with T1 = is_questions on the
/// full KB, which is both the agent's and the player's.
IsReport run_is_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

struct KaCycleRow {
  std::size_t cycle = 0;
  std::size_t kb_size = 0;  // known entries in the agent KB
  double kb_distance = 0.0;
  std::size_t committed = 0;
  std::size_t discarded_wrong_guess = 0;
  std::size_t rejected_total = 0;
};

struct KaBoostRow {
  std::string condition;  // "no-ka" or "with-ka"
  EvalReport eval;
};

struct KaReport {
  ExperimentConfig config;
  std::size_t holdout_removed = 0;
  std::vector<KaCycleRow> cycles;  // row 0 is the starting KB
  std::shared_ptr<KnowledgeBase> initial_kb;
  std::shared_ptr<KnowledgeBase> final_kb;
  std::shared_ptr<const KnowledgeBase> truth_kb;
  std::unique_ptr<QNetwork> policy;
  std::vector<KaBoostRow> boost;  // filled when ka.continue_episodes > 0
};

/// Holdout split, frozen IS policy (trained on the holdout KB unless
/// agent.policy is given), then episodes of T1 IS + T2 KA questions with a
/// commit every N_k records, for ka.cycles cycles. A cycle also ends after
/// N_k episodes so T2 = 0 terminates.
KaReport run_ka_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Same, reusing an already trained frozen policy.
KaReport run_ka_experiment(const ExperimentConfig& config, const QNetwork* policy,
                           const ProgressFn& progress = {});

struct SweepRow {
  std::size_t t1 = 0;
  EvalReport eval;
};

/// One IS experiment per sweep.t1 value with T = T1. Training episodes are
/// rescaled so every run takes train.episodes * game.is_questions steps.
std::vector<SweepRow> sweep_t1(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Creates `dir`; refuses to reuse a non-empty directory unless `force`.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

// File writers return the JSON summary they wrote.
std::string export_is_report(const IsReport& report, const std::filesystem::path& dir);
std::string export_ka_report(const KaReport& report, const std::filesystem::path& dir);
std::string export_sweep(const ExperimentConfig& config, const std::vector<SweepRow>& rows,
                         const std::filesystem::path& dir);

std::string is_summary_json(const IsReport& report);
std::string ka_summary_json(const KaReport& report);
std::string sweep_summary_json(const ExperimentConfig& config, const std::vector<SweepRow>& rows);

// JSON object echoing every config setting.
std::string config_json(const ExperimentConfig& config);

}  // namespace la

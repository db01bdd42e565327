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

// Information-seeking agents: the policy interface, the entropy baseline,
// Q-network policies, episode execution and the Q-learning trainer.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "la/episode.hpp"
#include "la/kb.hpp"
#include "la/player_sim.hpp"
#include "la/q_network.hpp"
#include "la/replay.hpp"
#include "la/rng.hpp"

namespace la {

/// Epsilon-greedy over unasked questions; greedy ties go to the lowest index.
/// Throws StateError when every question has been asked.
std::size_t select_action(std::span<const double> qvals, const std::vector<char>& asked,
                          double epsilon, Rng& rng);

// Linear anneal from `start` to `end` over `steps` steps, constant afterwards.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  std::uint64_t steps = 1'000'000;

  double at(std::uint64_t step) const;
};

class IsPolicy {
 public:
  virtual ~IsPolicy() = default;

  virtual void begin_episode() {}
  virtual std::size_t choose(const EpisodeHistory& history, double epsilon, Rng& rng) = 0;
  virtual void observe(std::size_t /*question*/, Response /*response*/) {}
  // Set when the agent makes its own guess instead of the naive-Bayes one.
  virtual std::optional<std::size_t> own_guess() const { return std::nullopt; }
};

/// Greedy/epsilon-greedy policy reading a Q-network it does not own.
class QPolicy : public IsPolicy {
 public:
  explicit QPolicy(const QNetwork& net) : net_(&net) {}
  std::size_t choose(const EpisodeHistory& history, double epsilon, Rng& rng) override;

 private:
  const QNetwork* net_;
};

/// Maximum-entropy questioning with tolerance pruning.
///
/// Keeps a candidate set with a tolerance per entity. Each step asks the free
/// question whose signed expectations E_mn (yes = +1, no = -1, unknown = 0)
/// over the candidates have the highest histogram entropy, then adds
/// |E_mc - x_c| to every candidate's tolerance and drops candidates at or
/// above the threshold. The guess is the candidate with the lowest tolerance.
class EntropyAgent : public IsPolicy {
 public:
  static constexpr double kDefaultThreshold = 15.0;
  static constexpr std::size_t kDefaultBins = 21;

  explicit EntropyAgent(const KnowledgeBase& kb, double threshold = kDefaultThreshold,
                        std::size_t bins = kDefaultBins);
  // Row-major M x N expectation matrix with values in [-1, 1].
  EntropyAgent(std::vector<double> expectation, std::size_t num_entities,
               std::size_t num_questions, double threshold = kDefaultThreshold,
               std::size_t bins = kDefaultBins);

  void begin_episode() override;
  std::size_t choose(const EpisodeHistory& history, double epsilon, Rng& rng) override;
  void observe(std::size_t question, Response response) override { update(question, response); }
  std::optional<std::size_t> own_guess() const override { return guess(); }

  std::size_t select_question(const std::vector<char>& asked) const;
  void update(std::size_t question, Response response);
  std::size_t guess() const;

  double question_entropy(std::size_t question) const;
  double expectation(std::size_t m, std::size_t n) const { return expectation_[m * num_questions_ + n]; }
  const std::vector<double>& tolerances() const { return tolerance_; }
  bool is_candidate(std::size_t m) const { return candidate_[m] != 0; }
  std::size_t candidate_count() const;
  void set_tolerance(std::size_t m, double t) { tolerance_.at(m) = t; }

 private:
  std::size_t num_entities_;
  std::size_t num_questions_;
  std::vector<double> expectation_;
  double threshold_;
  std::size_t bins_;
  std::vector<double> tolerance_;
  std::vector<char> candidate_;
};

struct EpisodeResult {
  std::size_t target = 0;
  EpisodeHistory history;
  std::size_t guess = 0;
  bool win = false;
};

/// Separate generators for the parts of an episode, derived from
/// (seed, episode index), so different policies meet the same targets.
struct EpisodeStreams {
  Rng target;
  Rng response;
  Rng policy;

  static EpisodeStreams for_episode(std::uint64_t seed, std::uint64_t episode);
};

/// Asks exactly `questions` IS questions, then guesses (naive Bayes over
/// `agent_kb` unless the policy guesses itself) and judges against the
/// sampled target. `epsilon` = 0 is evaluation mode.
EpisodeResult run_is_episode(IsPolicy& policy, const SimulatorWorld& world,
                             const KnowledgeBase& agent_kb, std::size_t questions, double epsilon,
                             EpisodeStreams& streams);

// One transition per asked question; only the last is terminal and rewarded.
std::vector<Transition> make_transitions(const EpisodeResult& episode);

/// Double-Q target: r for terminal steps, otherwise
/// r + gamma * Q_target(s', argmax over unasked a of Q_behave(s', a)).
double td_target(const Transition& t, const QNetwork& behave, const QNetwork& target, double gamma);

struct TrainConfig {
  std::size_t episodes = 10000;
  std::size_t questions = 20;  // T1
  double learning_rate = 2.5e-4;
  double gamma = 0.99;
  EpsilonSchedule epsilon{1.0, 0.1, 100'000};
  std::size_t target_update_episodes = 100;  // C
  std::size_t batch_size = 32;
  std::size_t replay_capacity = 100'000;
  double priority_alpha = 0.5;
  std::size_t updates_per_episode = 1;
  std::size_t learn_start = 32;  // transitions stored before learning begins
  std::size_t window = 500;
  std::size_t log_every = 100;
  std::uint64_t seed = 1;
};

struct CurvePoint {
  std::size_t episode = 0;
  double winning_rate = 0.0;
  double epsilon = 0.0;
  double loss = 0.0;
};

struct LearnStep {
  double loss_before = 0.0;
  double loss_after = 0.0;  // same batch and targets after the update; NaN if not measured
};

/// Q-learning with a behave and a target network, prioritized replay and
/// Adam. The learner owns both networks; training can be resumed by calling
/// train() again (the step counter, replay and optimizer carry over).
class QLearner {
 public:
  QLearner(std::unique_ptr<QNetwork> behave, TrainConfig config);

  const QNetwork& behave() const { return *behave_; }
  QNetwork& behave() { return *behave_; }
  const QNetwork& target() const { return *target_; }
  const TrainConfig& config() const { return config_; }
  TrainConfig& config() { return config_; }
  const PrioritizedReplay& replay() const { return replay_; }
  std::uint64_t steps() const { return steps_; }
  std::size_t episodes_done() const { return episodes_done_; }

  void remember(const EpisodeResult& episode);
  // One minibatch gradient step. With `measure`, recomputes the batch loss
  // after the update.
  LearnStep learn(Rng& rng, bool measure = false);
  void sync_target();

  using EpisodeHook = std::function<void(std::size_t episode, const EpisodeResult&)>;
  std::vector<CurvePoint> train(const SimulatorWorld& world, const KnowledgeBase& agent_kb,
                                const EpisodeHook& hook = {});

 private:
  std::unique_ptr<QNetwork> behave_;
  std::unique_ptr<QNetwork> target_;
  TrainConfig config_;
  PrioritizedReplay replay_;
  nn::Adam optimizer_;
  Rng learn_rng_;
  std::uint64_t steps_ = 0;
  std::size_t episodes_done_ = 0;
};

}  // namespace la

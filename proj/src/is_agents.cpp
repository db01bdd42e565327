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

#include "la/is_agents.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "la/error.hpp"
#include "la/guesser.hpp"

namespace la {

std::size_t select_action(std::span<const double> qvals, const std::vector<char>& asked,
                          double epsilon, Rng& rng) {
  if (qvals.size() != asked.size()) throw StructuralError("q-values and asked mask differ in size");
  std::vector<std::size_t> free;
  free.reserve(qvals.size());
  for (std::size_t i = 0; i < asked.size(); ++i)
    if (!asked[i]) free.push_back(i);
  if (free.empty()) throw StateError("every question has already been asked");

  if (epsilon > 0.0 && rng.uniform() < epsilon) return free[rng.below(free.size())];

  std::size_t best = free.front();
  for (std::size_t i : free)
    if (qvals[i] > qvals[best]) best = i;
  return best;
}

double EpsilonSchedule::at(std::uint64_t step) const {
  if (steps == 0 || step >= steps) return end;
  return start + (end - start) * static_cast<double>(step) / static_cast<double>(steps);
}

std::size_t QPolicy::choose(const EpisodeHistory& history, double epsilon, Rng& rng) {
  const auto q = net_->q_values(history);
  return select_action(q, history.asked_mask(), epsilon, rng);
}

// --- EntropyAgent ---------------------------------------------------------------------

namespace {

std::vector<double> expectation_matrix(const KnowledgeBase& kb) {
  const std::size_t M = kb.num_entities(), N = kb.num_questions();
  std::vector<double> e(M * N, 0.0);
  for (const auto& [cell, counts] : kb.known_entries()) {
    const auto d = entry_distribution(counts);
    e[cell.first * N + cell.second] = d[code(Response::yes)] - d[code(Response::no)];
  }
  return e;
}

constexpr double kTieEpsilon = 1e-12;

}  // namespace

EntropyAgent::EntropyAgent(const KnowledgeBase& kb, double threshold, std::size_t bins)
    : EntropyAgent(expectation_matrix(kb), kb.num_entities(), kb.num_questions(), threshold, bins) {}

EntropyAgent::EntropyAgent(std::vector<double> expectation, std::size_t num_entities,
                           std::size_t num_questions, double threshold, std::size_t bins)
    : num_entities_(num_entities),
      num_questions_(num_questions),
      expectation_(std::move(expectation)),
      threshold_(threshold),
      bins_(bins) {
  if (expectation_.size() != num_entities * num_questions)
    throw StructuralError("expectation matrix has the wrong size");
  if (num_entities == 0 || num_questions == 0) throw InvalidArgument("empty entropy agent");
  if (bins == 0) throw InvalidArgument("entropy histogram needs at least one bin");
  begin_episode();
}

void EntropyAgent::begin_episode() {
  tolerance_.assign(num_entities_, 0.0);
  candidate_.assign(num_entities_, 1);
}

std::size_t EntropyAgent::candidate_count() const {
  std::size_t n = 0;
  for (char c : candidate_) n += c ? 1 : 0;
  return n;
}

double EntropyAgent::question_entropy(std::size_t question) const {
  std::vector<std::size_t> histogram(bins_, 0);
  std::size_t total = 0;
  for (std::size_t m = 0; m < num_entities_; ++m) {
    if (!candidate_[m]) continue;
    const double e = expectation(m, question);
    auto bin = static_cast<std::size_t>((e + 1.0) / 2.0 * static_cast<double>(bins_));
    if (bin >= bins_) bin = bins_ - 1;
    ++histogram[bin];
    ++total;
  }
  double h = 0.0;
  for (std::size_t count : histogram) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

std::size_t EntropyAgent::select_question(const std::vector<char>& asked) const {
  if (asked.size() != num_questions_) throw StructuralError("asked mask has the wrong size");
  std::optional<std::size_t> best;
  double best_h = -1.0;
  for (std::size_t n = 0; n < num_questions_; ++n) {
    if (asked[n]) continue;
    const double h = question_entropy(n);
    if (!best || h > best_h + kTieEpsilon) {
      best = n;
      best_h = h;
    }
  }
  if (!best) throw StateError("every question has already been asked");
  return *best;
}

std::size_t EntropyAgent::choose(const EpisodeHistory& history, double, Rng&) {
  return select_question(history.asked_mask());
}

void EntropyAgent::update(std::size_t question, Response response) {
  if (question >= num_questions_) throw InvalidArgument("question index out of range");
  const double x = signed_value(response);
  std::vector<std::size_t> dropping;
  std::size_t remaining = 0;
  for (std::size_t m = 0; m < num_entities_; ++m) {
    if (!candidate_[m]) continue;
    tolerance_[m] += std::abs(expectation(m, question) - x);
    if (tolerance_[m] >= threshold_)
      dropping.push_back(m);
    else
      ++remaining;
  }
  if (remaining == 0 && !dropping.empty()) {
    // Never empty the candidate set: the lowest-tolerance entity survives.
    std::size_t keep = dropping.front();
    for (std::size_t m : dropping)
      if (tolerance_[m] < tolerance_[keep]) keep = m;
    std::erase(dropping, keep);
  }
  for (std::size_t m : dropping) candidate_[m] = 0;
}

std::size_t EntropyAgent::guess() const {
  std::optional<std::size_t> best;
  for (std::size_t m = 0; m < num_entities_; ++m) {
    if (!candidate_[m]) continue;
    if (!best || tolerance_[m] < tolerance_[*best]) best = m;
  }
  if (!best) throw StateError("entropy agent has no candidates");
  return *best;
}

// --- episodes ----------------------------------------------------------------------------

EpisodeStreams EpisodeStreams::for_episode(std::uint64_t seed, std::uint64_t episode) {
  return {Rng::derive(seed, episode, 1), Rng::derive(seed, episode, 2),
          Rng::derive(seed, episode, 3)};
}

EpisodeResult run_is_episode(IsPolicy& policy, const SimulatorWorld& world,
                             const KnowledgeBase& agent_kb, std::size_t questions, double epsilon,
                             EpisodeStreams& streams) {
  const std::size_t N = agent_kb.num_questions();
  if (questions > N)
    throw InvalidArgument("cannot ask " + std::to_string(questions) + " distinct questions out of " +
                          std::to_string(N));
  if (world.truth().num_entities() != agent_kb.num_entities() ||
      world.truth().num_questions() != N)
    throw StructuralError("agent and player knowledge bases differ in shape");

  EpisodeResult r;
  r.history = EpisodeHistory(N);
  policy.begin_episode();
  r.target = world.sample_target(streams.target);
  for (std::size_t t = 0; t < questions; ++t) {
    const std::size_t q = policy.choose(r.history, epsilon, streams.policy);
    const Response x = world.respond(r.target, q, streams.response);
    r.history.add(q, x);
    policy.observe(q, x);
  }
  if (auto own = policy.own_guess())
    r.guess = *own;
  else
    r.guess = posterior(r.history, agent_kb).guess;
  r.win = judge(r.target, r.guess);
  return r;
}

std::vector<Transition> make_transitions(const EpisodeResult& episode) {
  auto shared = std::make_shared<const EpisodeHistory>(episode.history);
  std::vector<Transition> out;
  const std::size_t n = episode.history.size();
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const bool terminal = t + 1 == n;
    out.push_back({shared, t, episode.history[t].question,
                   terminal ? (episode.win ? 1.0 : -1.0) : 0.0, terminal});
  }
  return out;
}

double td_target(const Transition& t, const QNetwork& behave, const QNetwork& target, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
  if (t.terminal) return t.reward;
  const EpisodeHistory next = t.state_after();
  const auto q_behave = behave.q_values(next);
  const auto& asked = next.asked_mask();
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < q_behave.size(); ++a) {
    if (asked[a]) continue;
    if (!best || q_behave[a] > q_behave[*best]) best = a;
  }
  if (!best) return t.reward;
  return t.reward + gamma * target.q_values(next)[*best];
}

// --- QLearner ----------------------------------------------------------------------------

QLearner::QLearner(std::unique_ptr<QNetwork> behave, TrainConfig config)
    : behave_(std::move(behave)),
      config_(config),
      replay_(config.replay_capacity, config.priority_alpha),
      optimizer_(config.learning_rate),
      learn_rng_(Rng::derive(config.seed, 0x1ea2)) {
  if (!behave_) throw InvalidArgument("learner needs a network");
  if (config_.batch_size == 0) throw InvalidArgument("batch size must be positive");
  target_ = behave_->clone();
}

void QLearner::remember(const EpisodeResult& episode) {
  for (auto& t : make_transitions(episode)) replay_.insert(std::move(t));
}

void QLearner::sync_target() { target_->copy_parameters_from(*behave_); }

LearnStep QLearner::learn(Rng& rng, bool measure) {
  const auto slots = replay_.sample(config_.batch_size, rng);
  const double batch = static_cast<double>(slots.size());

  std::vector<double> targets(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i)
    targets[i] = td_target(replay_.at(slots[i]), *behave_, *target_, config_.gamma);

  auto params = behave_->parameters();
  nn::zero_grads(params);
  std::vector<double> td_errors(slots.size());
  LearnStep step;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Transition& t = replay_.at(slots[i]);
    const double y = targets[i];
    double err = 0.0;
    behave_->backprop(t.state_before(), t.action, [&](double q) {
      err = q - y;
      return 2.0 * err / batch;  // d/dq of the batch-mean squared error
    });
    step.loss_before += err * err / batch;
    td_errors[i] = err;
  }
  replay_.update_priorities(slots, td_errors);
  optimizer_.step(params);

  step.loss_after = std::numeric_limits<double>::quiet_NaN();
  if (measure) {
    step.loss_after = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const Transition& t = replay_.at(slots[i]);
      const double d = behave_->q_values(t.state_before())[t.action] - targets[i];
      step.loss_after += d * d / batch;
    }
  }
  return step;
}

std::vector<CurvePoint> QLearner::train(const SimulatorWorld& world, const KnowledgeBase& agent_kb,
                                        const EpisodeHook& hook) {
  std::vector<CurvePoint> curve;
  std::deque<char> window;
  std::size_t window_wins = 0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  for (std::size_t i = 0; i < config_.episodes; ++i) {
    const double epsilon = config_.epsilon.at(steps_);
    auto streams = EpisodeStreams::for_episode(config_.seed, episodes_done_);
    QPolicy policy(*behave_);
    const EpisodeResult episode =
        run_is_episode(policy, world, agent_kb, config_.questions, epsilon, streams);
    steps_ += config_.questions;
    remember(episode);

    if (replay_.size() >= std::max<std::size_t>(config_.learn_start, 1)) {
      for (std::size_t u = 0; u < config_.updates_per_episode; ++u) {
        loss_sum += learn(learn_rng_).loss_before;
        ++loss_count;
      }
    }
    ++episodes_done_;
    if (config_.target_update_episodes > 0 && episodes_done_ % config_.target_update_episodes == 0)
      sync_target();

    window.push_back(episode.win ? 1 : 0);
    window_wins += episode.win ? 1 : 0;
    if (window.size() > std::max<std::size_t>(config_.window, 1)) {
      window_wins -= window.front();
      window.pop_front();
    }
    const bool last = i + 1 == config_.episodes;
    if ((config_.log_every > 0 && episodes_done_ % config_.log_every == 0) || last) {
      curve.push_back({episodes_done_,
                       static_cast<double>(window_wins) / static_cast<double>(window.size()),
                       epsilon, loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0});
      loss_sum = 0.0;
      loss_count = 0;
    }
    if (hook) hook(episodes_done_, episode);
  }
  return curve;
}

}  // namespace la

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

#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gradient_checks.hpp"
#include "la/error.hpp"
#include "la/guesser.hpp"
#include "la/is_agents.hpp"
#include "la/q_network.hpp"
#include "la/replay.hpp"
#include "support.hpp"

using namespace la;
using la::testing::blank_kb;
using la::testing::chi_square_p;
using la::testing::random_history;

namespace {

// Q-values given directly as a function of the history.
class FixedQ : public QNetwork {
 public:
  using Fn = std::function<std::vector<double>(const EpisodeHistory&)>;
  FixedQ(std::size_t n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  AgentType type() const override { return AgentType::la_dqn; }
  std::size_t num_questions() const override { return n_; }
  std::vector<double> q_values(const EpisodeHistory& h) const override { return fn_(h); }
  double backprop(const EpisodeHistory& h, std::size_t a, const DqFn&) override {
    return fn_(h)[a];
  }
  nn::ParameterList parameters() override { return {}; }
  std::unique_ptr<QNetwork> clone() const override { return std::make_unique<FixedQ>(*this); }

 protected:
  void describe(nn::Checkpoint&) const override {}

 private:
  std::size_t n_;
  Fn fn_;
};

FixedQ constant_q(std::vector<double> q) {
  return FixedQ(q.size(), [q](const EpisodeHistory&) { return q; });
}

std::shared_ptr<const KnowledgeBase> shared(KnowledgeBase kb) {
  return std::make_shared<const KnowledgeBase>(std::move(kb));
}

}  // namespace

TEST_CASE("select_action examples") {
  Rng rng(1);
  std::vector<double> q = {0.2, 0.9, 0.5};
  CHECK(select_action(q, {0, 1, 0}, 0.0, rng) == 2);
  CHECK(select_action(std::vector<double>{0.5, 0.5}, {0, 0}, 0.0, rng) == 0);
  CHECK_THROWS_AS(select_action(q, {1, 1, 1}, 0.0, rng), StateError);

  std::vector<std::size_t> counts(5, 0);
  for (int i = 0; i < 10000; ++i) ++counts[select_action(std::vector<double>(5, 0.0),
                                                         {0, 0, 1, 0, 0}, 1.0, rng)];
  CHECK(counts[2] == 0);
  for (std::size_t a : {0, 1, 3, 4}) CHECK(std::abs(counts[a] / 1e4 - 0.25) < 0.02);
  CHECK(chi_square_p(counts, {0.25, 0.25, 0.0, 0.25, 0.25}) > 0.01);
}

TEST_CASE("select_action is invariant under increasing affine maps") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q = la::testing::random_vector(8, rng);
    std::vector<char> mask(8, 0);
    mask[rng.below(8)] = 1;
    std::vector<double> scaled;
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-3.0, 3.0);
    for (double v : q) scaled.push_back(a * v + b);
    CHECK(select_action(q, mask, 0.0, rng) == select_action(scaled, mask, 0.0, rng));
  }
}

TEST_CASE("epsilon schedule") {
  EpsilonSchedule e{1.0, 0.1, 1'000'000};
  CHECK(e.at(0) == 1.0);
  CHECK(e.at(1'000'000) == 0.1);
  CHECK(e.at(5'000'000) == 0.1);
  CHECK(e.at(500'000) == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("dqn state encoding") {
  CHECK(encode_state_dqn(EpisodeHistory(3), 3) == std::vector<double>(12, 0.0));
  EpisodeHistory one(3);
  one.add(1, Response::yes);
  CHECK(encode_state_dqn(one, 3) == std::vector<double>{0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0});
  EpisodeHistory two(3);
  two.add(0, Response::no);
  two.add(2, Response::unknown);
  CHECK(encode_state_dqn(two, 3) == std::vector<double>{1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1});
}

TEST_CASE("episode history rejects repeats") {
  EpisodeHistory h(3);
  h.add(1, Response::no);
  CHECK_THROWS_AS(h.add(1, Response::yes), StateError);
  CHECK(h.prefix(0).size() == 0);
  CHECK(h.prefix(1) == h);
}

TEST_CASE("drqn observations") {
  Rng rng(3);
  DrqnNetwork net(4, 2, 1, 5, rng);
  CHECK(net.observation(std::nullopt) == std::vector<double>{0.0, 0.0, 0.0});
  net.question_embedding().table().value.at(2, 0) = 0.1;
  net.question_embedding().table().value.at(2, 1) = 0.2;
  net.response_embedding().table().value.at(code(Response::no), 0) = 0.3;
  CHECK(net.observation(Turn{2, Response::no}) == std::vector<double>{0.1, 0.2, 0.3});
  const auto a = net.observation(Turn{2, Response::yes});
  const auto b = net.observation(Turn{2, Response::unknown});
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  CHECK(a[2] != b[2]);
}

TEST_CASE("q-value range, zero head and purity") {
  Rng rng(4);
  NetworkConfig config;
  config.dqn_hidden = {16, 8};
  for (AgentType type : {AgentType::la_dqn, AgentType::la_lin, AgentType::la_drqn}) {
    auto net = make_q_network(type, 6, config, rng);
    for (int trial = 0; trial < 20; ++trial) {
      EpisodeHistory h = random_history(6, rng.below(6), rng);
      auto q = net->q_values(h);
      REQUIRE(q.size() == 6);
      for (double v : q) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
      CHECK(net->q_values(h) == q);
    }
  }
  DrqnNetwork drqn(6, 3, 2, 4, rng);
  drqn.head().weight().value.fill(0.0);
  drqn.head().bias().value.fill(0.0);
  CHECK(drqn.q_values(random_history(6, 2, rng)) == std::vector<double>(6, 0.0));
}

TEST_CASE("recurrent state is a pure function of the prefix") {
  Rng rng(5);
  DrqnNetwork net(10, 4, 2, 6, rng);
  EpisodeHistory h = random_history(10, 7, rng);
  for (std::size_t len = 0; len <= 7; ++len) {
    EpisodeHistory rebuilt(10);
    for (std::size_t t = 0; t < len; ++t) rebuilt.add(h[t].question, h[t].response);
    CHECK(net.recurrent_state(h.prefix(len)) == net.recurrent_state(rebuilt));
  }
}

TEST_CASE("q-network gradients match finite differences") {
  Rng rng(6);
  NetworkConfig config;
  config.dqn_hidden = {9, 7};
  config.question_dim = 4;
  config.response_dim = 2;
  config.recurrent_dim = 5;
  for (AgentType type : {AgentType::la_dqn, AgentType::la_lin, AgentType::la_drqn}) {
    for (int trial = 0; trial < 3; ++trial) {
      auto net = make_q_network(type, 7, config, rng);
      EpisodeHistory h = random_history(7, 1 + rng.below(5), rng);
      const std::size_t action = rng.below(7);
      auto loss = [&] { return net->q_values(h)[action]; };
      nn::zero_grads(net->parameters());
      net->backprop_action(h, action, 1.0);
      double worst = 0.0;
      for (nn::Parameter* p : net->parameters())
        for (std::size_t i = 0; i < p->value.size(); ++i)
          worst = std::max(worst, la::testing::relative_error(
                                      p->grad[i], la::testing::central_difference(loss, &p->value[i])));
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("q-network checkpoints round trip") {
  Rng rng(7);
  NetworkConfig config;
  config.dqn_hidden = {8};
  for (AgentType type : {AgentType::la_dqn, AgentType::la_lin, AgentType::la_drqn}) {
    auto net = make_q_network(type, 5, config, rng);
    std::stringstream io;
    nn::write_checkpoint(io, net->checkpoint());
    auto back = load_q_network(nn::read_checkpoint(io));
    CHECK(back->type() == type);
    EpisodeHistory h = random_history(5, 3, rng);
    CHECK(back->q_values(h) == net->q_values(h));
  }
  nn::Checkpoint stale = make_q_network(AgentType::la_lin, 5, config, rng)->checkpoint();
  stale.meta["encoder_layout"] = "0";
  CHECK_THROWS(load_q_network(stale));
}

TEST_CASE("prioritized replay sampling") {
  auto history = std::make_shared<const EpisodeHistory>(EpisodeHistory(2));
  PrioritizedReplay replay(8, 0.5);
  replay.insert({history, 0, 0, 0.0, false});
  Rng rng(8);
  for (std::size_t s : replay.sample(50, rng)) CHECK(s == 0);

  replay.insert({history, 0, 1, 0.0, false});
  replay.set_priority(0, 4.0);
  replay.set_priority(1, 1.0);
  CHECK(replay.probability(0) == doctest::Approx(2.0 / 3));
  std::vector<std::size_t> counts(2, 0);
  for (std::size_t s : replay.sample(10000, rng)) ++counts[s];
  CHECK(std::abs(counts[0] / 1e4 - 2.0 / 3) < 0.02);
  CHECK(chi_square_p(counts, {2.0 / 3, 1.0 / 3}) > 0.01);

  // New items enter at the largest priority seen.
  const std::size_t slot = replay.insert({history, 1, 1, 0.0, false});
  CHECK(replay.priority(slot) == 4.0);
  const std::vector<std::size_t> slots = {1};
  replay.update_priorities(slots, std::vector<double>{-0.5});
  CHECK(replay.priority(1) == doctest::Approx(0.5 + PrioritizedReplay::kPriorityFloor));
}

TEST_CASE("replay evicts the oldest item when full") {
  auto history = std::make_shared<const EpisodeHistory>(EpisodeHistory(4));
  PrioritizedReplay replay(3);
  for (std::size_t a = 0; a < 4; ++a) replay.insert({history, 0, a, 0.0, false});
  CHECK(replay.size() == 3);
  std::set<std::size_t> actions;
  for (std::size_t s = 0; s < 3; ++s) actions.insert(replay.at(s).action);
  CHECK(actions == std::set<std::size_t>{1, 2, 3});
}

TEST_CASE("td targets") {
  auto h = std::make_shared<EpisodeHistory>(5);
  h->add(0, Response::yes);
  h->add(1, Response::no);
  FixedQ zero = constant_q({0, 0, 0, 0, 0});
  CHECK(td_target({h, 1, 1, 1.0, true}, zero, zero, 0.99) == 1.0);
  CHECK(td_target({h, 1, 1, -1.0, true}, zero, zero, 0.99) == -1.0);

  // After questions 0 and 1 the behave argmax is question 3; the target net scores it 0.5.
  FixedQ behave = constant_q({0.9, 0.8, 0.1, 0.7, 0.2});
  FixedQ target = constant_q({0.0, 0.0, 0.9, 0.5, 0.0});
  CHECK(td_target({h, 1, 1, 0.0, false}, behave, target, 0.99) == doctest::Approx(0.495));

  // Vanilla max over the target net would use 0.9 instead.
  const double vanilla = 0.99 * 0.9;
  CHECK(td_target({h, 1, 1, 0.0, false}, behave, target, 0.99) != doctest::Approx(vanilla));
  CHECK_THROWS_AS(td_target({h, 1, 1, 0.0, false}, behave, target, 1.5), InvalidArgument);
}

TEST_CASE("transitions carry rewards only at the end") {
  EpisodeResult episode;
  episode.history = EpisodeHistory(4);
  episode.history.add(2, Response::yes);
  episode.history.add(0, Response::no);
  episode.history.add(3, Response::unknown);
  episode.win = false;
  auto ts = make_transitions(episode);
  REQUIRE(ts.size() == 3);
  double ret = 0.0;
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(ts[t].action == episode.history[t].question);
    CHECK(ts[t].terminal == (t == 2));
    CHECK(ts[t].reward == (t == 2 ? -1.0 : 0.0));
    CHECK(ts[t].state_before().size() == t);
    ret += std::pow(0.99, static_cast<double>(t)) * ts[t].reward;
  }
  CHECK(std::abs(ret) <= 1.0);
}

namespace {

EntropyAgent agent_from(std::vector<std::vector<double>> rows) {
  std::vector<double> flat;
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return EntropyAgent(flat, rows.size(), rows.front().size());
}

}  // namespace

TEST_CASE("entropy agent question choice") {
  EntropyAgent same = agent_from({{0.2, 0.2, 0.2}, {0.2, 0.2, 0.2}});
  CHECK(same.select_question({0, 0, 0}) == 0);
  CHECK(same.select_question({1, 0, 0}) == 1);

  EntropyAgent split = agent_from({{1.0, -1.0}, {1.0, 1.0}});
  CHECK(split.select_question({0, 0}) == 1);
  CHECK(split.question_entropy(1) > split.question_entropy(0));

  EntropyAgent single = agent_from({{0.9, -0.4, 0.0}});
  CHECK(single.question_entropy(1) == 0.0);
  CHECK(single.select_question({1, 0, 0}) == 1);
}

TEST_CASE("entropy agent tolerance updates") {
  EntropyAgent a = agent_from({{0.85}, {0.85}});
  a.update(0, Response::yes);
  CHECK(a.tolerances()[0] == doctest::Approx(0.15));
  EntropyAgent b = agent_from({{0.85}, {0.85}});
  b.update(0, Response::no);
  CHECK(b.tolerances()[0] == doctest::Approx(1.85));

  EntropyAgent c = agent_from({{0.2}, {0.0}});
  c.set_tolerance(0, 14.9);
  c.update(0, Response::unknown);  // entity 0 gains 0.2
  CHECK_FALSE(c.is_candidate(0));
  CHECK(c.is_candidate(1));
  CHECK(c.guess() == 1);

  // Everyone crossing the threshold at once keeps the lowest tolerance.
  EntropyAgent d = agent_from({{1.0}, {1.0}});
  d.set_tolerance(0, 14.5);
  d.set_tolerance(1, 14.2);
  d.update(0, Response::no);
  CHECK(d.candidate_count() == 1);
  CHECK(d.is_candidate(1));
}

TEST_CASE("entropy agent guess") {
  EntropyAgent a = agent_from({{0.0}, {0.0}, {0.0}});
  a.set_tolerance(0, 0.3);
  a.set_tolerance(1, 0.1);
  a.set_tolerance(2, 7.0);
  CHECK(a.guess() == 1);
  a.set_tolerance(0, 0.1);
  CHECK(a.guess() == 0);
  CHECK(agent_from({{0.4}}).guess() == 0);
}

TEST_CASE("entropy agent tolerances never decrease and pruned entities stay out") {
  KnowledgeBase kb = generate_synthetic_kb({});
  SimulatorWorld world(shared(kb), 3);
  EntropyAgent agent(kb);
  for (std::uint64_t ep = 0; ep < 30; ++ep) {
    auto streams = EpisodeStreams::for_episode(9, ep);
    agent.begin_episode();
    EpisodeHistory h(kb.num_questions());
    const std::size_t target = world.sample_target(streams.target);
    std::vector<double> previous = agent.tolerances();
    std::vector<char> alive(kb.num_entities(), 1);
    for (int t = 0; t < 20; ++t) {
      const std::size_t q = agent.choose(h, 0.0, streams.policy);
      const Response x = world.respond(target, q, streams.response);
      h.add(q, x);
      agent.observe(q, x);
      for (std::size_t m = 0; m < kb.num_entities(); ++m) {
        CHECK(agent.tolerances()[m] >= previous[m]);
        if (!alive[m]) CHECK_FALSE(agent.is_candidate(m));
        alive[m] = agent.is_candidate(m);
      }
      previous = agent.tolerances();
    }
    CHECK(agent.candidate_count() >= 1);
  }
}

TEST_CASE("episodes") {
  KnowledgeBase kb = generate_synthetic_kb({});
  SimulatorWorld world(shared(kb), 4);
  FixedQ flat = constant_q(std::vector<double>(kb.num_questions(), 0.0));
  QPolicy policy(flat);

  // No questions: the guess is the prior argmax.
  auto s0 = EpisodeStreams::for_episode(1, 0);
  EpisodeResult r0 = run_is_episode(policy, world, kb, 0, 0.0, s0);
  CHECK(r0.history.empty());
  CHECK(r0.guess == 0);
  CHECK(r0.win == (r0.target == 0));

  // Same seed, same episode.
  auto s1 = EpisodeStreams::for_episode(1, 5), s2 = EpisodeStreams::for_episode(1, 5);
  EpisodeResult a = run_is_episode(policy, world, kb, 20, 0.0, s1);
  EpisodeResult b = run_is_episode(policy, world, kb, 20, 0.0, s2);
  CHECK(a.history == b.history);
  CHECK(a.target == b.target);

  // Exploratory episodes never repeat a question.
  for (std::uint64_t ep = 0; ep < 50; ++ep) {
    auto s = EpisodeStreams::for_episode(2, ep);
    EpisodeResult r = run_is_episode(policy, world, kb, 20, 1.0, s);
    std::set<std::size_t> asked;
    for (const Turn& t : r.history.turns()) asked.insert(t.question);
    CHECK(asked.size() == 20);
  }

  SimulatorWorld lonely(shared(blank_kb(1, 3)), 1);
  FixedQ three = constant_q({0.0, 0.0, 0.0});
  QPolicy p3(three);
  for (std::uint64_t ep = 0; ep < 10; ++ep) {
    auto s = EpisodeStreams::for_episode(3, ep);
    CHECK(run_is_episode(p3, lonely, lonely.truth(), 3, 0.5, s).win);
  }
  auto s = EpisodeStreams::for_episode(3, 0);
  CHECK_THROWS_AS(run_is_episode(p3, lonely, lonely.truth(), 4, 0.0, s), InvalidArgument);
}

TEST_CASE("gradient steps reduce the minibatch loss") {
  KnowledgeBase kb = generate_synthetic_kb({});
  auto truth = shared(kb);
  SimulatorWorld world(truth, 5);
  for (AgentType type : {AgentType::la_drqn, AgentType::la_dqn}) {
    Rng rng(6);
    TrainConfig config;
    config.learning_rate = 2.5e-4;
    QLearner learner(make_q_network(type, kb.num_questions(), {}, rng), config);
    QPolicy explore(learner.behave());
    for (std::uint64_t ep = 0; ep < 20; ++ep) {
      auto s = EpisodeStreams::for_episode(7, ep);
      learner.remember(run_is_episode(explore, world, kb, 20, 1.0, s));
    }
    Rng learn_rng(8);
    int improved = 0;
    const int steps = 100;
    for (int i = 0; i < steps; ++i) {
      LearnStep step = learner.learn(learn_rng, true);
      if (step.loss_after < step.loss_before) ++improved;
    }
    CHECK(improved >= 90);
  }
}

TEST_CASE("target network follows the behave network every C episodes") {
  KnowledgeBase kb = generate_synthetic_kb({});
  SimulatorWorld world(shared(kb), 5);
  Rng rng(9);
  TrainConfig config;
  config.episodes = 5;
  config.target_update_episodes = 1;
  config.learn_start = 1;
  QLearner learner(make_q_network(AgentType::la_lin, kb.num_questions(), {}, rng), config);
  std::size_t checked = 0;
  learner.train(world, kb, [&](std::size_t, const EpisodeResult&) {
    const auto a = learner.behave().parameters();
    const auto b = std::as_const(learner).target().parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);
    ++checked;
  });
  CHECK(checked == 5);
}

TEST_CASE("training is deterministic and logs a curve") {
  KnowledgeBase kb = generate_synthetic_kb({});
  SimulatorWorld world(shared(kb), 5);
  auto run = [&] {
    Rng rng(10);
    TrainConfig config;
    config.episodes = 60;
    config.log_every = 20;
    config.window = 20;
    QLearner learner(make_q_network(AgentType::la_drqn, kb.num_questions(), {}, rng), config);
    auto curve = learner.train(world, kb);
    return std::make_pair(curve, learner.behave().checkpoint());
  };
  auto [c1, k1] = run();
  auto [c2, k2] = run();
  REQUIRE(c1.size() == 3);
  for (std::size_t i = 0; i < c1.size(); ++i) {
    CHECK(c1[i].episode == c2[i].episode);
    CHECK(c1[i].winning_rate == c2[i].winning_rate);
    CHECK(c1[i].loss == c2[i].loss);
  }
  CHECK(c1.back().episode == 60);
  for (std::size_t i = 0; i < k1.tensors.size(); ++i)
    CHECK(k1.tensors[i].second == k2.tensors[i].second);
}

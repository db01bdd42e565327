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

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "la/error.hpp"
#include "la/guesser.hpp"
#include "support.hpp"

using namespace la;
using la::testing::blank_kb;
using la::testing::brute_force_posterior;
using la::testing::random_history;
using la::testing::random_kb;

TEST_CASE("empty history gives the normalized prior") {
  KnowledgeBase kb = blank_kb(3, 2, {1.0, 3.0, 4.0});
  GuessResult r = posterior(EpisodeHistory(2), kb);
  CHECK(r.posterior[0] == doctest::Approx(0.125));
  CHECK(r.posterior[1] == doctest::Approx(0.375));
  CHECK(r.posterior[2] == doctest::Approx(0.5));
  CHECK(r.guess == 2);
}

TEST_CASE("two-entity Bayes update") {
  KnowledgeBase kb = blank_kb(2, 1);
  kb.set_counts(0, 0, {9, 1, 1});
  kb.set_counts(1, 0, {1, 9, 1});
  // P(yes | e0) = 9/11, P(yes | e1) = 1/11, so the posterior is (0.9, 0.1).
  EpisodeHistory h(1);
  h.add(0, Response::yes);
  GuessResult r = posterior(h, kb);
  CHECK(r.posterior[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(r.posterior[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("posterior matches brute-force enumeration") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t M = 1 + rng.below(6), N = 3 + rng.below(4);
    KnowledgeBase kb = random_kb(M, N, rng);
    EpisodeHistory h = random_history(N, 3, rng);
    GuessResult r = posterior(h, kb);
    const auto expected = brute_force_posterior(h, kb);
    double sum = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      CHECK(std::abs(r.posterior[m] - expected[m]) <= 1e-9);
      sum += r.posterior[m];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(r.guess == static_cast<std::size_t>(std::max_element(r.posterior.begin(),
                                                               r.posterior.end()) -
                                              r.posterior.begin()));
  }
}

TEST_CASE("guess tie-break and trivial cases") {
  GuessResult r;
  r.posterior = {0.2, 0.5, 0.3};
  CHECK(guess(r) == 1);
  r.posterior = {0.5, 0.5};
  CHECK(guess(r) == 0);
  r.posterior = {1.0};
  CHECK(guess(r) == 0);
  KnowledgeBase twins = blank_kb(2, 1);
  CHECK(posterior(EpisodeHistory(1), twins).guess == 0);
}

TEST_CASE("no underflow with twenty unlikely responses") {
  std::vector<double> pop(10000, 1.0);
  KnowledgeBase kb = blank_kb(10000, 20, pop);
  EpisodeHistory h(20);
  for (std::size_t n = 0; n < 20; ++n) {
    for (std::size_t m = 0; m < 10000; ++m) kb.set_counts(m, n, {28, 1, 1});
    h.add(n, Response::no);
  }
  GuessResult r = posterior(h, kb);
  for (double p : r.posterior) CHECK(p > 0.0);
  CHECK(std::accumulate(r.posterior.begin(), r.posterior.end(), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("posterior invariances") {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    KnowledgeBase kb = random_kb(6, 6, rng);
    EpisodeHistory h = random_history(6, 4, rng);
    const GuessResult base = posterior(h, kb);

    // Response order.
    std::vector<Turn> turns = h.turns();
    rng.shuffle(turns);
    EpisodeHistory shuffled(6);
    for (const Turn& t : turns) shuffled.add(t.question, t.response);
    const GuessResult reordered = posterior(shuffled, kb);
    for (std::size_t m = 0; m < 6; ++m)
      CHECK(reordered.posterior[m] == doctest::Approx(base.posterior[m]).epsilon(1e-12));

    // Prior scaling.
    std::vector<double> scaled;
    for (const Entity& e : kb.entities()) scaled.push_back(e.popularity * 37.5);
    const GuessResult rescaled = posterior(h, kb, scaled);
    for (std::size_t m = 0; m < 6; ++m)
      CHECK(rescaled.posterior[m] == doctest::Approx(base.posterior[m]).epsilon(1e-12));

    // Entity permutation.
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<Entity> entities;
    for (std::size_t i = 0; i < 6; ++i) entities.push_back(kb.entities()[perm[i]]);
    KnowledgeBase permuted(entities, kb.questions());
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t n = 0; n < 6; ++n)
        if (kb.is_known(perm[i], n)) permuted.set_counts(i, n, kb.counts(perm[i], n));
    const GuessResult moved = posterior(h, permuted);
    for (std::size_t i = 0; i < 6; ++i)
      CHECK(moved.posterior[i] == doctest::Approx(base.posterior[perm[i]]).epsilon(1e-12));
  }
}

TEST_CASE("guesser errors") {
  KnowledgeBase kb = blank_kb(2, 1);
  CHECK_THROWS_AS(posterior(EpisodeHistory(1), kb, std::vector<double>{1.0}), StructuralError);
  CHECK_THROWS_AS(posterior(EpisodeHistory(1), kb, std::vector<double>{1.0, 0.0}),
                  InvalidArgument);
}

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

// Shared helpers for the test binaries: small KB builders, independent
// reference computations and goodness-of-fit checks.

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "la/episode.hpp"
#include "la/kb.hpp"
#include "la/rng.hpp"

namespace la::testing {

inline KnowledgeBase blank_kb(std::size_t entities, std::size_t questions,
                              std::vector<double> popularity = {}) {
  std::vector<Entity> es;
  for (std::size_t m = 0; m < entities; ++m)
    es.push_back({"e" + std::to_string(m), "Entity " + std::to_string(m),
                  popularity.empty() ? 1.0 : popularity[m]});
  std::vector<Question> qs;
  for (std::size_t n = 0; n < questions; ++n)
    qs.push_back({"q" + std::to_string(n), "Question " + std::to_string(n) + "?"});
  return KnowledgeBase(std::move(es), std::move(qs));
}

// Random counts on a random subset of cells; popularity in [0.1, 5).
inline KnowledgeBase random_kb(std::size_t entities, std::size_t questions, Rng& rng,
                               double density = 0.6) {
  std::vector<double> pop;
  for (std::size_t m = 0; m < entities; ++m) pop.push_back(rng.uniform(0.1, 5.0));
  KnowledgeBase kb = blank_kb(entities, questions, pop);
  for (std::size_t m = 0; m < entities; ++m)
    for (std::size_t n = 0; n < questions; ++n)
      if (rng.bernoulli(density)) {
        EntryCounts c{static_cast<std::uint32_t>(1 + rng.below(30)),
                      static_cast<std::uint32_t>(1 + rng.below(30)),
                      static_cast<std::uint32_t>(1 + rng.below(10))};
        if (c.known()) kb.set_counts(m, n, c);
      }
  return kb;
}

inline EpisodeHistory random_history(std::size_t questions, std::size_t length, Rng& rng) {
  EpisodeHistory h(questions);
  while (h.size() < length) {
    const std::size_t q = rng.below(questions);
    if (!h.asked(q)) h.add(q, response_from_code(rng.below(3)));
  }
  return h;
}

// Posterior by direct product of probabilities and explicit normalization.
inline std::vector<double> brute_force_posterior(const EpisodeHistory& h, const KnowledgeBase& kb) {
  std::vector<double> joint(kb.num_entities());
  double z = 0.0;
  for (std::size_t m = 0; m < kb.num_entities(); ++m) {
    double p = kb.entities()[m].popularity;
    for (const Turn& t : h.turns()) {
      const EntryCounts& c = kb.counts(m, t.question);
      const double tally = t.response == Response::yes ? c.yes
                           : t.response == Response::no ? c.no
                                                        : c.unknown;
      p *= tally / (c.yes + c.no + c.unknown);
    }
    joint[m] = p;
    z += p;
  }
  for (auto& p : joint) p /= z;
  return joint;
}

// Mean of exp(KL(agent || player)) over every cell, written out term by term.
inline double direct_kb_distance(const KnowledgeBase& agent, const KnowledgeBase& player) {
  double sum = 0.0;
  for (std::size_t m = 0; m < agent.num_entities(); ++m)
    for (std::size_t n = 0; n < agent.num_questions(); ++n) {
      const EntryCounts& a = agent.counts(m, n);
      const EntryCounts& b = player.counts(m, n);
      const double na = a.yes + a.no + a.unknown, nb = b.yes + b.no + b.unknown;
      const double pa[3] = {a.yes / na, a.no / na, a.unknown / na};
      const double pb[3] = {b.yes / nb, b.no / nb, b.unknown / nb};
      double kl = 0.0;
      for (int r = 0; r < 3; ++r) kl += pa[r] * std::log(pa[r] / pb[r]);
      sum += std::exp(kl);
    }
  return sum / static_cast<double>(agent.num_entities() * agent.num_questions());
}

// Pearson goodness-of-fit p-value of observed counts against probabilities.
inline double chi_square_p(const std::vector<std::size_t>& observed,
                           const std::vector<double>& expected_prob) {
  double total = 0.0;
  for (auto o : observed) total += static_cast<double>(o);
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected_prob[i] <= 0.0) continue;
    const double e = total * expected_prob[i];
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Relative error |a - b| / max(|a|, |b|, floor); the floor keeps tiny
// gradients from inflating the ratio.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central difference of f with respect to *x.
inline double central_difference(const std::function<double()>& f, double* x, double h = 1e-5) {
  const double saved = *x;
  *x = saved + h;
  const double up = f();
  *x = saved - h;
  const double down = f();
  *x = saved;
  return (up - down) / (2 * h);
}

}  // namespace la::testing

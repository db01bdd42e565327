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

#include "la/player_sim.hpp"

#include <algorithm>
#include <cmath>

#include "la/error.hpp"

namespace la {

SimulatorWorld::SimulatorWorld(std::shared_ptr<const KnowledgeBase> truth, std::uint64_t seed)
    : truth_(std::move(truth)), rng_(seed) {
  if (!truth_) throw InvalidArgument("simulator needs a truth knowledge base");
  double total = 0.0;
  cumulative_popularity_.reserve(truth_->num_entities());
  for (const auto& e : truth_->entities()) {
    total += e.popularity;
    cumulative_popularity_.push_back(total);
  }
}

std::size_t SimulatorWorld::sample_target(Rng& rng) const {
  const double u = rng.uniform() * cumulative_popularity_.back();
  auto it = std::upper_bound(cumulative_popularity_.begin(), cumulative_popularity_.end(), u);
  if (it == cumulative_popularity_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_popularity_.begin());
}

Response SimulatorWorld::respond(std::size_t target, std::size_t question, Rng& rng) const {
  const EntryCounts& c = truth_->counts(target, question);
  const double u = rng.uniform() * c.total();
  if (u < c.yes) return Response::yes;
  if (u < c.yes + c.no) return Response::no;
  return Response::unknown;
}

HoldoutSplit make_holdout(const KnowledgeBase& truth, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw InvalidArgument("holdout fraction must lie in [0, 1)");
  auto known = truth.known_entries();
  const auto remove = static_cast<std::size_t>(std::lround(fraction * known.size()));

  // Partial Fisher-Yates: the first `remove` slots become the held-out set.
  Rng rng = Rng::derive(seed, 0x401d);
  for (std::size_t i = 0; i < remove; ++i) {
    std::size_t j = i + rng.below(known.size() - i);
    std::swap(known[i], known[j]);
  }
  KnowledgeBase agent = truth;
  for (std::size_t i = 0; i < remove; ++i) agent.forget(known[i].first.first, known[i].first.second);
  return {std::move(agent), truth, fraction, remove};
}

}  // namespace la

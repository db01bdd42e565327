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
#include <memory>
#include <vector>

#include "la/kb.hpp"
#include "la/rng.hpp"

namespace la {

/// Simulated human player backed by a fixed ground-truth knowledge base.
///
/// The truth KB is shared read-only; each episode runner owns its own world
/// (and generator), so concurrent runners never share mutable state.
class SimulatorWorld {
 public:
  SimulatorWorld(std::shared_ptr<const KnowledgeBase> truth, std::uint64_t seed);

  const KnowledgeBase& truth() const { return *truth_; }
  std::shared_ptr<const KnowledgeBase> truth_ptr() const { return truth_; }
  Rng& rng() { return rng_; }

  // Target drawn with probability popularity(m) / sum(popularity).
  std::size_t sample_target(Rng& rng) const;
  std::size_t sample_target() { return sample_target(rng_); }

  // Answer drawn from the truth entry's multinoulli (uniform when missing).
  Response respond(std::size_t target, std::size_t question, Rng& rng) const;
  Response respond(std::size_t target, std::size_t question) {
    return respond(target, question, rng_);
  }

 private:
  std::shared_ptr<const KnowledgeBase> truth_;
  std::vector<double> cumulative_popularity_;
  Rng rng_;
};

inline bool judge(std::size_t target, std::size_t guess) { return target == guess; }

struct HoldoutSplit {
  KnowledgeBase agent_kb;
  KnowledgeBase truth_kb;
  double holdout_fraction = 0.0;
  std::size_t removed = 0;
};

// Demotes round(fraction * known) uniformly chosen known entries to missing in
// the agent's copy; the truth copy is untouched.
HoldoutSplit make_holdout(const KnowledgeBase& truth, double fraction, std::uint64_t seed);

}  // namespace la

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

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "la/episode.hpp"
#include "la/rng.hpp"

namespace la {

/// One question-asking step. States are not stored as vectors: both the
/// before and after states are prefixes of the shared episode history, so
/// recurrent states can be recomputed exactly under the current weights.
struct Transition {
  std::shared_ptr<const EpisodeHistory> episode;
  std::size_t step = 0;  // index of the turn this transition asked
  std::size_t action = 0;
  double reward = 0.0;   // +1 / -1 on the terminal step, 0 elsewhere
  bool terminal = false;

  EpisodeHistory state_before() const { return episode->prefix(step); }
  EpisodeHistory state_after() const { return episode->prefix(step + 1); }
};

/// Ring buffer sampled with probability proportional to priority^alpha.
/// New items enter with the largest priority seen so far. No importance
/// sampling correction is applied by the consumer.
class PrioritizedReplay {
 public:
  static constexpr double kPriorityFloor = 1e-6;

  explicit PrioritizedReplay(std::size_t capacity, double alpha = 0.5);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  double alpha() const { return alpha_; }

  // Returns the slot the transition landed in (the oldest slot once full).
  std::size_t insert(Transition t);
  const Transition& at(std::size_t slot) const;

  // `batch` slots drawn with replacement.
  std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const;

  // priority = |td_error| + kPriorityFloor
  void update_priorities(std::span<const std::size_t> slots, std::span<const double> td_errors);
  void set_priority(std::size_t slot, double priority);
  double priority(std::size_t slot) const;
  double probability(std::size_t slot) const;

 private:
  void set_leaf(std::size_t slot, double weight);

  std::size_t capacity_;
  double alpha_;
  std::size_t leaves_;  // power of two >= capacity
  std::vector<Transition> items_;
  std::vector<double> priorities_;
  std::vector<double> tree_;  // tree_[1] is the total of priority^alpha
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  double max_priority_ = 1.0;
};

}  // namespace la

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

#include "la/replay.hpp"

#include <cmath>

#include "la/error.hpp"

namespace la {

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, double alpha)
    : capacity_(capacity), alpha_(alpha) {
  if (capacity == 0) throw InvalidArgument("replay capacity must be positive");
  if (!(alpha >= 0.0)) throw InvalidArgument("replay alpha must be non-negative");
  leaves_ = 1;
  while (leaves_ < capacity) leaves_ *= 2;
  items_.resize(capacity);
  priorities_.assign(capacity, 0.0);
  tree_.assign(2 * leaves_, 0.0);
}

void PrioritizedReplay::set_leaf(std::size_t slot, double weight) {
  std::size_t node = leaves_ + slot;
  tree_[node] = weight;
  // Parents are recomputed from their children, never incremented, so the
  // sums carry no accumulated drift.
  for (node /= 2; node >= 1; node /= 2) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
}

std::size_t PrioritizedReplay::insert(Transition t) {
  const std::size_t slot = next_;
  items_[slot] = std::move(t);
  set_priority(slot, max_priority_);
  next_ = (next_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
  return slot;
}

const Transition& PrioritizedReplay::at(std::size_t slot) const {
  if (slot >= size_) throw InvalidArgument("replay slot out of range");
  return items_[slot];
}

std::vector<std::size_t> PrioritizedReplay::sample(std::size_t batch, Rng& rng) const {
  if (size_ == 0) throw StateError("cannot sample from an empty replay buffer");
  std::vector<std::size_t> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    double u = rng.uniform() * tree_[1];
    std::size_t node = 1;
    while (node < leaves_) {
      const double left = tree_[2 * node];
      if (u < left || tree_[2 * node + 1] <= 0.0) {
        node = 2 * node;
      } else {
        u -= left;
        node = 2 * node + 1;
      }
    }
    std::size_t slot = node - leaves_;
    if (slot >= size_) slot = size_ - 1;  // float edge at the very top
    out.push_back(slot);
  }
  return out;
}

void PrioritizedReplay::update_priorities(std::span<const std::size_t> slots,
                                          std::span<const double> td_errors) {
  if (slots.size() != td_errors.size())
    throw InvalidArgument("one td error per sampled slot required");
  for (std::size_t i = 0; i < slots.size(); ++i)
    set_priority(slots[i], std::abs(td_errors[i]) + kPriorityFloor);
}

void PrioritizedReplay::set_priority(std::size_t slot, double priority) {
  if (slot >= capacity_) throw InvalidArgument("replay slot out of range");
  if (!(priority > 0.0) || !std::isfinite(priority))
    throw InvalidArgument("replay priority must be positive and finite");
  priorities_[slot] = priority;
  if (priority > max_priority_) max_priority_ = priority;
  set_leaf(slot, std::pow(priority, alpha_));
}

double PrioritizedReplay::priority(std::size_t slot) const { return priorities_.at(slot); }

double PrioritizedReplay::probability(std::size_t slot) const {
  if (slot >= size_) throw InvalidArgument("replay slot out of range");
  return tree_[leaves_ + slot] / tree_[1];
}

}  // namespace la

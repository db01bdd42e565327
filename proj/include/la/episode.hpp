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
#include <vector>

#include "la/kb.hpp"

namespace la {

struct Turn {
  std::size_t question = 0;
  Response response = Response::unknown;

  friend bool operator==(const Turn&, const Turn&) = default;
};

/// Question/response pairs of one episode, in the order they were asked.
/// A question appears at most once.
class EpisodeHistory {
 public:
  EpisodeHistory() = default;
  explicit EpisodeHistory(std::size_t num_questions) : asked_(num_questions, 0) {}

  std::size_t num_questions() const { return asked_.size(); }
  std::size_t size() const { return turns_.size(); }
  bool empty() const { return turns_.empty(); }
  const std::vector<Turn>& turns() const { return turns_; }
  const Turn& operator[](std::size_t i) const { return turns_[i]; }

  bool asked(std::size_t question) const { return asked_.at(question) != 0; }
  // One byte per question; non-zero when already asked.
  const std::vector<char>& asked_mask() const { return asked_; }

  // Throws StateError on a repeated question.
  void add(std::size_t question, Response response);

  // First `length` turns as a history of its own.
  EpisodeHistory prefix(std::size_t length) const;

  friend bool operator==(const EpisodeHistory&, const EpisodeHistory&) = default;

 private:
  std::vector<Turn> turns_;
  std::vector<char> asked_;
};

}  // namespace la

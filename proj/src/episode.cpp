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

#include "la/episode.hpp"

#include "la/error.hpp"

namespace la {

void EpisodeHistory::add(std::size_t question, Response response) {
  if (question >= asked_.size())
    throw InvalidArgument("question index " + std::to_string(question) + " out of range");
  if (asked_[question]) throw StateError("question " + std::to_string(question) + " already asked");
  asked_[question] = 1;
  turns_.push_back({question, response});
}

EpisodeHistory EpisodeHistory::prefix(std::size_t length) const {
  EpisodeHistory out(asked_.size());
  for (std::size_t i = 0; i < length && i < turns_.size(); ++i)
    out.add(turns_[i].question, turns_[i].response);
  return out;
}

}  // namespace la

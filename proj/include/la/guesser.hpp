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

#include <span>
#include <vector>

#include "la/episode.hpp"
#include "la/kb.hpp"

namespace la {

struct GuessResult {
  std::vector<double> posterior;       // sums to 1
  std::vector<double> log_joint;       // log P0(m) + sum_t log P(x_t | m), unnormalized
  std::size_t guess = 0;               // lowest-index argmax
};

/// Naive-Bayes posterior over entities given the collected responses,
/// assuming responses are independent given the entity. `prior` holds
/// unnormalized positive weights (typically popularity); an empty span uses
/// the KB's own popularity.
GuessResult posterior(const EpisodeHistory& history, const KnowledgeBase& kb,
                      std::span<const double> prior = {});

std::size_t guess(const GuessResult& result);

}  // namespace la

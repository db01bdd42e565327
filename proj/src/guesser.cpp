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

#include "la/guesser.hpp"

#include <cmath>

#include "la/error.hpp"

namespace la {

GuessResult posterior(const EpisodeHistory& history, const KnowledgeBase& kb,
                      std::span<const double> prior) {
  const std::size_t M = kb.num_entities();
  if (M == 0) throw InvalidArgument("posterior over an empty entity set");
  if (!prior.empty() && prior.size() != M)
    throw StructuralError("prior has " + std::to_string(prior.size()) + " weights for " +
                          std::to_string(M) + " entities");

  GuessResult r;
  r.log_joint.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double w = prior.empty() ? kb.entities()[m].popularity : prior[m];
    if (!(w > 0.0)) throw InvalidArgument("prior weights must be positive");
    double lp = std::log(w);
    for (const auto& turn : history.turns()) {
      const EntryCounts& c = kb.counts(m, turn.question);
      lp += std::log(static_cast<double>(c[turn.response]) / c.total());
    }
    r.log_joint[m] = lp;
  }

  std::size_t best = 0;
  for (std::size_t m = 1; m < M; ++m)
    if (r.log_joint[m] > r.log_joint[best]) best = m;
  r.guess = best;

  const double peak = r.log_joint[best];
  double z = 0.0;
  r.posterior.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    r.posterior[m] = std::exp(r.log_joint[m] - peak);
    z += r.posterior[m];
  }
  for (auto& p : r.posterior) p /= z;
  return r;
}

std::size_t guess(const GuessResult& result) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < result.posterior.size(); ++m)
    if (result.posterior[m] > result.posterior[best]) best = m;
  return best;
}

}  // namespace la

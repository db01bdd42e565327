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
#include <cstdint>
#include <span>
#include <vector>

namespace la {

/// Portable 64-bit generator (SplitMix64).
///
/// Every random decision in the library goes through this class so that a
/// seed reproduces the same bits on any platform and standard library. The
/// state advances by the golden-ratio increment 0x9E3779B97F4A7C15 and each
/// output is finalized with the multipliers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB (shifts 30, 27, 31).
///
/// Derived quantities are also pinned down here rather than delegated to
/// <random>, whose distributions are implementation-defined:
///   uniform()  = (next() >> 11) * 2^-53, in [0, 1)
///   below(n)   = next() % n with rejection of the biased low range
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn with probability weights[i] / sum(weights). Weights must be
  // non-negative with a positive sum.
  std::size_t categorical(std::span<const double> weights);

  // Fisher-Yates with below(); identical across platforms.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const { return state_; }

  // Independent stream for (seed, stream id); used to give every episode,
  // phase and component its own generator.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);
  static Rng derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub);

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace la

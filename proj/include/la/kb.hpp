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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace la {

// Codes are part of the file and wire formats; do not renumber.
enum class Response : std::uint8_t { yes = 0, no = 1, unknown = 2 };

inline constexpr std::array<Response, 3> kAllResponses = {Response::yes, Response::no,
                                                          Response::unknown};

constexpr std::size_t code(Response r) { return static_cast<std::size_t>(r); }

// yes = +1, no = -1, unknown = 0
constexpr double signed_value(Response r) {
  return r == Response::yes ? 1.0 : (r == Response::no ? -1.0 : 0.0);
}

std::string_view to_string(Response r);
std::optional<Response> parse_response(std::string_view text);
Response response_from_code(std::size_t code);

/// Response tallies of one entity-question entry, pseudo-counts included.
///
/// A missing entry is (1, 1, 1). Every tally stays >= 1 so the derived
/// multinoulli has all components strictly inside (0, 1).
struct EntryCounts {
  std::uint32_t yes = 1;
  std::uint32_t no = 1;
  std::uint32_t unknown = 1;

  std::uint32_t total() const { return yes + no + unknown; }
  bool known() const { return total() != 3; }
  std::uint32_t operator[](Response r) const;
  std::uint32_t& operator[](Response r);

  friend bool operator==(const EntryCounts&, const EntryCounts&) = default;
};

using Distribution = std::array<double, 3>;  // indexed by Response code

Distribution entry_distribution(const EntryCounts& counts);

struct Entity {
  std::string id;
  std::string name;
  double popularity = 1.0;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Question {
  std::string id;
  std::string text;

  friend bool operator==(const Question&, const Question&) = default;
};

/// The entity-question matrix with count-based multinoulli entries.
///
/// Entries are stored sparsely; an absent entry means (1, 1, 1). The map never
/// holds a (1, 1, 1) value, so `known_count()` is just the map size.
///
/// Not internally synchronized: callers sharing one instance across threads
/// hold a reader/writer lock around it (many readers or one writer).
class KnowledgeBase {
 public:
  using Cell = std::pair<std::size_t, std::size_t>;

  KnowledgeBase(std::vector<Entity> entities, std::vector<Question> questions);

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_questions() const { return questions_.size(); }
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Question>& questions() const { return questions_; }

  const EntryCounts& counts(std::size_t m, std::size_t n) const;
  void set_counts(std::size_t m, std::size_t n, const EntryCounts& counts);
  bool is_known(std::size_t m, std::size_t n) const;
  std::size_t known_count() const { return entries_.size(); }

  // Adds one observed response; a missing entry materializes from (1, 1, 1).
  const EntryCounts& update(std::size_t m, std::size_t n, Response r);
  // Inverse of update(); refuses to drop a tally below its pseudo-count.
  const EntryCounts& remove_response(std::size_t m, std::size_t n, Response r);
  void forget(std::size_t m, std::size_t n);

  bool is_rejected(std::size_t m, std::size_t n) const;
  void reject(std::size_t m, std::size_t n);
  const std::set<Cell>& rejected() const { return rejected_; }

  // Known entries in row-major (m, n) order.
  std::vector<std::pair<Cell, EntryCounts>> known_entries() const;

  // Popularity normalized to a probability vector.
  std::vector<double> popularity_prior() const;

  friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;

 private:
  std::uint64_t key(std::size_t m, std::size_t n) const;
  void check_index(std::size_t m, std::size_t n) const;

  std::vector<Entity> entities_;
  std::vector<Question> questions_;
  std::map<std::uint64_t, EntryCounts> entries_;
  std::set<Cell> rejected_;
};

/// Dense binary known/missing mask y_mn = [N_mn != 3].
struct IndicatorMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> values;  // row-major

  std::uint8_t at(std::size_t m, std::size_t n) const { return values[m * cols + n]; }
  std::size_t positives() const;
};

IndicatorMatrix indicator_matrix(const KnowledgeBase& kb);

// Natural-log KL divergence KL(p || q).
double kl_divergence(const Distribution& p, const Distribution& q);

/// Mean of exp(KL(agent_mn || player_mn)) over all M*N entries, rejected ones
/// included. Missing entries on either side count as uniform. Always >= 1.
double kb_distance(const KnowledgeBase& agent, const KnowledgeBase& player);

struct SyntheticKbSpec {
  std::size_t entities = 100;
  std::size_t questions = 80;
  double density = 0.4;
  double zipf_exponent = 1.0;
  double concentration = 0.85;
  std::uint64_t seed = 42;
  // Known-entry layout: entities and questions fall into `groups` clusters
  // and a same-cluster pair is known with probability `group_affinity`; the
  // out-of-cluster rate is solved so the expected density stays `density`.
  // groups <= 1 makes every entry known with probability `density`.
  std::size_t groups = 4;
  double group_affinity = 0.95;
  std::uint32_t base_records = 30;
  std::uint32_t record_jitter = 10;
  std::array<double, 3> dominant_weights = {0.45, 0.45, 0.10};
};

KnowledgeBase generate_synthetic_kb(const SyntheticKbSpec& spec);

void write_kb(std::ostream& out, const KnowledgeBase& kb);
KnowledgeBase read_kb(std::istream& in, const std::string& source = "<stream>");
void save_kb(const KnowledgeBase& kb, const std::string& path);
KnowledgeBase load_kb(const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace la

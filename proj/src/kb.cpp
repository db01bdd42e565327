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

#include "la/kb.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "la/error.hpp"
#include "la/rng.hpp"

namespace la {

namespace {

const EntryCounts kMissing{};

constexpr std::string_view kHeader = "#la-kb v1";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void check_field_text(std::string_view text, const char* what) {
  if (text.find_first_of("\t\r\n") != std::string_view::npos)
    throw InvalidArgument(std::string(what) + " must not contain tabs or newlines: '" +
                          std::string(text) + "'");
}

}  // namespace

std::string_view to_string(Response r) {
  switch (r) {
    case Response::yes:
      return "yes";
    case Response::no:
      return "no";
    case Response::unknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<Response> parse_response(std::string_view text) {
  if (text == "yes") return Response::yes;
  if (text == "no") return Response::no;
  if (text == "unknown") return Response::unknown;
  return std::nullopt;
}

Response response_from_code(std::size_t c) {
  if (c > 2) throw InvalidArgument("response code out of range: " + std::to_string(c));
  return static_cast<Response>(c);
}

std::uint32_t EntryCounts::operator[](Response r) const {
  return r == Response::yes ? yes : (r == Response::no ? no : unknown);
}

std::uint32_t& EntryCounts::operator[](Response r) {
  return r == Response::yes ? yes : (r == Response::no ? no : unknown);
}

Distribution entry_distribution(const EntryCounts& c) {
  const double total = c.total();
  return {c.yes / total, c.no / total, c.unknown / total};
}

KnowledgeBase::KnowledgeBase(std::vector<Entity> entities, std::vector<Question> questions)
    : entities_(std::move(entities)), questions_(std::move(questions)) {
  if (entities_.empty()) throw InvalidArgument("knowledge base needs at least one entity");
  if (questions_.empty()) throw InvalidArgument("knowledge base needs at least one question");
  for (const auto& e : entities_) {
    if (!(e.popularity > 0.0) || !std::isfinite(e.popularity))
      throw InvalidArgument("entity '" + e.id + "' has non-positive popularity");
  }
}

std::uint64_t KnowledgeBase::key(std::size_t m, std::size_t n) const {
  return static_cast<std::uint64_t>(m) * questions_.size() + n;
}

void KnowledgeBase::check_index(std::size_t m, std::size_t n) const {
  if (m >= entities_.size() || n >= questions_.size())
    throw InvalidArgument("entry (" + std::to_string(m) + ", " + std::to_string(n) +
                          ") out of range for " + std::to_string(entities_.size()) + "x" +
                          std::to_string(questions_.size()) + " knowledge base");
}

const EntryCounts& KnowledgeBase::counts(std::size_t m, std::size_t n) const {
  check_index(m, n);
  auto it = entries_.find(key(m, n));
  return it == entries_.end() ? kMissing : it->second;
}

void KnowledgeBase::set_counts(std::size_t m, std::size_t n, const EntryCounts& c) {
  check_index(m, n);
  if (c.yes < 1 || c.no < 1 || c.unknown < 1)
    throw InvalidArgument("entry counts must keep one pseudo-count per response");
  if (c.known())
    entries_[key(m, n)] = c;
  else
    entries_.erase(key(m, n));
}

bool KnowledgeBase::is_known(std::size_t m, std::size_t n) const {
  check_index(m, n);
  return entries_.count(key(m, n)) != 0;
}

const EntryCounts& KnowledgeBase::update(std::size_t m, std::size_t n, Response r) {
  check_index(m, n);
  auto [it, inserted] = entries_.try_emplace(key(m, n));
  ++it->second[r];
  return it->second;
}

const EntryCounts& KnowledgeBase::remove_response(std::size_t m, std::size_t n, Response r) {
  check_index(m, n);
  auto it = entries_.find(key(m, n));
  if (it == entries_.end() || it->second[r] <= 1)
    throw StateError("no recorded '" + std::string(to_string(r)) + "' response to remove");
  --it->second[r];
  if (!it->second.known()) {
    entries_.erase(it);
    return kMissing;
  }
  return it->second;
}

void KnowledgeBase::forget(std::size_t m, std::size_t n) {
  check_index(m, n);
  entries_.erase(key(m, n));
}

bool KnowledgeBase::is_rejected(std::size_t m, std::size_t n) const {
  return rejected_.count({m, n}) != 0;
}

void KnowledgeBase::reject(std::size_t m, std::size_t n) {
  check_index(m, n);
  rejected_.insert({m, n});
}

std::vector<std::pair<KnowledgeBase::Cell, EntryCounts>> KnowledgeBase::known_entries() const {
  std::vector<std::pair<Cell, EntryCounts>> out;
  out.reserve(entries_.size());
  const std::size_t cols = questions_.size();
  for (const auto& [k, c] : entries_) out.push_back({{k / cols, k % cols}, c});
  return out;
}

std::vector<double> KnowledgeBase::popularity_prior() const {
  double total = 0.0;
  for (const auto& e : entities_) total += e.popularity;
  std::vector<double> prior;
  prior.reserve(entities_.size());
  for (const auto& e : entities_) prior.push_back(e.popularity / total);
  return prior;
}

std::size_t IndicatorMatrix::positives() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

IndicatorMatrix indicator_matrix(const KnowledgeBase& kb) {
  IndicatorMatrix y;
  y.rows = kb.num_entities();
  y.cols = kb.num_questions();
  y.values.assign(y.rows * y.cols, 0);
  for (const auto& [cell, counts] : kb.known_entries()) y.values[cell.first * y.cols + cell.second] = 1;
  return y;
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < 3; ++i) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

double kb_distance(const KnowledgeBase& agent, const KnowledgeBase& player) {
  if (agent.num_entities() != player.num_entities() ||
      agent.num_questions() != player.num_questions())
    throw StructuralError("kb_distance: knowledge bases have different dimensions");

  // Entries missing on both sides contribute exp(0) = 1 each, so only the
  // union of known cells needs evaluating.
  std::set<KnowledgeBase::Cell> cells;
  for (const auto& [cell, c] : agent.known_entries()) cells.insert(cell);
  for (const auto& [cell, c] : player.known_entries()) cells.insert(cell);

  double sum = 0.0;
  for (const auto& [m, n] : cells) {
    sum += std::exp(kl_divergence(entry_distribution(agent.counts(m, n)),
                                  entry_distribution(player.counts(m, n))));
  }
  const double total = static_cast<double>(agent.num_entities()) * agent.num_questions();
  sum += total - static_cast<double>(cells.size());
  return sum / total;
}

KnowledgeBase generate_synthetic_kb(const SyntheticKbSpec& spec) {
  if (spec.entities < 1 || spec.questions < 1)
    throw InvalidArgument("synthetic KB needs at least one entity and one question");
  if (!(spec.density > 0.0 && spec.density <= 1.0))
    throw InvalidArgument("density must lie in (0, 1]");
  if (!(spec.zipf_exponent >= 0.0) || !std::isfinite(spec.zipf_exponent))
    throw InvalidArgument("zipf_exponent must be a finite non-negative number");
  if (!(spec.concentration >= 0.0 && spec.concentration <= 1.0))
    throw InvalidArgument("concentration must lie in [0, 1]");
  if (!(spec.group_affinity >= 0.0 && spec.group_affinity <= 1.0))
    throw InvalidArgument("group_affinity must lie in [0, 1]");
  double weight_sum = 0.0;
  for (double w : spec.dominant_weights) {
    if (!(w >= 0.0)) throw InvalidArgument("dominant response weights must be non-negative");
    weight_sum += w;
  }
  if (!(weight_sum > 0.0)) throw InvalidArgument("dominant response weights sum to zero");

  const std::size_t M = spec.entities;
  const std::size_t N = spec.questions;

  std::vector<Entity> entities;
  entities.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    char id[32];
    std::snprintf(id, sizeof id, "e%04zu", m);
    entities.push_back({id, "Entity " + std::to_string(m + 1),
                        std::pow(static_cast<double>(m + 1), -spec.zipf_exponent)});
  }
  std::vector<Question> questions;
  questions.reserve(N);
  for (std::size_t n = 0; n < N; ++n) {
    char id[32];
    std::snprintf(id, sizeof id, "q%04zu", n);
    questions.push_back({id, "Question " + std::to_string(n + 1) + "?"});
  }
  KnowledgeBase kb(std::move(entities), std::move(questions));

  Rng group_rng = Rng::derive(spec.seed, 1);
  Rng mask_rng = Rng::derive(spec.seed, 2);
  Rng count_rng = Rng::derive(spec.seed, 3);

  const std::size_t groups = std::max<std::size_t>(spec.groups, 1);
  std::vector<std::size_t> entity_group(M), question_group(N);
  for (auto& g : entity_group) g = group_rng.below(groups);
  for (auto& g : question_group) g = group_rng.below(groups);

  double p_in = spec.density;
  double p_out = spec.density;
  if (groups > 1) {
    std::vector<double> entity_count(groups, 0.0), question_count(groups, 0.0);
    for (auto g : entity_group) entity_count[g] += 1.0;
    for (auto g : question_group) question_count[g] += 1.0;
    double same = 0.0;
    for (std::size_t g = 0; g < groups; ++g) same += entity_count[g] * question_count[g];
    const double all = static_cast<double>(M) * N;
    const double target = spec.density * all;
    p_in = std::max(spec.density, spec.group_affinity);
    if (same >= all) {
      p_in = p_out = spec.density;
    } else if (p_in * same > target) {
      p_in = target / same;
      p_out = 0.0;
    } else {
      p_out = std::min(1.0, (target - p_in * same) / (all - same));
    }
  }

  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      const double p = entity_group[m] == question_group[n] ? p_in : p_out;
      if (!(mask_rng.uniform() < p)) continue;
      const Response dominant = response_from_code(count_rng.categorical(spec.dominant_weights));
      const std::uint32_t records =
          spec.base_records + static_cast<std::uint32_t>(count_rng.below(spec.record_jitter + 1));
      EntryCounts c;
      for (std::uint32_t r = 0; r < records; ++r) {
        if (count_rng.uniform() < spec.concentration) {
          ++c[dominant];
        } else {
          // one of the two non-dominant responses, in code order
          std::size_t pick = count_rng.below(2);
          std::size_t other = pick >= code(dominant) ? pick + 1 : pick;
          ++c[response_from_code(other)];
        }
      }
      if (c.known()) kb.set_counts(m, n, c);
    }
  }
  return kb;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw InvalidArgument("cannot format number");
  return std::string(buf, ptr);
}

void write_kb(std::ostream& out, const KnowledgeBase& kb) {
  out << kHeader << '\n';
  for (const auto& e : kb.entities()) {
    check_field_text(e.id, "entity id");
    check_field_text(e.name, "entity name");
    out << "entity\t" << e.id << '\t' << format_double(e.popularity) << '\t' << e.name << '\n';
  }
  for (const auto& q : kb.questions()) {
    check_field_text(q.id, "question id");
    check_field_text(q.text, "question text");
    out << "question\t" << q.id << '\t' << q.text << '\n';
  }
  for (const auto& [cell, c] : kb.known_entries()) {
    out << "entry\t" << cell.first << '\t' << cell.second << '\t' << c.yes << '\t' << c.no << '\t'
        << c.unknown << '\n';
  }
  for (const auto& [m, n] : kb.rejected()) out << "rejected\t" << m << '\t' << n << '\n';
}

namespace {

enum class Section { entities, questions, entries, rejected };

template <typename T>
T parse_unsigned(std::string_view field, const std::string& source, std::size_t line,
                 const char* what) {
  if (!field.empty() && field.front() == '-')
    throw ParseError(source, line, std::string("negative ") + what + " '" + std::string(field) + "'");
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError(source, line, std::string("invalid ") + what + " '" + std::string(field) + "'");
  return value;
}

}  // namespace

KnowledgeBase read_kb(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(source, 0, "empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw ParseError(source, 1, "missing '#la-kb v1' header");

  std::vector<Entity> entities;
  std::vector<Question> questions;
  struct RawEntry {
    std::size_t line;
    std::size_t m, n;
    EntryCounts counts;
  };
  std::vector<RawEntry> entries;
  std::vector<std::pair<std::size_t, KnowledgeBase::Cell>> rejected;
  Section section = Section::entities;

  auto enter = [&](Section s, const char* kind) {
    if (s < section)
      throw ParseError(source, line_no, std::string("'") + kind + "' line out of order");
    section = s;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_tabs(line);
    const std::string_view kind = f[0];
    if (kind == "entity") {
      enter(Section::entities, "entity");
      if (f.size() != 4) throw ParseError(source, line_no, "entity line needs 3 fields");
      double pop = 0.0;
      auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), pop);
      if (ec != std::errc() || ptr != f[2].data() + f[2].size())
        throw ParseError(source, line_no, "invalid popularity '" + std::string(f[2]) + "'");
      if (!(pop > 0.0) || !std::isfinite(pop))
        throw ParseError(source, line_no, "popularity must be positive");
      entities.push_back({std::string(f[1]), std::string(f[3]), pop});
    } else if (kind == "question") {
      enter(Section::questions, "question");
      if (f.size() != 3) throw ParseError(source, line_no, "question line needs 2 fields");
      questions.push_back({std::string(f[1]), std::string(f[2])});
    } else if (kind == "entry") {
      enter(Section::entries, "entry");
      if (f.size() != 6) throw ParseError(source, line_no, "entry line needs 5 fields");
      RawEntry e{line_no,
                 parse_unsigned<std::size_t>(f[1], source, line_no, "entity index"),
                 parse_unsigned<std::size_t>(f[2], source, line_no, "question index"),
                 {parse_unsigned<std::uint32_t>(f[3], source, line_no, "count"),
                  parse_unsigned<std::uint32_t>(f[4], source, line_no, "count"),
                  parse_unsigned<std::uint32_t>(f[5], source, line_no, "count")}};
      if (e.counts.yes < 1 || e.counts.no < 1 || e.counts.unknown < 1)
        throw ParseError(source, line_no, "counts must be >= 1 (pseudo-counts included)");
      entries.push_back(e);
    } else if (kind == "rejected") {
      enter(Section::rejected, "rejected");
      if (f.size() != 3) throw ParseError(source, line_no, "rejected line needs 2 fields");
      rejected.push_back({line_no,
                          {parse_unsigned<std::size_t>(f[1], source, line_no, "entity index"),
                           parse_unsigned<std::size_t>(f[2], source, line_no, "question index")}});
    } else {
      throw ParseError(source, line_no, "unknown record type '" + std::string(kind) + "'");
    }
  }

  if (entities.empty()) throw ParseError(source, line_no, "no entity lines");
  if (questions.empty()) throw ParseError(source, line_no, "no question lines");
  KnowledgeBase kb(std::move(entities), std::move(questions));
  std::set<KnowledgeBase::Cell> seen;
  for (const auto& e : entries) {
    if (e.m >= kb.num_entities() || e.n >= kb.num_questions())
      throw ParseError(source, e.line, "entry index out of range");
    if (!seen.insert({e.m, e.n}).second)
      throw ParseError(source, e.line, "duplicate entry for (" + std::to_string(e.m) + ", " +
                                           std::to_string(e.n) + ")");
    kb.set_counts(e.m, e.n, e.counts);
  }
  for (const auto& [l, cell] : rejected) {
    if (cell.first >= kb.num_entities() || cell.second >= kb.num_questions())
      throw ParseError(source, l, "rejected index out of range");
    if (kb.is_rejected(cell.first, cell.second))
      throw ParseError(source, l, "duplicate rejected entry");
    kb.reject(cell.first, cell.second);
  }
  return kb;
}

void save_kb(const KnowledgeBase& kb, const std::string& path) {
  std::ostringstream buffer;
  write_kb(buffer, kb);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << buffer.str();
  if (!out) throw IoError("failed writing '" + path + "'");
}

KnowledgeBase load_kb(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_kb(in, path);
}

}  // namespace la

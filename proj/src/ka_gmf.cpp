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

#include "la/ka_gmf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "la/error.hpp"

namespace la {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Sample {
  std::size_t m;
  std::size_t n;
  double y;
};

}  // namespace

// --- GmfModel -----------------------------------------------------------------------------

GmfModel::GmfModel(std::size_t num_entities, std::size_t num_questions, std::size_t latent_dim,
                   Rng& rng)
    : entity_("gmf.entity_factors", {num_entities, latent_dim}),
      question_("gmf.question_factors", {latent_dim, num_questions}),
      output_("gmf.output_weights", {latent_dim}) {
  if (num_entities == 0 || num_questions == 0 || latent_dim == 0)
    throw InvalidArgument("GMF dimensions must be positive");
  nn::init_uniform(entity_.value, 1.0, rng);
  nn::init_uniform(question_.value, 1.0, rng);
  nn::init_uniform(output_.value, 1.0 / std::sqrt(static_cast<double>(latent_dim)), rng);
}

void GmfModel::check_index(std::size_t m, std::size_t n) const {
  if (m >= num_entities() || n >= num_questions())
    throw InvalidArgument("GMF index (" + std::to_string(m) + ", " + std::to_string(n) +
                          ") out of range");
}

double GmfModel::logit(std::size_t m, std::size_t n) const {
  check_index(m, n);
  const std::size_t K = latent_dim();
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    z += output_.value[k] * entity_.value.at(m, k) * question_.value.at(k, n);
  return z;
}

double GmfModel::score(std::size_t m, std::size_t n) const { return sigmoid(logit(m, n)); }

std::vector<double> GmfModel::scores(std::size_t m) const {
  std::vector<double> out(num_questions());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = score(m, n);
  return out;
}

double GmfModel::backprop(std::size_t m, std::size_t n, double dscore) {
  const double s = score(m, n);
  const double dz = dscore * s * (1.0 - s);
  for (std::size_t k = 0; k < latent_dim(); ++k) {
    const double h = output_.value[k];
    const double u = entity_.value.at(m, k);
    const double v = question_.value.at(k, n);
    output_.grad[k] += dz * u * v;
    entity_.grad.at(m, k) += dz * h * v;
    question_.grad.at(k, n) += dz * h * u;
  }
  return s;
}

// --- training ---------------------------------------------------------------------------------

GmfTraining gmf_train(const IndicatorMatrix& y, const GmfConfig& config) {
  if (y.rows == 0 || y.cols == 0 || y.values.size() != y.rows * y.cols)
    throw InvalidArgument("indicator matrix is empty or malformed");
  if (config.batch_size == 0) throw InvalidArgument("GMF batch size must be positive");

  std::vector<std::pair<std::size_t, std::size_t>> positives, zeros;
  for (std::size_t m = 0; m < y.rows; ++m)
    for (std::size_t n = 0; n < y.cols; ++n) (y.at(m, n) ? positives : zeros).emplace_back(m, n);
  if (positives.empty()) throw InvalidArgument("indicator matrix has no known entries to fit");

  Rng init_rng = Rng::derive(config.seed, 0);
  Rng sample_rng = Rng::derive(config.seed, 1);
  GmfTraining out{GmfModel(y.rows, y.cols, config.latent_dim, init_rng), {}};
  GmfModel& model = out.model;
  nn::Adam adam(config.learning_rate);
  const auto params = model.parameters();

  std::vector<Sample> samples;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    samples.clear();
    for (const auto& [m, n] : positives) {
      samples.push_back({m, n, 1.0});
      if (zeros.empty()) continue;
      for (std::size_t j = 0; j < config.negatives; ++j) {
        const auto& [zm, zn] = zeros[sample_rng.below(zeros.size())];
        samples.push_back({zm, zn, 0.0});
      }
    }
    sample_rng.shuffle(samples);

    double epoch_sq = 0.0;
    for (std::size_t start = 0; start < samples.size(); start += config.batch_size) {
      const std::size_t end = std::min(samples.size(), start + config.batch_size);
      const double batch = static_cast<double>(end - start);
      nn::zero_grads(params);
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = samples[i];
        const double d = model.score(s.m, s.n) - s.y;
        epoch_sq += d * d;
        model.backprop(s.m, s.n, 2.0 * d / batch);
      }
      adam.step(params);
    }
    out.epoch_loss.push_back(epoch_sq / static_cast<double>(samples.size()));
  }
  return out;
}

// --- uncertainty and selection -------------------------------------------------------------------

bool reject_check(const EntryCounts& counts, const RejectionRule& rule) {
  const std::uint32_t total = counts.total();
  if (total < rule.min_responses) return false;
  return static_cast<double>(counts.unknown) / static_cast<double>(total) > rule.unknown_fraction;
}

std::vector<double> uncertainty_weights(const KnowledgeBase& kb, std::size_t entity,
                                        const std::vector<char>& asked) {
  const std::size_t N = kb.num_questions();
  if (asked.size() != N) throw StructuralError("asked mask has the wrong size");
  if (entity >= kb.num_entities()) throw InvalidArgument("entity index out of range");
  std::vector<double> w(N, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    if (asked[n] || kb.is_rejected(entity, n)) continue;
    w[n] = 1.0 / std::sqrt(static_cast<double>(kb.counts(entity, n).total()));
  }
  return w;
}

std::vector<std::size_t> sample_candidates(std::span<const double> weights, std::size_t count,
                                           Rng& rng) {
  std::vector<double> remaining(weights.begin(), weights.end());
  for (double w : remaining)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidArgument("candidate weights must be finite and non-negative");
  std::vector<std::size_t> out;
  std::size_t available = 0;
  for (double w : remaining) available += w > 0.0 ? 1 : 0;
  const std::size_t draws = std::min(count, available);
  out.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const std::size_t pick = rng.categorical(remaining);
    out.push_back(pick);
    remaining[pick] = 0.0;
  }
  return out;
}

std::string_view to_string(KaSelector s) {
  switch (s) {
    case KaSelector::la_gmf:
      return "la-gmf";
    case KaSelector::uncertainty_only:
      return "uncertainty-only";
    case KaSelector::value_only:
      return "value-only";
  }
  return "unknown";
}

KaSelector parse_ka_selector(std::string_view text) {
  if (text == "la-gmf") return KaSelector::la_gmf;
  if (text == "uncertainty-only") return KaSelector::uncertainty_only;
  if (text == "value-only") return KaSelector::value_only;
  throw InvalidArgument("unknown KA selector '" + std::string(text) +
                        "' (expected la-gmf, uncertainty-only or value-only)");
}

namespace {

std::size_t top_scored(const GmfModel& model, std::size_t entity,
                       const std::vector<std::size_t>& questions) {
  std::size_t best = questions.front();
  double best_score = model.score(entity, best);
  for (std::size_t q : questions) {
    const double s = model.score(entity, q);
    if (s > best_score || (s == best_score && q < best)) {
      best = q;
      best_score = s;
    }
  }
  return best;
}

}  // namespace

std::optional<std::size_t> choose_ka_question(KaSelector selector, const GmfModel* model,
                                              const KnowledgeBase& kb, std::size_t entity,
                                              const std::vector<char>& asked,
                                              std::size_t num_candidates, Rng& rng) {
  if (selector != KaSelector::uncertainty_only && model == nullptr)
    throw InvalidArgument("this KA selector needs a GMF model");
  if (num_candidates == 0) throw InvalidArgument("candidate set size must be positive");

  if (selector == KaSelector::value_only) {
    std::vector<std::size_t> available;
    for (std::size_t n = 0; n < kb.num_questions(); ++n)
      if (!asked.at(n) && !kb.is_rejected(entity, n)) available.push_back(n);
    if (available.empty()) return std::nullopt;
    return top_scored(*model, entity, available);
  }

  const auto weights = uncertainty_weights(kb, entity, asked);
  const auto candidates = sample_candidates(weights, num_candidates, rng);
  if (candidates.empty()) return std::nullopt;
  if (selector == KaSelector::uncertainty_only) return candidates[rng.below(candidates.size())];
  return top_scored(*model, entity, candidates);
}

std::vector<KaRecord> ka_phase(const KaPhaseSettings& settings, const GmfModel* model,
                               const KnowledgeBase& kb, std::size_t guess, std::size_t target,
                               EpisodeHistory& history, const SimulatorWorld& world,
                               Rng& selection_rng, Rng& response_rng) {
  std::vector<KaRecord> records;
  for (std::size_t t = 0; t < settings.questions; ++t) {
    const auto q = choose_ka_question(settings.selector, model, kb, guess, history.asked_mask(),
                                      settings.candidates, selection_rng);
    if (!q) break;
    const Response x = world.respond(target, *q, response_rng);
    history.add(*q, x);
    records.push_back({guess, *q, x, false});
  }
  return records;
}

// --- buffer ---------------------------------------------------------------------------------------

KaBuffer::KaBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("KA buffer capacity must be positive");
  records_.reserve(capacity);
}

void KaBuffer::add(const KaRecord& record) {
  if (full()) throw CapacityError("KA buffer is full");
  records_.push_back(record);
}

std::vector<KaRecord> KaBuffer::drain() {
  std::vector<KaRecord> out;
  out.swap(records_);
  records_.reserve(capacity_);
  return out;
}

CommitResult commit_buffer(KaBuffer& buffer, KnowledgeBase& kb, const RejectionRule& rule,
                           bool commit_all) {
  CommitResult result;
  std::vector<KnowledgeBase::Cell> touched;
  for (const KaRecord& r : buffer.drain()) {
    if (!r.correct && !commit_all) {
      ++result.discarded_wrong_guess;
      continue;
    }
    kb.update(r.entity, r.question, r.response);
    touched.emplace_back(r.entity, r.question);
    ++result.committed;
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (const auto& [m, n] : touched) {
    if (!kb.is_rejected(m, n) && reject_check(kb.counts(m, n), rule)) {
      kb.reject(m, n);
      ++result.newly_rejected;
    }
  }
  return result;
}

}  // namespace la

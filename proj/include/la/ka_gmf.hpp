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

// Knowledge acquisition: the GMF value model, uncertainty sampling of
// candidate questions, KA question selection and the knowledge buffer.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "la/episode.hpp"
#include "la/kb.hpp"
#include "la/nn.hpp"
#include "la/player_sim.hpp"
#include "la/rng.hpp"

namespace la {

/// score(m, n) = sigmoid(h . (U_m * V_n)) with U: M x K, V: K x N, h: K.
class GmfModel {
 public:
  GmfModel(std::size_t num_entities, std::size_t num_questions, std::size_t latent_dim, Rng& rng);

  std::size_t num_entities() const { return entity_.value.rows(); }
  std::size_t num_questions() const { return question_.value.cols(); }
  std::size_t latent_dim() const { return output_.value.size(); }

  double logit(std::size_t m, std::size_t n) const;
  double score(std::size_t m, std::size_t n) const;
  std::vector<double> scores(std::size_t m) const;

  // Accumulates the parameter gradients of dscore * score(m, n); returns the score.
  double backprop(std::size_t m, std::size_t n, double dscore);

  nn::Parameter& entity_factors() { return entity_; }      // U
  nn::Parameter& question_factors() { return question_; }  // V
  nn::Parameter& output_weights() { return output_; }      // h
  const nn::Parameter& entity_factors() const { return entity_; }
  const nn::Parameter& question_factors() const { return question_; }
  const nn::Parameter& output_weights() const { return output_; }
  nn::ParameterList parameters() { return {&entity_, &question_, &output_}; }

  friend bool operator==(const GmfModel& a, const GmfModel& b) {
    return a.entity_.value == b.entity_.value && a.question_.value == b.question_.value &&
           a.output_.value == b.output_.value;
  }

 private:
  void check_index(std::size_t m, std::size_t n) const;

  nn::Parameter entity_;
  nn::Parameter question_;
  nn::Parameter output_;
};

struct GmfConfig {
  std::size_t latent_dim = 48;
  double learning_rate = 1e-3;
  std::size_t negatives = 4;  // sampled zeros per positive
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  std::uint64_t seed = 7;
};

struct GmfTraining {
  GmfModel model;
  std::vector<double> epoch_loss;  // mean squared error over each epoch's samples
};

/// Fits Y from a fresh initialization. Each epoch pairs every positive with
/// `negatives` zeros drawn uniformly, shuffles, and takes Adam steps on the
/// minibatch-mean squared error. Throws InvalidArgument when Y has no positives.
GmfTraining gmf_train(const IndicatorMatrix& y, const GmfConfig& config);

/// Entries with at least `min_responses` responses of which more than
/// `unknown_fraction` are "unknown" (pseudo-counts included) are rejected.
struct RejectionRule {
  std::uint32_t min_responses = 15;
  double unknown_fraction = 0.8;
};

bool reject_check(const EntryCounts& counts, const RejectionRule& rule = {});

/// theta_m(n) = 1 / sqrt(N_mn), zero for asked or rejected questions.
std::vector<double> uncertainty_weights(const KnowledgeBase& kb, std::size_t entity,
                                        const std::vector<char>& asked);

/// Draws `count` distinct indices without replacement, each draw proportional
/// to the remaining weights. Returns every positive-weight index (in draw
/// order) when fewer than `count` are available.
std::vector<std::size_t> sample_candidates(std::span<const double> weights, std::size_t count,
                                           Rng& rng);

enum class KaSelector { la_gmf, uncertainty_only, value_only };

std::string_view to_string(KaSelector s);
KaSelector parse_ka_selector(std::string_view text);

/// Picks the next KA question about `entity`, or nothing when every question
/// is asked or rejected.
///   la_gmf:           sample N_c candidates, ask the highest GMF score
///   uncertainty_only: sample N_c candidates, ask a uniformly random one
///   value_only:       ask the highest GMF score over all available questions
/// Score ties go to the lowest question index. `model` may be null only for
/// uncertainty_only.
std::optional<std::size_t> choose_ka_question(KaSelector selector, const GmfModel* model,
                                              const KnowledgeBase& kb, std::size_t entity,
                                              const std::vector<char>& asked,
                                              std::size_t num_candidates, Rng& rng);

struct KaRecord {
  std::size_t entity = 0;  // the agent's guess, not the true target
  std::size_t question = 0;
  Response response = Response::unknown;
  bool correct = false;  // whether the guess was judged right

  friend bool operator==(const KaRecord&, const KaRecord&) = default;
};

struct KaPhaseSettings {
  KaSelector selector = KaSelector::la_gmf;
  std::size_t questions = 3;    // T2
  std::size_t candidates = 32;  // N_c
};

/// Asks up to `settings.questions` KA questions about `guess`, answered by the
/// player for `target`, appending each to `history` and returning the records
/// (correct flags unset). Stops early if no question is available.
std::vector<KaRecord> ka_phase(const KaPhaseSettings& settings, const GmfModel* model,
                               const KnowledgeBase& kb, std::size_t guess, std::size_t target,
                               EpisodeHistory& history, const SimulatorWorld& world,
                               Rng& selection_rng, Rng& response_rng);

class KaBuffer {
 public:
  explicit KaBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return records_.size(); }
  bool full() const { return records_.size() >= capacity_; }
  bool empty() const { return records_.empty(); }
  const std::vector<KaRecord>& records() const { return records_; }

  // Throws CapacityError when full.
  void add(const KaRecord& record);
  std::vector<KaRecord> drain();

 private:
  std::size_t capacity_;
  std::vector<KaRecord> records_;
};

struct CommitResult {
  std::size_t committed = 0;
  std::size_t discarded_wrong_guess = 0;
  std::size_t newly_rejected = 0;
};

/// Applies the buffered records to `kb` and empties the buffer. Only records
/// with a correct guess are applied unless `commit_all`. Touched entries are
/// then checked against the rejection rule.
CommitResult commit_buffer(KaBuffer& buffer, KnowledgeBase& kb, const RejectionRule& rule = {},
                           bool commit_all = false);

}  // namespace la

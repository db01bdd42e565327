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

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "la/episode.hpp"
#include "la/nn.hpp"

namespace la {

enum class AgentType { la_dqn, la_drqn, la_lin, entropy };

std::string_view to_string(AgentType t);
AgentType parse_agent_type(std::string_view text);

// Bumped whenever the state/observation encoding changes; stored in
// checkpoints so stale policies are refused.
inline constexpr int kEncoderLayoutVersion = 1;

/// Flat fully-observable state: a 4-slot block per question holding
/// [asked, yes, no, unknown]; unasked questions are all zeros.
std::vector<double> encode_state_dqn(const EpisodeHistory& history, std::size_t num_questions);

struct NetworkConfig {
  std::vector<std::size_t> dqn_hidden = {256, 128};
  double dropout = 0.0;  // hidden-layer dropout during training, MLP agents only
  std::size_t question_dim = 30;  // N1
  std::size_t response_dim = 2;   // N2
  std::size_t recurrent_dim = 32; // N3
};

/// State-action value function over all questions, Tanh-bounded to (-1, 1).
class QNetwork {
 public:
  virtual ~QNetwork() = default;

  virtual AgentType type() const = 0;
  virtual std::size_t num_questions() const = 0;
  virtual std::vector<double> q_values(const EpisodeHistory& history) const = 0;
  using DqFn = std::function<double(double q)>;
  // Forward pass on `history`, then accumulates the parameter gradients of
  // dq * Q(history, action) with dq = dq_of_q(Q). Returns Q(history, action).
  virtual double backprop(const EpisodeHistory& history, std::size_t action,
                          const DqFn& dq_of_q) = 0;
  double backprop_action(const EpisodeHistory& history, std::size_t action, double dq) {
    return backprop(history, action, [dq](double) { return dq; });
  }
  virtual nn::ParameterList parameters() = 0;
  virtual std::unique_ptr<QNetwork> clone() const = 0;

  nn::ConstParameterList parameters() const;
  // Copies parameter values from another network of the same architecture.
  void copy_parameters_from(const QNetwork& other);
  nn::Checkpoint checkpoint() const;

 protected:
  virtual void describe(nn::Checkpoint& ckpt) const = 0;
};

/// MLP over encode_state_dqn. With no hidden layers this is LA-LIN, a single
/// affine map 4N -> N under Tanh.
class DqnNetwork : public QNetwork {
 public:
  DqnNetwork(std::size_t num_questions, const std::vector<std::size_t>& hidden, Rng& rng,
             double dropout = 0.0);

  AgentType type() const override;
  std::size_t num_questions() const override { return num_questions_; }
  std::vector<double> q_values(const EpisodeHistory& history) const override;
  double backprop(const EpisodeHistory& history, std::size_t action, const DqFn& dq_of_q) override;
  nn::ParameterList parameters() override { return mlp_.parameters(); }
  std::unique_ptr<QNetwork> clone() const override;

  nn::Mlp& mlp() { return mlp_; }
  void set_dropout_seed(std::uint64_t seed) { dropout_rng_ = Rng(seed); }

 protected:
  void describe(nn::Checkpoint& ckpt) const override;

 private:
  std::size_t num_questions_;
  std::vector<std::size_t> hidden_;
  nn::Mlp mlp_;
  double dropout_;
  Rng dropout_rng_{0};
};

/// Question and response embeddings feed an LSTM whose state drives a Tanh
/// head over all questions. The observation for step t is the embedded
/// previous (question, response) pair; the first step sees zeros.
class DrqnNetwork : public QNetwork {
 public:
  DrqnNetwork(std::size_t num_questions, std::size_t question_dim, std::size_t response_dim,
              std::size_t recurrent_dim, Rng& rng);

  AgentType type() const override { return AgentType::la_drqn; }
  std::size_t num_questions() const override { return question_embedding_.rows(); }
  std::vector<double> q_values(const EpisodeHistory& history) const override;
  double backprop(const EpisodeHistory& history, std::size_t action, const DqFn& dq_of_q) override;
  nn::ParameterList parameters() override;
  std::unique_ptr<QNetwork> clone() const override;

  std::size_t observation_size() const {
    return question_embedding_.dim() + response_embedding_.dim();
  }
  // [W1(question) | W2(response)], or zeros when there is no previous turn.
  std::vector<double> observation(const std::optional<Turn>& previous) const;
  // LSTM hidden state after consuming the whole history.
  std::vector<double> recurrent_state(const EpisodeHistory& history) const;

  nn::EmbeddingTable& question_embedding() { return question_embedding_; }
  nn::EmbeddingTable& response_embedding() { return response_embedding_; }
  nn::LstmCell& cell() { return cell_; }
  nn::DenseLayer& head() { return head_; }

 protected:
  void describe(nn::Checkpoint& ckpt) const override;

 private:
  std::vector<std::vector<double>> observations(const EpisodeHistory& history) const;

  nn::EmbeddingTable question_embedding_;
  nn::EmbeddingTable response_embedding_;
  nn::LstmCell cell_;
  nn::DenseLayer head_;
};

std::unique_ptr<QNetwork> make_q_network(AgentType type, std::size_t num_questions,
                                         const NetworkConfig& config, Rng& rng);

// Rebuilds a network from checkpoint metadata and restores its weights.
std::unique_ptr<QNetwork> load_q_network(const nn::Checkpoint& ckpt);

}  // namespace la

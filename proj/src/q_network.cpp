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

#include "la/q_network.hpp"

#include <sstream>
#include <string>

#include "la/error.hpp"

namespace la {

namespace {

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(sizes[i]);
  }
  return s;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(std::stoul(item));
  return out;
}

const std::string& meta_field(const nn::Checkpoint& ckpt, const std::string& key) {
  auto it = ckpt.meta.find(key);
  if (it == ckpt.meta.end()) throw ParseError("policy checkpoint lacks '" + key + "' metadata");
  return it->second;
}

}  // namespace

std::string_view to_string(AgentType t) {
  switch (t) {
    case AgentType::la_dqn:
      return "la-dqn";
    case AgentType::la_drqn:
      return "la-drqn";
    case AgentType::la_lin:
      return "la-lin";
    case AgentType::entropy:
      return "entropy";
  }
  return "unknown";
}

AgentType parse_agent_type(std::string_view text) {
  if (text == "la-dqn") return AgentType::la_dqn;
  if (text == "la-drqn") return AgentType::la_drqn;
  if (text == "la-lin") return AgentType::la_lin;
  if (text == "entropy") return AgentType::entropy;
  throw InvalidArgument("unknown agent type '" + std::string(text) +
                        "' (expected la-dqn, la-drqn, la-lin or entropy)");
}

std::vector<double> encode_state_dqn(const EpisodeHistory& history, std::size_t num_questions) {
  std::vector<double> state(4 * num_questions, 0.0);
  for (const auto& turn : history.turns()) {
    if (turn.question >= num_questions) throw InvalidArgument("question index out of range");
    state[4 * turn.question] = 1.0;
    state[4 * turn.question + 1 + code(turn.response)] = 1.0;
  }
  return state;
}

nn::ConstParameterList QNetwork::parameters() const {
  auto mutable_params = const_cast<QNetwork*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

void QNetwork::copy_parameters_from(const QNetwork& other) {
  auto dst = parameters();
  auto src = other.parameters();
  if (dst.size() != src.size()) throw StructuralError("networks have different architectures");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->value.shape() != src[i]->value.shape())
      throw StructuralError("parameter '" + dst[i]->name + "' has a different shape");
    dst[i]->value = src[i]->value;
  }
}

nn::Checkpoint QNetwork::checkpoint() const {
  nn::Checkpoint ckpt = nn::capture(parameters());
  ckpt.meta["agent"] = std::string(to_string(type()));
  ckpt.meta["questions"] = std::to_string(num_questions());
  ckpt.meta["encoder_layout"] = std::to_string(kEncoderLayoutVersion);
  describe(ckpt);
  return ckpt;
}

// --- DqnNetwork -------------------------------------------------------------------

DqnNetwork::DqnNetwork(std::size_t num_questions, const std::vector<std::size_t>& hidden, Rng& rng,
                       double dropout)
    : num_questions_(num_questions),
      hidden_(hidden),
      mlp_(hidden.empty() ? "lin" : "dqn", 4 * num_questions, hidden, num_questions,
           nn::Activation::relu, nn::Activation::tanh, rng),
      dropout_(dropout) {
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
}

AgentType DqnNetwork::type() const {
  return hidden_.empty() ? AgentType::la_lin : AgentType::la_dqn;
}

std::vector<double> DqnNetwork::q_values(const EpisodeHistory& history) const {
  return mlp_.forward(encode_state_dqn(history, num_questions_));
}

double DqnNetwork::backprop(const EpisodeHistory& history, std::size_t action,
                            const DqFn& dq_of_q) {
  if (action >= num_questions_) throw InvalidArgument("action out of range");
  const auto state = encode_state_dqn(history, num_questions_);
  const auto trace = mlp_.forward_trace(state, dropout_, dropout_ > 0.0 ? &dropout_rng_ : nullptr);
  const double q = trace.result()[action];
  std::vector<double> dy(num_questions_, 0.0);
  dy[action] = dq_of_q(q);
  mlp_.backward(trace, dy);
  return q;
}

std::unique_ptr<QNetwork> DqnNetwork::clone() const { return std::make_unique<DqnNetwork>(*this); }

void DqnNetwork::describe(nn::Checkpoint& ckpt) const {
  ckpt.meta["hidden"] = join_sizes(hidden_);
}

// --- DrqnNetwork ------------------------------------------------------------------

DrqnNetwork::DrqnNetwork(std::size_t num_questions, std::size_t question_dim,
                         std::size_t response_dim, std::size_t recurrent_dim, Rng& rng)
    : question_embedding_("drqn.question_embedding", num_questions, question_dim, rng),
      response_embedding_("drqn.response_embedding", 3, response_dim, rng),
      cell_("drqn.lstm", question_dim + response_dim, recurrent_dim, rng),
      head_("drqn.head", recurrent_dim, num_questions, nn::Activation::tanh, rng) {}

std::vector<double> DrqnNetwork::observation(const std::optional<Turn>& previous) const {
  std::vector<double> o(observation_size(), 0.0);
  if (!previous) return o;
  auto q = question_embedding_.lookup(previous->question);
  auto r = response_embedding_.lookup(code(previous->response));
  std::copy(q.begin(), q.end(), o.begin());
  std::copy(r.begin(), r.end(), o.begin() + static_cast<std::ptrdiff_t>(q.size()));
  return o;
}

std::vector<std::vector<double>> DrqnNetwork::observations(const EpisodeHistory& history) const {
  std::vector<std::vector<double>> obs;
  obs.reserve(history.size() + 1);
  obs.push_back(observation(std::nullopt));
  for (const auto& turn : history.turns()) obs.push_back(observation(turn));
  return obs;
}

std::vector<double> DrqnNetwork::recurrent_state(const EpisodeHistory& history) const {
  return cell_.unroll(observations(history)).back().h;
}

std::vector<double> DrqnNetwork::q_values(const EpisodeHistory& history) const {
  return head_.forward(recurrent_state(history));
}

double DrqnNetwork::backprop(const EpisodeHistory& history, std::size_t action,
                             const DqFn& dq_of_q) {
  if (action >= num_questions()) throw InvalidArgument("action out of range");
  const auto caches = cell_.unroll(observations(history));
  const auto& state = caches.back().h;
  const auto q = head_.forward(state);

  std::vector<double> dy(q.size(), 0.0);
  dy[action] = dq_of_q(q[action]);
  std::vector<double> dstate(state.size());
  head_.backward(state, q, dy, dstate);

  std::vector<std::vector<double>> dh(caches.size(), std::vector<double>(state.size(), 0.0));
  dh.back() = std::move(dstate);
  const auto dxs = cell_.backward_through_time(caches, dh);

  // Step 0 consumed the all-zero observation; step t + 1 embeds turn t.
  const std::size_t qd = question_embedding_.dim();
  for (std::size_t t = 0; t < history.size(); ++t) {
    std::span<const double> dx = dxs[t + 1];
    question_embedding_.accumulate_grad(history[t].question, dx.subspan(0, qd));
    response_embedding_.accumulate_grad(code(history[t].response), dx.subspan(qd));
  }
  return q[action];
}

nn::ParameterList DrqnNetwork::parameters() {
  return {&question_embedding_.table(), &response_embedding_.table(), &cell_.weight(),
          &cell_.bias(), &head_.weight(), &head_.bias()};
}

std::unique_ptr<QNetwork> DrqnNetwork::clone() const { return std::make_unique<DrqnNetwork>(*this); }

void DrqnNetwork::describe(nn::Checkpoint& ckpt) const {
  ckpt.meta["question_dim"] = std::to_string(question_embedding_.dim());
  ckpt.meta["response_dim"] = std::to_string(response_embedding_.dim());
  ckpt.meta["recurrent_dim"] = std::to_string(cell_.hidden_size());
}

// --- factories ------------------------------------------------------------------------

std::unique_ptr<QNetwork> make_q_network(AgentType type, std::size_t num_questions,
                                         const NetworkConfig& config, Rng& rng) {
  if (num_questions == 0) throw InvalidArgument("network needs at least one question");
  switch (type) {
    case AgentType::la_dqn:
      if (config.dqn_hidden.empty()) throw InvalidArgument("la-dqn needs hidden layers");
      return std::make_unique<DqnNetwork>(num_questions, config.dqn_hidden, rng, config.dropout);
    case AgentType::la_lin:
      return std::make_unique<DqnNetwork>(num_questions, std::vector<std::size_t>{}, rng);
    case AgentType::la_drqn:
      return std::make_unique<DrqnNetwork>(num_questions, config.question_dim,
                                           config.response_dim, config.recurrent_dim, rng);
    case AgentType::entropy:
      break;
  }
  throw InvalidArgument("the entropy agent has no Q-network");
}

std::unique_ptr<QNetwork> load_q_network(const nn::Checkpoint& ckpt) {
  const AgentType type = parse_agent_type(meta_field(ckpt, "agent"));
  if (std::stoi(meta_field(ckpt, "encoder_layout")) != kEncoderLayoutVersion)
    throw ParseError("policy checkpoint uses an incompatible encoder layout");
  const std::size_t questions = std::stoul(meta_field(ckpt, "questions"));
  NetworkConfig config;
  if (type == AgentType::la_dqn || type == AgentType::la_lin) {
    config.dqn_hidden = parse_sizes(meta_field(ckpt, "hidden"));
  } else if (type == AgentType::la_drqn) {
    config.question_dim = std::stoul(meta_field(ckpt, "question_dim"));
    config.response_dim = std::stoul(meta_field(ckpt, "response_dim"));
    config.recurrent_dim = std::stoul(meta_field(ckpt, "recurrent_dim"));
  }
  Rng unused(0);
  auto net = make_q_network(type, questions, config, unused);
  nn::restore(ckpt, net->parameters());
  return net;
}

}  // namespace la

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

#include "la/game_service.hpp"

#include <chrono>
#include <cstdio>

#include "httplib.h"
#include "json.hpp"
#include "la/error.hpp"
#include "la/guesser.hpp"
#include "la/is_agents.hpp"

namespace la {

using nlohmann::json;

std::string_view to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::asking_is:
      return "asking-is";
    case SessionPhase::asking_ka:
      return "asking-ka";
    case SessionPhase::awaiting_judgment:
      return "awaiting-judgment";
    case SessionPhase::closed:
      return "closed";
  }
  return "unknown";
}

ServiceOptions ServiceOptions::from_config(const ExperimentConfig& c) {
  ServiceOptions o;
  o.is_questions = c.is_questions;
  o.ka_questions = c.ka_questions();
  o.capacity = c.service_capacity;
  o.timeout_seconds = c.service_timeout_seconds;
  o.selector = c.selector;
  o.candidates = c.candidates;
  o.buffer_size = c.buffer_size;
  o.rejection = c.rejection;
  o.commit_all = c.commit_all;
  o.gmf = c.gmf;
  o.entropy_threshold = c.entropy_threshold;
  o.entropy_bins = c.entropy_bins;
  o.seed = c.service_seed;
  o.kb_save_path = c.service_kb_save;
  return o;
}

struct GameService::Session {
  std::mutex mu;
  std::string id;
  // Read without `mu` by the session store (capacity and expiry).
  std::atomic<SessionPhase> phase{SessionPhase::asking_is};
  std::atomic<double> last_active{0.0};

  EpisodeHistory history;
  std::optional<std::size_t> pending;
  std::optional<std::size_t> guess;
  std::vector<KaRecord> records;
  std::unique_ptr<IsPolicy> policy;
  Rng rng{0};
};

struct GameService::Server {
  httplib::Server http;
};

GameService::GameService(std::shared_ptr<KnowledgeBase> kb, std::shared_ptr<const QNetwork> policy,
                         ServiceOptions options, Clock clock)
    : options_(std::move(options)),
      clock_(std::move(clock)),
      policy_(std::move(policy)),
      kb_(std::move(kb)),
      buffer_(options_.buffer_size) {
  if (!kb_) throw InvalidArgument("service needs a knowledge base");
  const std::size_t total = options_.is_questions + options_.ka_questions;
  if (options_.is_questions == 0 || total > kb_->num_questions())
    throw InvalidArgument("service needs 1 <= T1 and T1 + T2 <= number of questions");
  if (options_.capacity == 0) throw InvalidArgument("service capacity must be positive");
  if (policy_ && policy_->num_questions() != kb_->num_questions())
    throw StructuralError("policy and knowledge base disagree on the number of questions");
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }
  for (std::size_t n = 0; n < kb_->num_questions(); ++n)
    question_views_.push_back({n, kb_->questions()[n].id, kb_->questions()[n].text});
  for (std::size_t m = 0; m < kb_->num_entities(); ++m)
    entity_views_.push_back({m, kb_->entities()[m].id, kb_->entities()[m].name});
  refit_model();
}

GameService::~GameService() { stop(); }

void GameService::refit_model() {
  if (options_.selector == KaSelector::uncertainty_only) return;
  GmfConfig gc = options_.gmf;
  gc.seed = Rng::derive(options_.gmf.seed, fits_++).next();
  try {
    model_ = std::make_shared<const GmfModel>(gmf_train(indicator_matrix(*kb_), gc).model);
  } catch (const InvalidArgument&) {
    model_.reset();  // nothing known yet; KA falls back to uncertainty sampling
  }
}

void GameService::touch(Session& s) { s.last_active.store(clock_()); }

std::shared_ptr<GameService::Session> GameService::find(const std::string& session_id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFound("no session '" + session_id + "'");
  return it->second;
}

SessionView GameService::view(const Session& s) const {
  SessionView v;
  v.session_id = s.id;
  v.phase = s.phase.load();
  v.total = options_.is_questions + options_.ka_questions;
  for (const auto& turn : s.history.turns())
    v.transcript.push_back({question_views_[turn.question], turn.response});
  if (s.pending) v.question = question_views_[*s.pending];
  v.asked = s.history.size() + (s.pending ? 1 : 0);
  if (s.guess && v.phase != SessionPhase::asking_ka && v.phase != SessionPhase::asking_is)
    v.guess = entity_views_[*s.guess];
  return v;
}

SessionView GameService::create_session() {
  expire_sessions();
  const std::uint64_t serial = created_.fetch_add(1);
  auto s = std::make_shared<Session>();
  char id[17];
  std::snprintf(id, sizeof id, "%016llx",
                static_cast<unsigned long long>(Rng::derive(options_.seed, serial).next()));
  s->id = id;
  s->rng = Rng::derive(options_.seed, serial, 1);
  s->history = EpisodeHistory(kb_->num_questions());
  {
    std::shared_lock kb_lock(kb_mutex_);
    if (policy_)
      s->policy = std::make_unique<QPolicy>(*policy_);
    else
      s->policy =
          std::make_unique<EntropyAgent>(*kb_, options_.entropy_threshold, options_.entropy_bins);
  }
  s->policy->begin_episode();
  s->pending = s->policy->choose(s->history, 0.0, s->rng);
  touch(*s);

  std::lock_guard lock(sessions_mutex_);
  std::size_t open = 0;
  for (const auto& [_, other] : sessions_)
    if (other->phase.load() != SessionPhase::closed) ++open;
  if (open >= options_.capacity)
    throw CapacityError("service is at its session capacity (" + std::to_string(options_.capacity) +
                        "); retry later");
  if (!sessions_.emplace(s->id, s).second) throw StateError("session id collision");
  return view(*s);
}

std::optional<std::size_t> GameService::next_ka_question(Session& s) {
  std::shared_lock kb_lock(kb_mutex_);
  const KaSelector selector = model_ ? options_.selector : KaSelector::uncertainty_only;
  return choose_ka_question(selector, model_.get(), *kb_, *s.guess, s.history.asked_mask(),
                            options_.candidates, s.rng);
}

SessionView GameService::submit_answer(const std::string& session_id, Response response) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  const SessionPhase phase = s->phase.load();
  if (phase != SessionPhase::asking_is && phase != SessionPhase::asking_ka)
    throw StateError("session '" + session_id + "' is " + std::string(to_string(phase)) +
                     " and takes no answers");
  const std::size_t q = *s->pending;
  s->history.add(q, response);
  s->pending.reset();
  touch(*s);

  if (phase == SessionPhase::asking_is) {
    s->policy->observe(q, response);
    if (s->history.size() < options_.is_questions) {
      s->pending = s->policy->choose(s->history, 0.0, s->rng);
      return view(*s);
    }
    if (auto own = s->policy->own_guess()) {
      s->guess = *own;
    } else {
      std::shared_lock kb_lock(kb_mutex_);
      s->guess = posterior(s->history, *kb_).guess;
    }
    s->phase = SessionPhase::asking_ka;
  } else {
    s->records.push_back({*s->guess, q, response, false});
  }

  if (s->records.size() < options_.ka_questions) s->pending = next_ka_question(*s);
  if (!s->pending) s->phase = SessionPhase::awaiting_judgment;
  return view(*s);
}

bool GameService::add_records(const std::vector<KaRecord>& records) {
  std::lock_guard lock(buffer_mutex_);
  bool committed = false;
  for (const auto& r : records) {
    if (buffer_.full()) {
      commit_locked();
      committed = true;
    }
    buffer_.add(r);
  }
  if (buffer_.full()) {
    commit_locked();
    committed = true;
  }
  return committed;
}

void GameService::commit_locked() {
  std::unique_lock kb_lock(kb_mutex_);
  commit_buffer(buffer_, *kb_, options_.rejection, options_.commit_all);
  refit_model();
  if (!options_.kb_save_path.empty()) save_kb(*kb_, options_.kb_save_path);
  ++commits_;
}

JudgmentSummary GameService::submit_judgment(const std::string& session_id, bool correct) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  const SessionPhase phase = s->phase.load();
  if (phase != SessionPhase::awaiting_judgment)
    throw StateError("session '" + session_id + "' is " + std::string(to_string(phase)) +
                     " and cannot be judged");
  for (auto& r : s->records) r.correct = correct;
  JudgmentSummary out;
  out.questions_asked = s->history.size();
  out.ka_collected = s->records.size();
  out.correct = correct;
  out.buffer_committed = add_records(s->records);
  s->phase = SessionPhase::closed;
  touch(*s);
  return out;
}

SessionView GameService::session(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return view(*s);
}

std::size_t GameService::expire_sessions() { return expire_sessions(clock_()); }

std::size_t GameService::expire_sessions(double now) {
  std::lock_guard lock(sessions_mutex_);
  std::size_t closed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_active.load() > options_.timeout_seconds) {
      it->second->phase = SessionPhase::closed;
      it = sessions_.erase(it);
      ++closed;
    } else {
      ++it;
    }
  }
  return closed;
}

std::size_t GameService::open_sessions() const {
  std::lock_guard lock(sessions_mutex_);
  std::size_t open = 0;
  for (const auto& [_, s] : sessions_)
    if (s->phase.load() != SessionPhase::closed) ++open;
  return open;
}

std::size_t GameService::buffered_records() const {
  std::lock_guard lock(buffer_mutex_);
  return buffer_.size();
}

KnowledgeBase GameService::kb_snapshot() const {
  std::shared_lock lock(kb_mutex_);
  return *kb_;
}

// --- JSON API ---------------------------------------------------------------------------------

namespace {

json question_json(const QuestionView& q) { return {{"id", q.id}, {"text", q.text}}; }

json guess_json(const GuessView& g) { return {{"entity_id", g.entity_id}, {"name", g.name}}; }

json view_json(const SessionView& v) {
  json j = {{"session_id", v.session_id},
            {"phase", std::string(to_string(v.phase))},
            {"asked", v.asked},
            {"total", v.total}};
  json transcript = json::array();
  for (const auto& t : v.transcript)
    transcript.push_back(
        {{"question", question_json(t.question)}, {"response", std::string(to_string(t.response))}});
  j["transcript"] = transcript;
  if (v.question) j["question"] = question_json(*v.question);
  if (v.guess) j["guess"] = guess_json(*v.guess);
  return j;
}

HttpReply error_reply(int status, const std::string& code, const std::string& message) {
  return {status, json{{"error", {{"code", code}, {"message", message}}}}.dump()};
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    const auto slash = path.find('/');
    const auto part = path.substr(0, slash);
    if (!part.empty()) parts.push_back(part);
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return parts;
}

json parse_body(std::string_view body) {
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw InvalidArgument("request body must be a JSON object");
  return j;
}

}  // namespace

HttpReply GameService::handle(std::string_view method, std::string_view path,
                              std::string_view body) {
  try {
    const auto parts = split_path(path);
    if (parts.size() < 3 || parts[0] != "api" || parts[1] != "v1")
      return error_reply(404, "not_found", "no route for " + std::string(path));
    const auto wrong_method = [&] {
      return error_reply(405, "method_not_allowed",
                         std::string(method) + " is not allowed on " + std::string(path));
    };

    if (parts.size() == 3 && parts[2] == "health") {
      if (method != "GET") return wrong_method();
      return {200, json{{"status", "ok"},
                        {"kb_entities", kb_->num_entities()},
                        {"kb_questions", kb_->num_questions()}}
                       .dump()};
    }
    if (parts[2] != "sessions") return error_reply(404, "not_found", "no route for " + std::string(path));

    if (parts.size() == 3) {
      if (method != "POST") return wrong_method();
      const SessionView v = create_session();
      json j = {{"session_id", v.session_id}, {"question", question_json(*v.question)},
                {"asked", v.asked},           {"total", v.total},
                {"phase", std::string(to_string(v.phase))}};
      return {201, j.dump()};
    }

    expire_sessions();
    const std::string id(parts[3]);
    if (parts.size() == 4) {
      if (method != "GET") return wrong_method();
      return {200, view_json(session(id)).dump()};
    }
    if (parts.size() == 5 && parts[4] == "answer") {
      if (method != "POST") return wrong_method();
      const json req = parse_body(body);
      if (!req.contains("response") || !req["response"].is_string())
        throw InvalidArgument("body needs a string field 'response'");
      const auto response = parse_response(req["response"].get<std::string>());
      if (!response) throw InvalidArgument("response must be one of yes, no, unknown");
      const SessionView v = submit_answer(id, *response);
      json j = {{"phase", std::string(to_string(v.phase))}, {"asked", v.asked}, {"total", v.total}};
      if (v.question) j["question"] = question_json(*v.question);
      if (v.guess) j["guess"] = guess_json(*v.guess);
      return {200, j.dump()};
    }
    if (parts.size() == 5 && parts[4] == "judgment") {
      if (method != "POST") return wrong_method();
      const json req = parse_body(body);
      if (!req.contains("correct") || !req["correct"].is_boolean())
        throw InvalidArgument("body needs a boolean field 'correct'");
      const JudgmentSummary s = submit_judgment(id, req["correct"].get<bool>());
      json j = {{"summary",
                 {{"questions_asked", s.questions_asked},
                  {"ka_collected", s.ka_collected},
                  {"correct", s.correct},
                  {"buffer_committed", s.buffer_committed}}}};
      return {200, j.dump()};
    }
    return error_reply(404, "not_found", "no route for " + std::string(path));
  } catch (const NotFound& e) {
    return error_reply(404, "session_not_found", e.what());
  } catch (const StateError& e) {
    return error_reply(409, "wrong_phase", e.what());
  } catch (const CapacityError& e) {
    return error_reply(503, "at_capacity", e.what());
  } catch (const InvalidArgument& e) {
    return error_reply(422, "invalid_request", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

// --- HTTP transport -------------------------------------------------------------------------

int GameService::bind(const std::string& host, int port) {
  if (server_) throw StateError("service is already bound");
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                            {"Access-Control-Allow-Headers", "Content-Type"},
                            {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpReply reply = handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  http.Get(".*", dispatch);
  http.Post(".*", dispatch);
  http.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  if (port == 0) return http.bind_to_any_port(host);
  return http.bind_to_port(host, port) ? port : -1;
}

bool GameService::serve() {
  if (!server_) throw StateError("service is not bound");
  return server_->http.listen_after_bind();
}

bool GameService::listen(const std::string& host, int port) {
  if (bind(host, port) < 0) return false;
  return serve();
}

void GameService::stop() {
  if (server_) server_->http.stop();
}

}  // namespace la

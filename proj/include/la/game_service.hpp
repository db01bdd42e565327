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

// Live play: sessions in which a human answers IS and KA questions, judges
// the guess, and confirmed answers flow into the shared knowledge buffer.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "la/config.hpp"
#include "la/ka_gmf.hpp"
#include "la/kb.hpp"
#include "la/q_network.hpp"

namespace la {

enum class SessionPhase { asking_is, asking_ka, awaiting_judgment, closed };

std::string_view to_string(SessionPhase p);

struct ServiceOptions {
  std::size_t is_questions = 17;  // T1
  std::size_t ka_questions = 3;   // T2
  std::size_t capacity = 256;     // open sessions
  double timeout_seconds = 600.0;
  KaSelector selector = KaSelector::la_gmf;
  std::size_t candidates = 32;
  std::size_t buffer_size = 300;
  RejectionRule rejection;
  bool commit_all = false;
  GmfConfig gmf;
  double entropy_threshold = EntropyAgent::kDefaultThreshold;
  std::size_t entropy_bins = EntropyAgent::kDefaultBins;
  std::uint64_t seed = 17;
  std::string kb_save_path;  // KB written here after every commit when set

  static ServiceOptions from_config(const ExperimentConfig& config);
};

struct QuestionView {
  std::size_t index = 0;
  std::string id;
  std::string text;
};

struct GuessView {
  std::size_t index = 0;
  std::string entity_id;
  std::string name;
};

struct TranscriptEntry {
  QuestionView question;
  Response response = Response::unknown;
};

struct SessionView {
  std::string session_id;
  SessionPhase phase = SessionPhase::asking_is;
  std::size_t asked = 0;  // questions issued so far, including a pending one
  std::size_t total = 0;
  std::vector<TranscriptEntry> transcript;
  std::optional<QuestionView> question;  // awaiting an answer
  std::optional<GuessView> guess;        // announced once every question is answered
};

struct JudgmentSummary {
  std::size_t questions_asked = 0;
  std::size_t ka_collected = 0;
  bool correct = false;
  bool buffer_committed = false;
};

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

/// Session store plus the shared KB and knowledge buffer. All public
/// operations are thread-safe. A null `policy` selects the entropy agent.
class GameService {
 public:
  using Clock = std::function<double()>;  // seconds, monotone

  GameService(std::shared_ptr<KnowledgeBase> kb, std::shared_ptr<const QNetwork> policy,
              ServiceOptions options, Clock clock = {});
  ~GameService();
  GameService(const GameService&) = delete;
  GameService& operator=(const GameService&) = delete;

  SessionView create_session();
  SessionView submit_answer(const std::string& session_id, Response response);
  JudgmentSummary submit_judgment(const std::string& session_id, bool correct);
  SessionView session(const std::string& session_id) const;
  std::size_t expire_sessions();
  std::size_t expire_sessions(double now);

  std::size_t open_sessions() const;
  std::size_t buffered_records() const;
  std::size_t commits() const { return commits_.load(); }
  const ServiceOptions& options() const { return options_; }

  // Copy of the KB taken under the read lock.
  KnowledgeBase kb_snapshot() const;

  /// JSON-over-HTTP dispatch, independent of any transport.
  HttpReply handle(std::string_view method, std::string_view path, std::string_view body);

  /// HTTP transport for handle(). bind() returns the bound port (port 0
  /// picks a free one) or -1; serve() blocks until stop(). listen() is
  /// bind() followed by serve().
  int bind(const std::string& host, int port);
  bool serve();
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Session;
  struct Server;

  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::optional<std::size_t> next_ka_question(Session& s);
  SessionView view(const Session& s) const;
  void touch(Session& s);
  bool add_records(const std::vector<KaRecord>& records);
  void commit_locked();
  void refit_model();

  ServiceOptions options_;
  Clock clock_;
  std::shared_ptr<const QNetwork> policy_;

  mutable std::shared_mutex kb_mutex_;
  std::shared_ptr<KnowledgeBase> kb_;
  std::vector<QuestionView> question_views_;
  std::vector<GuessView> entity_views_;
  std::shared_ptr<const GmfModel> model_;  // guarded by kb_mutex_

  mutable std::mutex buffer_mutex_;
  KaBuffer buffer_;
  std::size_t fits_ = 0;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> created_{0};
  std::atomic<std::size_t> commits_{0};

  std::unique_ptr<Server> server_;
};

}  // namespace la

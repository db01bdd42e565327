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

#include "la/harness.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "la/error.hpp"

namespace la {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void report(const ProgressFn& progress, const std::string& message) {
  if (progress) progress(message);
}

std::string rate_text(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", rate);
  return buf;
}

std::unique_ptr<QNetwork> load_policy(const ExperimentConfig& config, std::size_t num_questions) {
  auto net = load_q_network(nn::load_checkpoint(config.policy_path));
  if (net->num_questions() != num_questions)
    throw StructuralError("policy '" + config.policy_path + "' was trained for " +
                          std::to_string(net->num_questions()) + " questions, the KB has " +
                          std::to_string(num_questions));
  return net;
}

// Trained, loaded, or null for the entropy agent.
std::unique_ptr<QNetwork> obtain_policy(const ExperimentConfig& config, const SimulatorWorld& world,
                                        const KnowledgeBase& agent_kb,
                                        std::vector<CurvePoint>* curve,
                                        const ProgressFn& progress) {
  if (config.agent == AgentType::entropy) return nullptr;
  if (!config.policy_path.empty()) {
    auto net = load_policy(config, agent_kb.num_questions());
    if (net->type() != config.agent)
      throw InvalidArgument("policy '" + config.policy_path + "' is " +
                            std::string(to_string(net->type())) + ", config asks for " +
                            std::string(to_string(config.agent)));
    return net;
  }
  return train_is_policy(config, world, agent_kb, curve, progress);
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string eval_csv(const EvalReport& eval) {
  std::ostringstream out;
  out << "episode,target,guess,win\n";
  for (const auto& r : eval.records)
    out << r.episode << ',' << r.target << ',' << r.guess << ',' << (r.win ? 1 : 0) << '\n';
  return out.str();
}

ordered_json eval_json(const EvalReport& eval) {
  return {{"winning_rate", eval.winning_rate}, {"wins", eval.wins}, {"episodes", eval.episodes}};
}

ordered_json summary_header(const std::string& kind, const ExperimentConfig& config) {
  ordered_json j;
  j["kind"] = kind;
  j["versions"] = {{"la20q", kLibraryVersion}, {"encoder_layout", kEncoderLayoutVersion},
                   {"kb_format", "la-kb v1"}, {"checkpoint_format", "la-params v1"}};
  j["seeds"] = {{"kb", config.kb_spec.seed},         {"agent", config.network_seed},
                {"train", config.train.seed},        {"world", config.world_seed},
                {"eval", config.eval_seed},          {"holdout", config.holdout_seed},
                {"ka", config.ka_seed},              {"gmf", config.gmf.seed}};
  j["config"] = ordered_json::parse(config_json(config));
  return j;
}

void write_config_echo(const ExperimentConfig& config, const fs::path& dir) {
  std::ostringstream ini;
  write_config(ini, config);
  write_text(dir / "config.ini", ini.str());
}

}  // namespace

KnowledgeBase load_experiment_kb(const ExperimentConfig& config) {
  if (!config.kb_path.empty()) return load_kb(config.kb_path);
  return generate_synthetic_kb(config.kb_spec);
}

std::unique_ptr<IsPolicy> make_policy(const ExperimentConfig& config, const KnowledgeBase& kb,
                                      const QNetwork* net) {
  if (config.agent == AgentType::entropy)
    return std::make_unique<EntropyAgent>(kb, config.entropy_threshold, config.entropy_bins);
  if (net == nullptr) throw InvalidArgument("a Q-network policy needs a network");
  return std::make_unique<QPolicy>(*net);
}

EvalReport eval_winning_rate(IsPolicy& policy, const SimulatorWorld& world,
                             const KnowledgeBase& agent_kb, std::size_t questions,
                             std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw InvalidArgument("evaluation needs at least one episode");
  EvalReport out;
  out.records.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    auto streams = EpisodeStreams::for_episode(seed, e);
    const auto r = run_is_episode(policy, world, agent_kb, questions, 0.0, streams);
    out.records.push_back({e, r.target, r.guess, r.win});
    out.wins += r.win ? 1 : 0;
  }
  out.episodes = episodes;
  out.winning_rate = static_cast<double>(out.wins) / static_cast<double>(episodes);
  return out;
}

std::unique_ptr<QNetwork> train_is_policy(const ExperimentConfig& config,
                                          const SimulatorWorld& world,
                                          const KnowledgeBase& agent_kb,
                                          std::vector<CurvePoint>* curve,
                                          const ProgressFn& progress) {
  Rng init(config.network_seed);
  auto net = make_q_network(config.agent, agent_kb.num_questions(), config.network, init);
  if (auto* dqn = dynamic_cast<DqnNetwork*>(net.get()))
    dqn->set_dropout_seed(Rng::derive(config.network_seed, 0xd0).next());
  TrainConfig tc = config.train;
  tc.questions = config.is_questions;
  QLearner learner(std::move(net), tc);
  const std::size_t every = std::max<std::size_t>(tc.log_every, 1);
  auto points = learner.train(world, agent_kb, [&](std::size_t episode, const EpisodeResult&) {
    if (episode % (every * 10) == 0)
      report(progress, std::string(to_string(config.agent)) + ": episode " +
                           std::to_string(episode) + "/" + std::to_string(tc.episodes));
  });
  if (curve) *curve = std::move(points);
  return learner.behave().clone();
}

std::unique_ptr<QNetwork> continue_is_training(const ExperimentConfig& config,
                                               const QNetwork& policy,
                                               const SimulatorWorld& world,
                                               const KnowledgeBase& agent_kb,
                                               std::size_t episodes) {
  TrainConfig tc = config.train;
  tc.questions = config.is_questions;
  tc.episodes = episodes;
  tc.epsilon = {tc.epsilon.end, tc.epsilon.end, 0};
  tc.seed = Rng::derive(config.train.seed, 0xc0).next();
  QLearner learner(policy.clone(), tc);
  learner.train(world, agent_kb);
  return learner.behave().clone();
}

IsReport run_is_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  auto truth = std::make_shared<const KnowledgeBase>(load_experiment_kb(config));
  validate(config, truth->num_questions());
  SimulatorWorld world(truth, config.world_seed);

  IsReport out;
  out.config = config;
  out.policy = obtain_policy(config, world, *truth, &out.curve, progress);
  auto policy = make_policy(config, *truth, out.policy.get());
  out.eval = eval_winning_rate(*policy, world, *truth, config.is_questions, config.eval_episodes,
                               config.eval_seed);
  report(progress, std::string(to_string(config.agent)) + " T1=" +
                       std::to_string(config.is_questions) +
                       " winning rate " + rate_text(out.eval.winning_rate));
  return out;
}

KaReport run_ka_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  return run_ka_experiment(config, nullptr, progress);
}

KaReport run_ka_experiment(const ExperimentConfig& config, const QNetwork* policy,
                           const ProgressFn& progress) {
  auto truth = std::make_shared<const KnowledgeBase>(load_experiment_kb(config));
  validate(config, truth->num_questions());
  HoldoutSplit split = make_holdout(*truth, config.holdout, config.holdout_seed);
  auto agent = std::make_shared<KnowledgeBase>(std::move(split.agent_kb));
  SimulatorWorld world(truth, config.world_seed);

  KaReport out;
  out.config = config;
  out.holdout_removed = split.removed;
  out.truth_kb = truth;
  out.initial_kb = std::make_shared<KnowledgeBase>(*agent);
  if (policy != nullptr)
    out.policy = policy->clone();
  else
    out.policy = obtain_policy(config, world, *agent, nullptr, progress);

  const auto row = [&](std::size_t cycle, const CommitResult& c) {
    return KaCycleRow{cycle,
                      agent->known_count(),
                      kb_distance(*agent, *truth),
                      c.committed,
                      c.discarded_wrong_guess,
                      agent->rejected().size()};
  };
  out.cycles.push_back(row(0, {}));

  const bool needs_model = config.selector != KaSelector::uncertainty_only;
  const auto fit = [&](std::size_t cycle) -> std::optional<GmfModel> {
    if (!needs_model) return std::nullopt;
    GmfConfig gc = config.gmf;
    gc.seed = Rng::derive(config.gmf.seed, cycle).next();
    return gmf_train(indicator_matrix(*agent), gc).model;
  };

  const KaPhaseSettings phase{config.selector, config.ka_questions(), config.candidates};
  KaBuffer buffer(config.buffer_size);
  std::vector<KaRecord> carry;
  std::uint64_t episode = 0;

  for (std::size_t cycle = 1; cycle <= config.cycles; ++cycle) {
    const auto model = fit(cycle - 1);
    auto is_policy = make_policy(config, *agent, out.policy.get());
    for (const auto& r : carry) buffer.add(r);
    carry.clear();

    for (std::size_t n = 0; n < config.buffer_size && !buffer.full(); ++n) {
      auto streams = EpisodeStreams::for_episode(config.ka_seed, episode++);
      auto result = run_is_episode(*is_policy, world, *agent, config.is_questions, 0.0, streams);
      auto records = ka_phase(phase, model ? &*model : nullptr, *agent, result.guess,
                              result.target, result.history, world, streams.policy,
                              streams.response);
      for (auto& r : records) {
        r.correct = result.win;
        if (buffer.full())
          carry.push_back(r);
        else
          buffer.add(r);
      }
    }
    const CommitResult committed =
        commit_buffer(buffer, *agent, config.rejection, config.commit_all);
    out.cycles.push_back(row(cycle, committed));
    report(progress, std::string(to_string(config.selector)) + " cycle " + std::to_string(cycle) +
                         ": size " + std::to_string(out.cycles.back().kb_size) + ", distance " +
                         rate_text(out.cycles.back().kb_distance));
  }
  out.final_kb = agent;

  if (config.continue_episodes > 0 && out.policy) {
    for (const auto& [name, kb] : {std::pair{"no-ka", out.initial_kb}, std::pair{"with-ka", agent}}) {
      auto net = continue_is_training(config, *out.policy, world, *kb, config.continue_episodes);
      auto p = make_policy(config, *kb, net.get());
      out.boost.push_back({name, eval_winning_rate(*p, world, *kb, config.is_questions,
                                                   config.eval_episodes, config.eval_seed)});
      report(progress, std::string("IS continuation ") + name + ": winning rate " +
                           rate_text(out.boost.back().eval.winning_rate));
    }
  }
  return out;
}

std::vector<SweepRow> sweep_t1(const ExperimentConfig& config, const ProgressFn& progress) {
  if (config.sweep_t1.empty()) throw InvalidArgument("sweep.t1 lists no values");
  std::vector<SweepRow> rows;
  for (std::size_t t1 : config.sweep_t1) {
    ExperimentConfig c = config;
    c.is_questions = t1;
    c.total_questions = t1;
    // Same number of question steps for every T1.
    if (t1 > 0)
      c.train.episodes = std::max<std::size_t>(
          1, (config.train.episodes * config.is_questions + t1 - 1) / t1);
    rows.push_back({t1, run_is_experiment(c, progress).eval});
  }
  return rows;
}

void prepare_output_dir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw IoError("output directory '" + dir.string() +
                    "' is not empty; pass --force to overwrite");
    return;
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string config_json(const ExperimentConfig& config) {
  ordered_json j = ordered_json::object();
  for (const auto& key : setting_keys()) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = get_setting(config, key);
  }
  return j.dump();
}

std::string export_is_report(const IsReport& report, const fs::path& dir) {
  std::ostringstream curve;
  curve << "episode,winning_rate,epsilon,loss\n";
  for (const auto& p : report.curve)
    curve << p.episode << ',' << format_double(p.winning_rate) << ',' << format_double(p.epsilon)
          << ',' << format_double(p.loss) << '\n';
  write_text(dir / "learning_curve.csv", curve.str());
  write_text(dir / "eval_episodes.csv", eval_csv(report.eval));
  write_config_echo(report.config, dir);
  if (report.policy) nn::save_checkpoint(report.policy->checkpoint(), (dir / "policy.ckpt").string());

  const std::string text = is_summary_json(report);
  write_text(dir / "summary.json", text);
  return text;
}

std::string is_summary_json(const IsReport& report) {
  ordered_json j = summary_header("is", report.config);
  j["metrics"] = eval_json(report.eval);
  if (!report.curve.empty())
    j["metrics"]["final_window_winning_rate"] = report.curve.back().winning_rate;
  return j.dump(2) + "\n";
}

std::string export_ka_report(const KaReport& report, const fs::path& dir) {
  std::ostringstream cycles;
  cycles << "cycle,kb_size,kb_distance,committed,discarded_wrong_guess,rejected_total\n";
  for (const auto& r : report.cycles)
    cycles << r.cycle << ',' << r.kb_size << ',' << format_double(r.kb_distance) << ','
           << r.committed << ',' << r.discarded_wrong_guess << ',' << r.rejected_total << '\n';
  write_text(dir / "ka_cycles.csv", cycles.str());
  if (!report.boost.empty()) {
    std::ostringstream boost;
    boost << "condition,winning_rate,wins,episodes\n";
    for (const auto& b : report.boost)
      boost << b.condition << ',' << format_double(b.eval.winning_rate) << ',' << b.eval.wins
            << ',' << b.eval.episodes << '\n';
    write_text(dir / "ka_boost.csv", boost.str());
  }
  if (report.final_kb) save_kb(*report.final_kb, (dir / "agent_kb.txt").string());
  if (report.policy) nn::save_checkpoint(report.policy->checkpoint(), (dir / "policy.ckpt").string());
  write_config_echo(report.config, dir);
  const std::string text = ka_summary_json(report);
  write_text(dir / "summary.json", text);
  return text;
}

std::string ka_summary_json(const KaReport& report) {
  ordered_json j = summary_header("ka", report.config);
  ordered_json metrics;
  metrics["holdout_removed"] = report.holdout_removed;
  if (!report.cycles.empty()) {
    metrics["initial_kb_size"] = report.cycles.front().kb_size;
    metrics["initial_kb_distance"] = report.cycles.front().kb_distance;
    metrics["final_kb_size"] = report.cycles.back().kb_size;
    metrics["final_kb_distance"] = report.cycles.back().kb_distance;
  }
  for (const auto& b : report.boost) metrics["continuation"][b.condition] = eval_json(b.eval);
  j["metrics"] = metrics;
  return j.dump(2) + "\n";
}

std::string export_sweep(const ExperimentConfig& config, const std::vector<SweepRow>& rows,
                         const fs::path& dir) {
  std::ostringstream csv;
  csv << "t1,winning_rate,wins,episodes\n";
  for (const auto& r : rows)
    csv << r.t1 << ',' << format_double(r.eval.winning_rate) << ',' << r.eval.wins << ','
        << r.eval.episodes << '\n';
  write_text(dir / "t1_sweep.csv", csv.str());
  write_config_echo(config, dir);
  const std::string text = sweep_summary_json(config, rows);
  write_text(dir / "summary.json", text);
  return text;
}

std::string sweep_summary_json(const ExperimentConfig& config, const std::vector<SweepRow>& rows) {
  ordered_json metrics = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json m = eval_json(r.eval);
    m["t1"] = r.t1;
    metrics.push_back(m);
  }
  ordered_json j = summary_header("sweep-t1", config);
  j["metrics"] = metrics;
  return j.dump(2) + "\n";
}

}  // namespace la

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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "la/config.hpp"
#include "la/error.hpp"
#include "la/harness.hpp"
#include "support.hpp"

using namespace la;
namespace fs = std::filesystem;

namespace {

// A KB and budget small enough for a unit test.
ExperimentConfig small_config() {
  ExperimentConfig c;
  c.kb_spec.entities = 20;
  c.kb_spec.questions = 16;
  c.total_questions = 8;
  c.is_questions = 6;
  c.network.dqn_hidden = {16};
  c.network.recurrent_dim = 8;
  c.network.question_dim = 6;
  c.train.episodes = 40;
  c.train.log_every = 10;
  c.train.window = 10;
  c.eval_episodes = 150;
  c.cycles = 3;
  c.buffer_size = 30;
  c.gmf.latent_dim = 6;
  c.gmf.epochs = 3;
  c.sweep_t1 = {2, 4};
  return c;
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("la20q_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("config settings and overrides") {
  ExperimentConfig c;
  apply_setting(c, "train.episodes", "1234");
  CHECK(c.train.episodes == 1234);
  apply_override(c, "agent.type = la-lin");
  CHECK(c.agent == AgentType::la_lin);
  apply_override(c, "sweep.t1=3, 6,9");
  CHECK(c.sweep_t1 == std::vector<std::size_t>{3, 6, 9});
  apply_override(c, "ka.commit_all=true");
  CHECK(c.commit_all);
  CHECK(get_setting(c, "train.episodes") == "1234");
  CHECK_THROWS_AS(apply_setting(c, "train.bogus", "1"), InvalidArgument);
  CHECK_THROWS_AS(apply_setting(c, "train.episodes", "many"), InvalidArgument);
  CHECK_THROWS_AS(apply_setting(c, "train.episodes", "-5"), InvalidArgument);
  CHECK_THROWS_AS(apply_setting(c, "agent.type", "oracle"), InvalidArgument);
  CHECK_THROWS_AS(apply_override(c, "no equals sign"), InvalidArgument);
  for (const auto& key : setting_keys()) CHECK_NOTHROW(get_setting(c, key));
}

TEST_CASE("config files") {
  std::istringstream ini(
      "; desk run\n[game]\nquestions = 20\nis_questions = 17\n\n[ka]\nselector = value-only\n"
      "[train]\nlearning_rate = 1e-3\n");
  ExperimentConfig c;
  load_config(c, ini);
  CHECK(c.is_questions == 17);
  CHECK(c.ka_questions() == 3);
  CHECK(c.selector == KaSelector::value_only);
  CHECK(c.train.learning_rate == 1e-3);

  std::ostringstream out;
  write_config(out, c);
  std::istringstream back(out.str());
  ExperimentConfig d;
  load_config(d, back);
  for (const auto& key : setting_keys()) CHECK(get_setting(d, key) == get_setting(c, key));

  std::istringstream bad("[game]\nquestions = twenty\n");
  CHECK_THROWS_AS(load_config(c, bad), ParseError);
  std::istringstream broken("[game\nquestions = 3\n");
  CHECK_THROWS_AS(load_config(c, broken), ParseError);
  CHECK_THROWS_AS(load_config_file(c, "/nonexistent/la.ini"), IoError);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(validate(c, 80));
  c.is_questions = 21;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = {};
  c.total_questions = 90;
  c.is_questions = 90;
  CHECK_THROWS_AS(validate(c, 80), InvalidArgument);
}

TEST_CASE("evaluation basics") {
  auto lonely = std::make_shared<const KnowledgeBase>(la::testing::blank_kb(1, 5));
  SimulatorWorld one(lonely, 1);
  EntropyAgent agent(*lonely);
  CHECK(eval_winning_rate(agent, one, *lonely, 3, 50, 1).winning_rate == 1.0);

  // Nothing known and flat popularity: every guess is a 1-in-100 shot.
  auto blank = std::make_shared<const KnowledgeBase>(la::testing::blank_kb(100, 30));
  SimulatorWorld world(blank, 2);
  struct Uniform : IsPolicy {
    std::size_t choose(const EpisodeHistory& h, double, Rng& rng) override {
      return select_action(std::vector<double>(h.num_questions(), 0.0), h.asked_mask(), 1.0, rng);
    }
  } uniform;
  EvalReport chance = eval_winning_rate(uniform, world, *blank, 20, 10000, 3);
  CHECK(std::abs(chance.winning_rate - 0.01) < 0.01);

  KnowledgeBase desk = generate_synthetic_kb({});
  SimulatorWorld desk_world(std::make_shared<const KnowledgeBase>(desk), 4);
  EntropyAgent e1(desk), e2(desk);
  EvalReport a = eval_winning_rate(e1, desk_world, desk, 20, 300, 5);
  EvalReport b = eval_winning_rate(e2, desk_world, desk, 20, 300, 5);
  CHECK(a.winning_rate == b.winning_rate);
  std::size_t wins = 0;
  for (const auto& r : a.records) wins += r.win;
  CHECK(wins == a.wins);
  CHECK(a.winning_rate == static_cast<double>(a.wins) / a.episodes);
  CHECK(a.records.size() == 300);
}

TEST_CASE("entropy experiments skip training") {
  ExperimentConfig c = small_config();
  c.agent = AgentType::entropy;
  IsReport r = run_is_experiment(c);
  CHECK(r.curve.empty());
  CHECK(r.policy == nullptr);
  CHECK(r.eval.episodes == c.eval_episodes);
}

TEST_CASE("is experiment export") {
  ExperimentConfig c = small_config();
  IsReport r = run_is_experiment(c);
  CHECK(r.curve.size() == 4);
  fs::path dir = scratch_dir("is");
  prepare_output_dir(dir, false);
  const std::string summary = export_is_report(r, dir);
  CHECK(line_count(dir / "eval_episodes.csv") == c.eval_episodes + 1);
  CHECK(line_count(dir / "learning_curve.csv") == r.curve.size() + 1);
  CHECK(fs::exists(dir / "policy.ckpt"));

  auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(j.dump() == nlohmann::json::parse(summary).dump());
  CHECK(j["kind"] == "is");
  CHECK(j["config"]["train"]["episodes"] == "40");
  CHECK(j["config"]["agent"]["type"] == "la-drqn");
  CHECK(j["metrics"]["episodes"] == c.eval_episodes);

  // The saved policy evaluates to the same rate.
  ExperimentConfig reload = c;
  reload.policy_path = (dir / "policy.ckpt").string();
  CHECK(run_is_experiment(reload).eval.winning_rate == r.eval.winning_rate);

  CHECK_THROWS_AS(prepare_output_dir(dir, false), IoError);
  CHECK_NOTHROW(prepare_output_dir(dir, true));
  fs::remove_all(dir);
}

TEST_CASE("experiments are reproducible byte for byte") {
  ExperimentConfig c = small_config();
  c.continue_episodes = 10;
  auto run = [&](const std::string& name) {
    fs::path dir = scratch_dir(name);
    prepare_output_dir(dir, false);
    export_is_report(run_is_experiment(c), dir / "is");
    export_ka_report(run_ka_experiment(c), dir / "ka");
    export_sweep(c, sweep_t1(c), dir / "sweep");
    return dir;
  };
  fs::path a = run("det_a"), b = run("det_b");
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path other = b / fs::relative(entry.path(), a);
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared == 5);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("t1 sweep emits one row per value") {
  ExperimentConfig c = small_config();
  c.sweep_t1 = {2, 3, 5, 6};
  c.train.episodes = 10;
  auto rows = sweep_t1(c);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rows[i].t1 == c.sweep_t1[i]);
  fs::path dir = scratch_dir("sweep");
  export_sweep(c, rows, dir);
  CHECK(line_count(dir / "t1_sweep.csv") == 5);
  fs::remove_all(dir);
}

TEST_CASE("ka experiment without ka questions leaves the KB alone") {
  ExperimentConfig c = small_config();
  c.is_questions = c.total_questions;
  KaReport r = run_ka_experiment(c);
  REQUIRE(r.cycles.size() == c.cycles + 1);
  for (const auto& row : r.cycles) {
    CHECK(row.kb_size == r.cycles.front().kb_size);
    CHECK(row.kb_distance == r.cycles.front().kb_distance);
    CHECK(row.committed == 0);
  }
}

TEST_CASE("ka experiment grows the KB and logs every cycle") {
  ExperimentConfig c = small_config();
  c.continue_episodes = 10;
  KaReport r = run_ka_experiment(c);
  REQUIRE(r.cycles.size() == c.cycles + 1);
  CHECK(r.holdout_removed > 0);
  CHECK(r.cycles.back().kb_size >= r.cycles.front().kb_size);
  for (std::size_t i = 1; i < r.cycles.size(); ++i) {
    CHECK(r.cycles[i].cycle == i);
    CHECK(r.cycles[i].kb_size >= r.cycles[i - 1].kb_size);
    CHECK(r.cycles[i].committed + r.cycles[i].discarded_wrong_guess == c.buffer_size);
  }
  REQUIRE(r.boost.size() == 2);
  CHECK(r.boost[0].condition == "no-ka");
  CHECK(r.boost[1].condition == "with-ka");

  fs::path dir = scratch_dir("ka");
  const std::string summary = export_ka_report(r, dir);
  CHECK(line_count(dir / "ka_cycles.csv") == c.cycles + 2);
  CHECK(line_count(dir / "ka_boost.csv") == 3);
  CHECK(load_kb((dir / "agent_kb.txt").string()) == *r.final_kb);
  auto j = nlohmann::json::parse(summary);
  CHECK(j["kind"] == "ka");
  CHECK(j["metrics"]["final_kb_size"] == r.cycles.back().kb_size);
  fs::remove_all(dir);
}

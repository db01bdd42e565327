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

#include "la/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "la/error.hpp"

namespace la {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw InvalidArgument("setting '" + key + "': '" + text + "' is not a valid number");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidArgument("setting '" + key + "': '" + text + "' is not a boolean");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<std::size_t>(key, item));
  }
  return out;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(values[i]);
  }
  return s;
}

struct Binding {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
};

template <typename T, typename F>
Binding number(F field) {
  return {[field](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(field(c));
            else
              return std::to_string(field(c));
          },
          [field](ExperimentConfig& c, const std::string& key, const std::string& v) {
            field(c) = parse_number<T>(key, v);
          }};
}

template <typename F>
Binding text(F field) {
  return {[field](const ExperimentConfig& c) { return field(c); },
          [field](ExperimentConfig& c, const std::string&, const std::string& v) { field(c) = v; }};
}

template <typename F>
Binding boolean(F field) {
  return {[field](const ExperimentConfig& c) {
            return std::string(field(c) ? "true" : "false");
          },
          [field](ExperimentConfig& c, const std::string& key, const std::string& v) {
            field(c) = parse_bool(key, v);
          }};
}

template <typename F>
Binding size_list(F field) {
  return {[field](const ExperimentConfig& c) { return join(field(c)); },
          [field](ExperimentConfig& c, const std::string& key, const std::string& v) {
            field(c) = parse_size_list(key, v);
          }};
}

#define LA_FIELD(expr) [](auto& c) -> auto& { return expr; }

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = {
      {"kb.path", text(LA_FIELD(c.kb_path))},
      {"kb.entities", number<std::size_t>(LA_FIELD(c.kb_spec.entities))},
      {"kb.questions", number<std::size_t>(LA_FIELD(c.kb_spec.questions))},
      {"kb.density", number<double>(LA_FIELD(c.kb_spec.density))},
      {"kb.zipf", number<double>(LA_FIELD(c.kb_spec.zipf_exponent))},
      {"kb.concentration", number<double>(LA_FIELD(c.kb_spec.concentration))},
      {"kb.seed", number<std::uint64_t>(LA_FIELD(c.kb_spec.seed))},
      {"kb.groups", number<std::size_t>(LA_FIELD(c.kb_spec.groups))},
      {"kb.group_affinity", number<double>(LA_FIELD(c.kb_spec.group_affinity))},
      {"kb.base_records", number<std::uint32_t>(LA_FIELD(c.kb_spec.base_records))},
      {"kb.record_jitter", number<std::uint32_t>(LA_FIELD(c.kb_spec.record_jitter))},

      {"game.questions", number<std::size_t>(LA_FIELD(c.total_questions))},
      {"game.is_questions", number<std::size_t>(LA_FIELD(c.is_questions))},

      {"agent.type",
       {[](const ExperimentConfig& c) { return std::string(to_string(c.agent)); },
        [](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.agent = parse_agent_type(v);
        }}},
      {"agent.hidden", size_list(LA_FIELD(c.network.dqn_hidden))},
      {"agent.dropout", number<double>(LA_FIELD(c.network.dropout))},
      {"agent.question_dim", number<std::size_t>(LA_FIELD(c.network.question_dim))},
      {"agent.response_dim", number<std::size_t>(LA_FIELD(c.network.response_dim))},
      {"agent.recurrent_dim", number<std::size_t>(LA_FIELD(c.network.recurrent_dim))},
      {"agent.seed", number<std::uint64_t>(LA_FIELD(c.network_seed))},
      {"agent.entropy_threshold", number<double>(LA_FIELD(c.entropy_threshold))},
      {"agent.entropy_bins", number<std::size_t>(LA_FIELD(c.entropy_bins))},
      {"agent.policy", text(LA_FIELD(c.policy_path))},

      {"train.episodes", number<std::size_t>(LA_FIELD(c.train.episodes))},
      {"train.learning_rate", number<double>(LA_FIELD(c.train.learning_rate))},
      {"train.gamma", number<double>(LA_FIELD(c.train.gamma))},
      {"train.epsilon_start", number<double>(LA_FIELD(c.train.epsilon.start))},
      {"train.epsilon_end", number<double>(LA_FIELD(c.train.epsilon.end))},
      {"train.epsilon_steps", number<std::uint64_t>(LA_FIELD(c.train.epsilon.steps))},
      {"train.target_update", number<std::size_t>(LA_FIELD(c.train.target_update_episodes))},
      {"train.batch_size", number<std::size_t>(LA_FIELD(c.train.batch_size))},
      {"train.replay_capacity", number<std::size_t>(LA_FIELD(c.train.replay_capacity))},
      {"train.priority_alpha", number<double>(LA_FIELD(c.train.priority_alpha))},
      {"train.updates_per_episode", number<std::size_t>(LA_FIELD(c.train.updates_per_episode))},
      {"train.learn_start", number<std::size_t>(LA_FIELD(c.train.learn_start))},
      {"train.window", number<std::size_t>(LA_FIELD(c.train.window))},
      {"train.log_every", number<std::size_t>(LA_FIELD(c.train.log_every))},
      {"train.seed", number<std::uint64_t>(LA_FIELD(c.train.seed))},

      {"world.seed", number<std::uint64_t>(LA_FIELD(c.world_seed))},
      {"eval.episodes", number<std::size_t>(LA_FIELD(c.eval_episodes))},
      {"eval.seed", number<std::uint64_t>(LA_FIELD(c.eval_seed))},

      {"ka.holdout", number<double>(LA_FIELD(c.holdout))},
      {"ka.holdout_seed", number<std::uint64_t>(LA_FIELD(c.holdout_seed))},
      {"ka.selector",
       {[](const ExperimentConfig& c) { return std::string(to_string(c.selector)); },
        [](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.selector = parse_ka_selector(v);
        }}},
      {"ka.candidates", number<std::size_t>(LA_FIELD(c.candidates))},
      {"ka.buffer_size", number<std::size_t>(LA_FIELD(c.buffer_size))},
      {"ka.cycles", number<std::size_t>(LA_FIELD(c.cycles))},
      {"ka.reject_min_responses", number<std::uint32_t>(LA_FIELD(c.rejection.min_responses))},
      {"ka.reject_unknown_fraction", number<double>(LA_FIELD(c.rejection.unknown_fraction))},
      {"ka.commit_all", boolean(LA_FIELD(c.commit_all))},
      {"ka.seed", number<std::uint64_t>(LA_FIELD(c.ka_seed))},
      {"ka.continue_episodes", number<std::size_t>(LA_FIELD(c.continue_episodes))},

      {"gmf.latent_dim", number<std::size_t>(LA_FIELD(c.gmf.latent_dim))},
      {"gmf.learning_rate", number<double>(LA_FIELD(c.gmf.learning_rate))},
      {"gmf.negatives", number<std::size_t>(LA_FIELD(c.gmf.negatives))},
      {"gmf.epochs", number<std::size_t>(LA_FIELD(c.gmf.epochs))},
      {"gmf.batch_size", number<std::size_t>(LA_FIELD(c.gmf.batch_size))},
      {"gmf.seed", number<std::uint64_t>(LA_FIELD(c.gmf.seed))},

      {"sweep.t1", size_list(LA_FIELD(c.sweep_t1))},

      {"service.capacity", number<std::size_t>(LA_FIELD(c.service_capacity))},
      {"service.timeout_seconds", number<double>(LA_FIELD(c.service_timeout_seconds))},
      {"service.host", text(LA_FIELD(c.service_host))},
      {"service.port", number<int>(LA_FIELD(c.service_port))},
      {"service.seed", number<std::uint64_t>(LA_FIELD(c.service_seed))},
      {"service.kb_save", text(LA_FIELD(c.service_kb_save))},
  };
  return table;
}

#undef LA_FIELD

const Binding& binding(const std::string& key) {
  const auto& table = bindings();
  auto it = table.find(key);
  if (it == table.end()) throw InvalidArgument("unknown setting '" + key + "'");
  return it->second;
}

}  // namespace

void validate(const ExperimentConfig& c, std::size_t num_questions) {
  if (c.total_questions == 0) throw InvalidArgument("game.questions must be positive");
  if (c.is_questions == 0 || c.is_questions > c.total_questions)
    throw InvalidArgument("game.is_questions must lie in [1, game.questions]");
  if (num_questions != 0 && c.total_questions > num_questions)
    throw InvalidArgument("game.questions (" + std::to_string(c.total_questions) +
                          ") exceeds the number of questions in the KB (" +
                          std::to_string(num_questions) + ")");
  if (c.eval_episodes == 0) throw InvalidArgument("eval.episodes must be positive");
  if (!(c.holdout >= 0.0 && c.holdout < 1.0)) throw InvalidArgument("ka.holdout must lie in [0, 1)");
  if (c.candidates == 0) throw InvalidArgument("ka.candidates must be positive");
  if (c.buffer_size == 0) throw InvalidArgument("ka.buffer_size must be positive");
  if (c.train.batch_size == 0) throw InvalidArgument("train.batch_size must be positive");
  if (c.train.replay_capacity == 0) throw InvalidArgument("train.replay_capacity must be positive");
  if (c.service_capacity == 0) throw InvalidArgument("service.capacity must be positive");
  for (std::size_t t1 : c.sweep_t1)
    if (t1 == 0) throw InvalidArgument("sweep.t1 values must be positive");
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  binding(key).set(config, key, trim(value));
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw InvalidArgument("override '" + assignment + "' is not of the form key=value");
  apply_setting(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string get_setting(const ExperimentConfig& config, const std::string& key) {
  return binding(key).get(config);
}

std::vector<std::string> setting_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, _] : bindings()) keys.push_back(key);
  return keys;
}

void load_config(ExperimentConfig& config, std::istream& in, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ParseError(source + ": setting '" + section + "' lies outside a section");
    for (const auto& [key, value] : body) {
      try {
        apply_setting(config, section + "." + key, value.data());
      } catch (const InvalidArgument& e) {
        throw ParseError(source + ": " + e.what());
      }
    }
  }
}

void load_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  load_config(config, in, path);
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
  std::string section;
  for (const auto& key : setting_keys()) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << key.substr(dot + 1) << " = " << get_setting(config, key) << '\n';
  }
}

}  // namespace la

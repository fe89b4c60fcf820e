#include "grpolab/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grpolab/errors.hpp"

namespace grpolab {

using nlohmann::json;

OptimizerState OptimizerConfig::state() const {
  OptimizerState s;
  s.base_lr = base_lr;
  s.clip_epsilon = clip_epsilon;
  s.inner_epochs = inner_epochs;
  s.schedule = lr_schedule;
  return s;
}

void OptimizerConfig::validate() const {
  if (!(base_lr >= 0.0)) throw_config_validation("optimizer.base_lr must be nonnegative");
  if (!(clip_epsilon >= 0.0)) throw_config_validation("optimizer.clip_epsilon must be nonnegative");
  if (inner_epochs < 1) throw_config_validation("optimizer.inner_epochs must be >= 1");
}

void RunConfig::validate() const {
  if (total_steps < 1) throw_config_validation("run.total_steps must be >= 1");
  if (questions_per_step < 1) throw_config_validation("run.questions_per_step must be >= 1");
  if (group_size < 2) throw_config_validation("run.group_size must be >= 2");
  if (seeds.empty()) throw_config_validation("run.seeds must contain at least one seed");
}

void AnalysisConfig::validate() const {
  if (variance_batches < 50) throw_config_validation("analysis.variance_batches must be >= 50");
  if (groups_per_batch < 1) throw_config_validation("analysis.groups_per_batch must be >= 1");
  if (probe_step < 0) throw_config_validation("analysis.probe_step must be nonnegative");
  if (checkpoints.empty()) throw_config_validation("analysis.checkpoints must be non-empty");
  long prev = 0;
  for (long t : checkpoints) {
    if (t <= prev) throw_config_validation("analysis.checkpoints must be positive and increasing");
    prev = t;
  }
  if (collapse.window < 2) throw_config_validation("analysis.collapse_window must be >= 2");
  if (!(collapse.length_ratio > 0.0 && collapse.length_ratio < 1.0))
    throw_config_validation("analysis.collapse_length_ratio must be in (0, 1)");
  if (!(collapse.reward_peak_fraction > 0.0 && collapse.reward_peak_fraction < 1.0))
    throw_config_validation("analysis.collapse_reward_fraction must be in (0, 1)");
  for (double rho : rho_sweep)
    if (!(rho >= -1.0 && rho <= 1.0))
      throw_config_validation("analysis.rho_sweep values must be in [-1, 1]");
  if (oracle_samples < 2) throw_config_validation("analysis.oracle_samples must be >= 2");
  if (covariance_samples < 0)
    throw_config_validation("analysis.covariance_samples must be nonnegative");
  if (bootstrap_resamples < 2)
    throw_config_validation("analysis.bootstrap_resamples must be >= 2");
  if (sigma_probe_batches < 50)
    throw_config_validation("analysis.sigma_probe_batches must be >= 50");
}

void ExperimentConfig::finalize() {
  if (reward.total_steps == 0) reward.total_steps = static_cast<int>(run.total_steps);
  env.validate();
  reward.validate();
  optimizer.validate();
  run.validate();
  analysis.validate();
}

namespace {

// --- typed field extraction with section-qualified error messages ----------

std::string qualify(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

void check_known_keys(const json& obj, const std::string& section,
                      std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) throw_config_validation("unknown field '" + qualify(section, key) + "'");
  }
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& section, const std::string& key,
                  double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) throw_config_validation("field '" + qualify(section, key) + "' must be a number");
  return v->get<double>();
}

long get_integer(const json& obj, const std::string& section, const std::string& key,
                 long fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer())
    throw_config_validation("field '" + qualify(section, key) + "' must be an integer");
  return v->get<long>();
}

bool get_boolean(const json& obj, const std::string& section, const std::string& key,
                 bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean())
    throw_config_validation("field '" + qualify(section, key) + "' must be a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& section, const std::string& key,
                       const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string())
    throw_config_validation("field '" + qualify(section, key) + "' must be a string");
  return v->get<std::string>();
}

template <typename T, typename Fn>
std::vector<T> get_array(const json& obj, const std::string& section, const std::string& key,
                         std::vector<T> fallback, Fn&& element) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_array())
    throw_config_validation("field '" + qualify(section, key) + "' must be an array");
  std::vector<T> out;
  out.reserve(v->size());
  for (const json& e : *v) out.push_back(element(e, qualify(section, key)));
  return out;
}

EnvConfig parse_env(const json& obj) {
  check_known_keys(obj, "env",
                   {"num_buckets", "templates_per_bucket", "base_length",
                    "difficulty_length_slope", "correlation_knob", "correlation_strength",
                    "length_noise_sd", "short_wrong_template", "seed_salt", "template_ratio_min",
                    "template_ratio_max", "accuracy_easy", "accuracy_hard", "accuracy_ramp",
                    "length_cap", "rubric"});
  EnvConfig env;
  env.num_buckets = static_cast<int>(get_integer(obj, "env", "num_buckets", env.num_buckets));
  env.templates_per_bucket =
      static_cast<int>(get_integer(obj, "env", "templates_per_bucket", env.templates_per_bucket));
  env.base_length = get_number(obj, "env", "base_length", env.base_length);
  env.difficulty_length_slope =
      get_number(obj, "env", "difficulty_length_slope", env.difficulty_length_slope);
  env.correlation_knob = get_number(obj, "env", "correlation_knob", env.correlation_knob);
  env.correlation_strength =
      get_number(obj, "env", "correlation_strength", env.correlation_strength);
  env.length_noise_sd = get_number(obj, "env", "length_noise_sd", env.length_noise_sd);
  env.short_wrong_template =
      get_boolean(obj, "env", "short_wrong_template", env.short_wrong_template);
  env.seed_salt = get_integer(obj, "env", "seed_salt", env.seed_salt);
  env.template_ratio_min = get_number(obj, "env", "template_ratio_min", env.template_ratio_min);
  env.template_ratio_max = get_number(obj, "env", "template_ratio_max", env.template_ratio_max);
  env.accuracy_easy = get_number(obj, "env", "accuracy_easy", env.accuracy_easy);
  env.accuracy_hard = get_number(obj, "env", "accuracy_hard", env.accuracy_hard);
  env.accuracy_ramp = get_number(obj, "env", "accuracy_ramp", env.accuracy_ramp);
  env.length_cap = static_cast<int>(get_integer(obj, "env", "length_cap", env.length_cap));
  if (const json* rubric = find(obj, "rubric")) {
    check_known_keys(*rubric, "env.rubric", {"unit_penalty", "grace", "band"});
    env.rubric.unit_penalty =
        get_number(*rubric, "env.rubric", "unit_penalty", env.rubric.unit_penalty);
    env.rubric.grace = get_number(*rubric, "env.rubric", "grace", env.rubric.grace);
    env.rubric.band = get_number(*rubric, "env.rubric", "band", env.rubric.band);
  }
  return env;
}

RewardConfig parse_reward(const json& obj) {
  check_known_keys(obj, "reward", {"kind", "alpha", "total_steps", "adv_epsilon", "cosine"});
  RewardConfig reward;
  reward.total_steps = 0;  // inherit unless overridden
  reward.kind = reward_kind_from_string(
      get_string(obj, "reward", "kind", std::string(to_string(reward.kind))));
  reward.alpha = get_number(obj, "reward", "alpha", reward.alpha);
  reward.total_steps =
      static_cast<int>(get_integer(obj, "reward", "total_steps", reward.total_steps));
  reward.adv_epsilon = get_number(obj, "reward", "adv_epsilon", reward.adv_epsilon);
  if (const json* cosine = find(obj, "cosine")) {
    check_known_keys(*cosine, "reward.cosine",
                     {"l_max", "r0_correct", "rl_correct", "r0_wrong", "rl_wrong", "r_exceed"});
    reward.cosine.l_max =
        static_cast<int>(get_integer(*cosine, "reward.cosine", "l_max", reward.cosine.l_max));
    reward.cosine.r0_correct =
        get_number(*cosine, "reward.cosine", "r0_correct", reward.cosine.r0_correct);
    reward.cosine.rl_correct =
        get_number(*cosine, "reward.cosine", "rl_correct", reward.cosine.rl_correct);
    reward.cosine.r0_wrong =
        get_number(*cosine, "reward.cosine", "r0_wrong", reward.cosine.r0_wrong);
    reward.cosine.rl_wrong =
        get_number(*cosine, "reward.cosine", "rl_wrong", reward.cosine.rl_wrong);
    reward.cosine.r_exceed =
        get_number(*cosine, "reward.cosine", "r_exceed", reward.cosine.r_exceed);
  }
  return reward;
}

OptimizerConfig parse_optimizer(const json& obj) {
  check_known_keys(obj, "optimizer", {"base_lr", "clip_epsilon", "inner_epochs", "lr_schedule"});
  OptimizerConfig opt;
  opt.base_lr = get_number(obj, "optimizer", "base_lr", opt.base_lr);
  opt.clip_epsilon = get_number(obj, "optimizer", "clip_epsilon", opt.clip_epsilon);
  opt.inner_epochs = static_cast<int>(get_integer(obj, "optimizer", "inner_epochs", opt.inner_epochs));
  const std::string schedule = get_string(obj, "optimizer", "lr_schedule", "inv_sqrt");
  if (schedule == "inv_sqrt")
    opt.lr_schedule = LrSchedule::InvSqrt;
  else if (schedule == "constant")
    opt.lr_schedule = LrSchedule::Constant;
  else
    throw_config_validation("field 'optimizer.lr_schedule' must be 'inv_sqrt' or 'constant'");
  return opt;
}

RunConfig parse_run(const json& obj) {
  check_known_keys(obj, "run", {"total_steps", "questions_per_step", "group_size", "seeds"});
  RunConfig run;
  run.total_steps = get_integer(obj, "run", "total_steps", run.total_steps);
  run.questions_per_step =
      static_cast<int>(get_integer(obj, "run", "questions_per_step", run.questions_per_step));
  run.group_size = static_cast<int>(get_integer(obj, "run", "group_size", run.group_size));
  run.seeds = get_array<std::uint64_t>(obj, "run", "seeds", run.seeds,
                                       [](const json& e, const std::string& field) {
                                         if (!e.is_number_integer())
                                           throw_config_validation("field '" + field +
                                                                   "' must hold integers");
                                         return e.get<std::uint64_t>();
                                       });
  return run;
}

AnalysisConfig parse_analysis(const json& obj) {
  check_known_keys(obj, "analysis",
                   {"variance_batches", "groups_per_batch", "probe_step", "checkpoints",
                    "collapse_window", "collapse_length_ratio", "collapse_reward_fraction",
                    "rho_sweep", "oracle_samples", "covariance_samples", "bootstrap_resamples",
                    "sigma_probe_batches", "scenarios"});
  AnalysisConfig a;
  a.variance_batches =
      static_cast<int>(get_integer(obj, "analysis", "variance_batches", a.variance_batches));
  a.groups_per_batch =
      static_cast<int>(get_integer(obj, "analysis", "groups_per_batch", a.groups_per_batch));
  a.probe_step = static_cast<int>(get_integer(obj, "analysis", "probe_step", a.probe_step));
  a.checkpoints = get_array<long>(obj, "analysis", "checkpoints", a.checkpoints,
                                  [](const json& e, const std::string& field) {
                                    if (!e.is_number_integer())
                                      throw_config_validation("field '" + field +
                                                              "' must hold integers");
                                    return e.get<long>();
                                  });
  a.collapse.window =
      static_cast<int>(get_integer(obj, "analysis", "collapse_window", a.collapse.window));
  a.collapse.length_ratio =
      get_number(obj, "analysis", "collapse_length_ratio", a.collapse.length_ratio);
  a.collapse.reward_peak_fraction =
      get_number(obj, "analysis", "collapse_reward_fraction", a.collapse.reward_peak_fraction);
  a.rho_sweep = get_array<double>(obj, "analysis", "rho_sweep", a.rho_sweep,
                                  [](const json& e, const std::string& field) {
                                    if (!e.is_number())
                                      throw_config_validation("field '" + field +
                                                              "' must hold numbers");
                                    return e.get<double>();
                                  });
  a.oracle_samples = get_integer(obj, "analysis", "oracle_samples", a.oracle_samples);
  a.covariance_samples = get_integer(obj, "analysis", "covariance_samples", a.covariance_samples);
  a.bootstrap_resamples =
      static_cast<int>(get_integer(obj, "analysis", "bootstrap_resamples", a.bootstrap_resamples));
  a.sigma_probe_batches =
      static_cast<int>(get_integer(obj, "analysis", "sigma_probe_batches", a.sigma_probe_batches));
  a.scenarios = get_array<std::string>(obj, "analysis", "scenarios", a.scenarios,
                                       [](const json& e, const std::string& field) {
                                         if (!e.is_string())
                                           throw_config_validation("field '" + field +
                                                                   "' must hold strings");
                                         return e.get<std::string>();
                                       });
  return a;
}

void position_from_offset(const std::string& text, std::size_t offset, std::size_t& line,
                          std::size_t& column) {
  line = 1;
  column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& root, const std::string& source_name) {
  if (!root.is_object())
    throw_config_validation(source_name + ": top-level config must be an object");
  check_known_keys(root, "", {"env", "reward", "optimizer", "run", "analysis", "output_dir"});

  ExperimentConfig config;
  if (const json* env = find(root, "env")) config.env = parse_env(*env);
  if (const json* reward = find(root, "reward"))
    config.reward = parse_reward(*reward);
  else
    config.reward.total_steps = 0;
  if (const json* optimizer = find(root, "optimizer")) config.optimizer = parse_optimizer(*optimizer);
  if (const json* run = find(root, "run")) config.run = parse_run(*run);
  if (const json* analysis = find(root, "analysis")) config.analysis = parse_analysis(*analysis);
  config.output_dir = get_string(root, "", "output_dir", config.output_dir);

  config.finalize();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw_config_parse(path.string() + ": empty config file");

  const std::string ext = path.extension().string();
  json root;
  if (ext == ".json") {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      std::size_t line = 1, column = 1;
      position_from_offset(text, e.byte > 0 ? e.byte - 1 : 0, line, column);
      throw_config_parse(path.string() + ":" + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + e.what());
    }
  } else if (ext == ".toml") {
    root = toml_to_json(text, path.string());
  } else {
    throw_config_parse(path.string() + ": unsupported config extension '" + ext +
                       "' (expected .json or .toml)");
  }
  return config_from_json(root, path.string());
}

json to_json(const ExperimentConfig& c) {
  json root;
  root["env"] = {{"num_buckets", c.env.num_buckets},
                 {"templates_per_bucket", c.env.templates_per_bucket},
                 {"base_length", c.env.base_length},
                 {"difficulty_length_slope", c.env.difficulty_length_slope},
                 {"correlation_knob", c.env.correlation_knob},
                 {"correlation_strength", c.env.correlation_strength},
                 {"length_noise_sd", c.env.length_noise_sd},
                 {"short_wrong_template", c.env.short_wrong_template},
                 {"seed_salt", c.env.seed_salt},
                 {"template_ratio_min", c.env.template_ratio_min},
                 {"template_ratio_max", c.env.template_ratio_max},
                 {"accuracy_easy", c.env.accuracy_easy},
                 {"accuracy_hard", c.env.accuracy_hard},
                 {"accuracy_ramp", c.env.accuracy_ramp},
                 {"length_cap", c.env.length_cap},
                 {"rubric",
                  {{"unit_penalty", c.env.rubric.unit_penalty},
                   {"grace", c.env.rubric.grace},
                   {"band", c.env.rubric.band}}}};
  root["reward"] = {{"kind", std::string(to_string(c.reward.kind))},
                    {"alpha", c.reward.alpha},
                    {"total_steps", c.reward.total_steps},
                    {"adv_epsilon", c.reward.adv_epsilon},
                    {"cosine",
                     {{"l_max", c.reward.cosine.l_max},
                      {"r0_correct", c.reward.cosine.r0_correct},
                      {"rl_correct", c.reward.cosine.rl_correct},
                      {"r0_wrong", c.reward.cosine.r0_wrong},
                      {"rl_wrong", c.reward.cosine.rl_wrong},
                      {"r_exceed", c.reward.cosine.r_exceed}}}};
  root["optimizer"] = {
      {"base_lr", c.optimizer.base_lr},
      {"clip_epsilon", c.optimizer.clip_epsilon},
      {"inner_epochs", c.optimizer.inner_epochs},
      {"lr_schedule", c.optimizer.lr_schedule == LrSchedule::InvSqrt ? "inv_sqrt" : "constant"}};
  root["run"] = {{"total_steps", c.run.total_steps},
                 {"questions_per_step", c.run.questions_per_step},
                 {"group_size", c.run.group_size},
                 {"seeds", c.run.seeds}};
  root["analysis"] = {{"variance_batches", c.analysis.variance_batches},
                      {"groups_per_batch", c.analysis.groups_per_batch},
                      {"probe_step", c.analysis.probe_step},
                      {"checkpoints", c.analysis.checkpoints},
                      {"collapse_window", c.analysis.collapse.window},
                      {"collapse_length_ratio", c.analysis.collapse.length_ratio},
                      {"collapse_reward_fraction", c.analysis.collapse.reward_peak_fraction},
                      {"rho_sweep", c.analysis.rho_sweep},
                      {"oracle_samples", c.analysis.oracle_samples},
                      {"covariance_samples", c.analysis.covariance_samples},
                      {"bootstrap_resamples", c.analysis.bootstrap_resamples},
                      {"sigma_probe_batches", c.analysis.sigma_probe_batches},
                      {"scenarios", c.analysis.scenarios}};
  root["output_dir"] = c.output_dir;
  return root;
}

std::string canonical_dump(const ExperimentConfig& config) {
  return to_json(config).dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string dump = canonical_dump(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

// ---------------------------------------------------------------------------
// TOML subset reader

namespace {

struct TomlParser {
  const std::string& text;
  const std::string& source;
  std::size_t pos = 0;
  std::size_t line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw_config_parse(source + ":" + std::to_string(line) + ": " + msg);
  }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos;
  }

  void skip_to_eol() {
    while (!eof() && peek() != '\n') ++pos;
  }

  void expect_eol_or_comment() {
    skip_spaces();
    if (eof()) return;
    if (peek() == '#') skip_to_eol();
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  std::string parse_bare_key() {
    std::size_t start = pos;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-'))
      ++pos;
    if (pos == start) fail("expected a key");
    return text.substr(start, pos - start);
  }

  std::string parse_string() {
    ++pos;  // opening quote
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char ch = text[pos++];
      if (ch == '"') break;
      if (ch == '\\') {
        if (eof()) fail("unterminated escape");
        char esc = text[pos++];
        switch (esc) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: fail("unsupported escape sequence");
        }
      } else {
        out.push_back(ch);
      }
    }
    return out;
  }

  json parse_scalar() {
    if (peek() == '"') return parse_string();

    std::size_t start = pos;
    while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' &&
           peek() != ' ' && peek() != '\t' && peek() != '\r')
      ++pos;
    std::string token = text.substr(start, pos - start);
    if (token.empty()) fail("expected a value");
    if (token == "true") return true;
    if (token == "false") return false;

    bool integral = true;
    for (std::size_t i = 0; i < token.size(); ++i) {
      char ch = token[i];
      if (i == 0 && (ch == '+' || ch == '-')) continue;
      if (!std::isdigit(static_cast<unsigned char>(ch))) {
        integral = false;
        break;
      }
    }
    if (integral) {
      long long value = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size())
        fail("invalid integer '" + token + "'");
      return value;
    }
    try {
      std::size_t consumed = 0;
      double value = std::stod(token, &consumed);
      if (consumed != token.size()) fail("invalid value '" + token + "'");
      return value;
    } catch (const std::exception&) {
      fail("invalid value '" + token + "'");
    }
  }

  json parse_value() {
    if (peek() == '[') {
      ++pos;
      json array = json::array();
      skip_spaces();
      if (!eof() && peek() == ']') {
        ++pos;
        return array;
      }
      while (true) {
        skip_spaces();
        if (eof() || peek() == '\n') fail("unterminated array");
        array.push_back(parse_value());
        skip_spaces();
        if (eof()) fail("unterminated array");
        if (peek() == ',') {
          ++pos;
          continue;
        }
        if (peek() == ']') {
          ++pos;
          return array;
        }
        fail("expected ',' or ']' in array");
      }
    }
    return parse_scalar();
  }

  json parse() {
    json root = json::object();
    json* table = &root;

    while (!eof()) {
      skip_spaces();
      if (eof()) break;
      if (peek() == '\n') {
        ++pos;
        ++line;
        continue;
      }
      if (peek() == '#') {
        skip_to_eol();
        continue;
      }
      if (peek() == '[') {
        ++pos;
        table = &root;
        while (true) {
          skip_spaces();
          const std::string part = parse_bare_key();
          table = &(*table)[part];
          if (!table->is_object() && !table->is_null()) fail("table redefines a value");
          if (table->is_null()) *table = json::object();
          skip_spaces();
          if (!eof() && peek() == '.') {
            ++pos;
            continue;
          }
          break;
        }
        if (eof() || peek() != ']') fail("expected ']' to close table header");
        ++pos;
        expect_eol_or_comment();
        continue;
      }

      const std::string key = parse_bare_key();
      skip_spaces();
      if (eof() || peek() != '=') fail("expected '=' after key '" + key + "'");
      ++pos;
      skip_spaces();
      if (eof() || peek() == '\n') fail("missing value for key '" + key + "'");
      if (table->contains(key)) fail("duplicate key '" + key + "'");
      (*table)[key] = parse_value();
      expect_eol_or_comment();
    }
    return root;
  }
};

}  // namespace

json toml_to_json(const std::string& text, const std::string& source_name) {
  TomlParser parser{text, source_name};
  return parser.parse();
}

}  // namespace grpolab

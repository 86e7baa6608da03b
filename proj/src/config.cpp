#include "bierl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "bierl/errors.hpp"

namespace bierl {

std::string to_string(Profile profile) {
  return profile == Profile::paper_scale ? "paper_scale" : "quickstart";
}

Profile profile_from_string(const std::string& name) {
  if (name == "quickstart") return Profile::quickstart;
  if (name == "paper_scale") return Profile::paper_scale;
  throw ConfigError("unknown profile '" + name + "'");
}

RunConfig profile_defaults(Profile profile) {
  RunConfig c;
  c.profile = profile;
  auto& l = c.loop;
  l.es.learning_rate = 0.02;
  l.es.noise = 0.05;
  l.meta.learning_rate = 0.006;
  l.meta.noise = 0.05;
  l.meta.interval = 10;
  l.generator_hidden = 32;
  if (profile == Profile::quickstart) {
    l.es.population = 50;
    l.meta.population = 20;
    l.meta.repeats = 1;
    l.lstm_hidden = 64;
    c.total_iterations = 200;
    c.task.horizon = 200;
  } else {
    l.es.population = 200;
    l.meta.population = 200;
    l.meta.repeats = 3;
    l.lstm_hidden = 1024;
    c.total_iterations = 400;
    c.task.horizon = 1000;
  }
  c.warm.task.horizon = c.task.horizon;
  return c;
}

void RunConfig::validate() const {
  task.validate();
  if (modes.empty()) throw ConfigError("run.modes must list at least one mode");
  if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  if (total_iterations < 1) throw ConfigError("run.total_iterations must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("run.checkpoint_every must be >= 0");
  if (workers < 0) throw ConfigError("run.workers must be >= 0");
  if (!(recovery_fraction > 0.0)) throw ConfigError("run.recovery_fraction must be > 0");
  if (warm.meta_updates < 0) throw ConfigError("warm_start.meta_updates must be >= 0");
  warm.task.validate();
  for (Mode m : modes) loop_for(m, seeds.front()).validate();
  if (sweep) {
    if (sweep->values.empty()) throw ConfigError("sweep.values must not be empty");
    static const std::vector<std::string> axes{"n", "m", "omega", "beta", "k", "l"};
    if (std::find(axes.begin(), axes.end(), sweep->axis) == axes.end())
      throw ConfigError("sweep.axis must be one of n, m, omega, beta, k, l (got '" + sweep->axis + "')");
  }
}

LoopConfig RunConfig::loop_for(Mode mode, std::uint64_t seed) const {
  LoopConfig c = loop;
  c.mode = mode;
  c.seed = seed;
  return c;
}

FitnessTask RunConfig::task_for(std::uint64_t seed) const {
  FitnessTask t = task;
  t.seed = task_seed.value_or(seed);
  return t;
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// A raw value with enough context for error messages.
struct Value {
  std::string raw;
  std::string key;
  int line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    std::string where = line > 0 ? "line " + std::to_string(line) + ", " : "override, ";
    throw ConfigError(where + "key '" + key + "': " + what + " (got '" + raw + "')");
  }

  double number() const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || p != raw.data() + raw.size()) fail("expected a number");
    return v;
  }

  std::int64_t integer() const {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || p != raw.data() + raw.size()) fail("expected an integer");
    return v;
  }

  int small_int() const {
    auto v = integer();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail("out of range");
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_int() const {
    auto v = integer();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean() const {
    if (raw == "true") return true;
    if (raw == "false") return false;
    fail("expected true or false");
  }

  std::string text() const {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return raw.substr(1, raw.size() - 2);
    if (raw.empty() || raw.front() == '"' || raw.front() == '[') fail("expected a string");
    return raw;
  }

  std::vector<Value> list() const {
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') fail("expected a [list]");
    std::vector<Value> out;
    const std::string inner = trim(std::string_view(raw).substr(1, raw.size() - 2));
    if (inner.empty()) return out;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail("empty list element");
      out.push_back({item, key, line});
    }
    return out;
  }

  std::pair<double, double> interval() const {
    auto items = list();
    if (items.size() != 2) fail("expected [lo, hi]");
    return {items[0].number(), items[1].number()};
  }
};

Shaping shaping_from(const Value& v) {
  const auto s = v.text();
  if (s == "raw") return Shaping::raw;
  if (s == "centered_rank") return Shaping::centered_rank;
  v.fail("expected raw or centered_rank");
}

using Setter = std::function<void(RunConfig&, const Value&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["run.profile"] = [](RunConfig&, const Value& v) {
      try {
        profile_from_string(v.text());
      } catch (const ConfigError&) {
        v.fail("expected quickstart or paper_scale");
      }
    };
    t["run.modes"] = [](RunConfig& c, const Value& v) {
      c.modes.clear();
      for (const auto& item : v.list()) {
        try {
          const Mode m = mode_from_string(item.text());
          if (std::find(c.modes.begin(), c.modes.end(), m) == c.modes.end()) c.modes.push_back(m);
        } catch (const ConfigError&) {
          item.fail("expected baseline_fixed, pm or npm");
        }
      }
    };
    t["run.seeds"] = [](RunConfig& c, const Value& v) {
      c.seeds.clear();
      for (const auto& item : v.list()) c.seeds.push_back(item.unsigned_int());
    };
    t["run.total_iterations"] = [](RunConfig& c, const Value& v) { c.total_iterations = v.integer(); };
    t["run.output_dir"] = [](RunConfig& c, const Value& v) { c.output_dir = v.text(); };
    t["run.match_budget"] = [](RunConfig& c, const Value& v) { c.match_budget = v.boolean(); };
    t["run.checkpoint_every"] = [](RunConfig& c, const Value& v) { c.checkpoint_every = v.small_int(); };
    t["run.workers"] = [](RunConfig& c, const Value& v) { c.workers = v.small_int(); };
    t["run.recovery_fraction"] = [](RunConfig& c, const Value& v) { c.recovery_fraction = v.number(); };
    t["run.dump_bo"] = [](RunConfig& c, const Value& v) { c.dump_bo = v.boolean(); };

    t["task.kind"] = [](RunConfig& c, const Value& v) {
      try {
        c.task.kind = task_kind_from_string(v.text());
      } catch (const ConfigError&) {
        v.fail("unknown task kind");
      }
    };
    t["task.dim"] = [](RunConfig& c, const Value& v) { c.task.dim = v.small_int(); };
    t["task.horizon"] = [](RunConfig& c, const Value& v) { c.task.horizon = v.small_int(); };
    t["task.gamma"] = [](RunConfig& c, const Value& v) { c.task.gamma = v.number(); };
    t["task.seed"] = [](RunConfig& c, const Value& v) { c.task_seed = v.unsigned_int(); };
    t["task.init"] = [](RunConfig& c, const Value& v) { c.task.init = v.number(); };
    t["task.shift_every"] = [](RunConfig& c, const Value& v) { c.task.shift_every = v.small_int(); };
    t["task.shift_norm"] = [](RunConfig& c, const Value& v) { c.task.shift_norm = v.number(); };
    t["task.initial_offset"] = [](RunConfig& c, const Value& v) { c.task.initial_offset = v.number(); };
    t["task.policy_hidden"] = [](RunConfig& c, const Value& v) {
      c.task.policy_hidden.clear();
      for (const auto& item : v.list()) c.task.policy_hidden.push_back(item.small_int());
    };

    t["es.population"] = [](RunConfig& c, const Value& v) { c.loop.es.population = v.small_int(); };
    t["es.learning_rate"] = [](RunConfig& c, const Value& v) { c.loop.es.learning_rate = v.number(); };
    t["es.noise"] = [](RunConfig& c, const Value& v) { c.loop.es.noise = v.number(); };
    t["es.shaping"] = [](RunConfig& c, const Value& v) { c.loop.es.shaping = shaping_from(v); };
    t["es.antithetic"] = [](RunConfig& c, const Value& v) { c.loop.es.antithetic = v.boolean(); };
    t["es.workers"] = [](RunConfig& c, const Value& v) { c.loop.es.workers = v.small_int(); };

    t["meta.population"] = [](RunConfig& c, const Value& v) { c.loop.meta.population = v.small_int(); };
    t["meta.learning_rate"] = [](RunConfig& c, const Value& v) { c.loop.meta.learning_rate = v.number(); };
    t["meta.noise"] = [](RunConfig& c, const Value& v) { c.loop.meta.noise = v.number(); };
    t["meta.repeats"] = [](RunConfig& c, const Value& v) { c.loop.meta.repeats = v.small_int(); };
    t["meta.interval"] = [](RunConfig& c, const Value& v) { c.loop.meta.interval = v.small_int(); };
    t["meta.shaping"] = [](RunConfig& c, const Value& v) { c.loop.meta.shaping = shaping_from(v); };
    t["meta.common_lookahead_noise"] = [](RunConfig& c, const Value& v) {
      c.loop.meta.common_lookahead_noise = v.boolean();
    };
    t["meta.workers"] = [](RunConfig& c, const Value& v) { c.loop.meta.workers = v.small_int(); };
    t["meta.lstm_hidden"] = [](RunConfig& c, const Value& v) { c.loop.lstm_hidden = v.small_int(); };
    t["meta.generator_hidden"] = [](RunConfig& c, const Value& v) { c.loop.generator_hidden = v.small_int(); };

    t["npm.budget"] = [](RunConfig& c, const Value& v) { c.loop.bo.budget = v.small_int(); };
    t["npm.candidates"] = [](RunConfig& c, const Value& v) { c.loop.bo.candidates = v.small_int(); };
    t["npm.length_scale"] = [](RunConfig& c, const Value& v) { c.loop.bo.length_scale = v.number(); };
    t["npm.noise_variance"] = [](RunConfig& c, const Value& v) { c.loop.bo.noise_variance = v.number(); };
    t["npm.window_rounds"] = [](RunConfig& c, const Value& v) { c.loop.bo.window_rounds = v.small_int(); };

    t["ranges.sigma"] = [](RunConfig& c, const Value& v) {
      auto [lo, hi] = v.interval();
      c.loop.ranges.sigma = {lo, hi};
    };
    t["ranges.alpha"] = [](RunConfig& c, const Value& v) {
      auto [lo, hi] = v.interval();
      c.loop.ranges.alpha = {lo, hi};
    };
    t["ranges.allow_degenerate"] = [](RunConfig& c, const Value& v) {
      c.loop.ranges.allow_degenerate = v.boolean();
    };
    t["initial.sigma"] = [](RunConfig& c, const Value& v) { c.loop.initial.sigma = v.number(); };
    t["initial.alpha"] = [](RunConfig& c, const Value& v) { c.loop.initial.alpha = v.number(); };

    t["warm_start.enabled"] = [](RunConfig& c, const Value& v) { c.warm.enabled = v.boolean(); };
    t["warm_start.meta_updates"] = [](RunConfig& c, const Value& v) { c.warm.meta_updates = v.small_int(); };
    t["warm_start.task"] = [](RunConfig& c, const Value& v) {
      try {
        c.warm.task.kind = task_kind_from_string(v.text());
      } catch (const ConfigError&) {
        v.fail("unknown task kind");
      }
    };
    t["warm_start.dim"] = [](RunConfig& c, const Value& v) { c.warm.task.dim = v.small_int(); };
    t["warm_start.init"] = [](RunConfig& c, const Value& v) { c.warm.task.init = v.number(); };
    t["warm_start.seed"] = [](RunConfig& c, const Value& v) { c.warm.seed = v.unsigned_int(); };
    t["warm_start.load"] = [](RunConfig& c, const Value& v) { c.warm.load_path = v.text(); };
    t["warm_start.save"] = [](RunConfig& c, const Value& v) { c.warm.save_path = v.text(); };

    t["sweep.axis"] = [](RunConfig& c, const Value& v) {
      if (!c.sweep) c.sweep.emplace();
      c.sweep->axis = v.text();
    };
    t["sweep.values"] = [](RunConfig& c, const Value& v) {
      if (!c.sweep) c.sweep.emplace();
      c.sweep->values.clear();
      for (const auto& item : v.list()) c.sweep->values.push_back(item.number());
    };
    return t;
  }();
  return table;
}

void apply(RunConfig& cfg, const Value& v) {
  const auto& table = setters();
  auto it = table.find(v.key);
  if (it == table.end()) {
    std::string where = v.line > 0 ? "line " + std::to_string(v.line) + ": " : "";
    throw ConfigError(where + "unknown key '" + v.key + "'");
  }
  it->second(cfg, v);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::vector<Value> tokenize(const std::string& text) {
  std::vector<Value> out;
  std::istringstream in(text);
  std::string raw_line, section;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' outside a section");
    out.push_back({value, section + "." + key, line_no});
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, std::optional<Profile> profile) {
  const auto values = tokenize(text);
  Profile chosen = Profile::quickstart;
  for (const auto& v : values)
    if (v.key == "run.profile") {
      try {
        chosen = profile_from_string(v.text());
      } catch (const ConfigError&) {
        v.fail("expected quickstart or paper_scale");
      }
    }
  if (profile) chosen = *profile;
  RunConfig cfg = profile_defaults(chosen);
  for (const auto& v : values) apply(cfg, v);
  return cfg;
}

RunConfig load_config(const std::string& path, std::optional<Profile> profile) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), profile);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must be key=value");
  const Value v{trim(std::string_view(assignment).substr(eq + 1)),
                trim(std::string_view(assignment).substr(0, eq)), 0};
  if (v.key == "run.profile") throw ConfigError("use --profile to change the profile");
  apply(cfg, v);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

nlohmann::json to_json(const FitnessTask& task) {
  return {{"kind", to_string(task.kind)},
          {"dim", task.dim},
          {"horizon", task.horizon},
          {"gamma", task.gamma},
          {"seed", task.seed},
          {"init", task.init},
          {"shift_every", task.shift_every},
          {"shift_norm", task.shift_norm},
          {"initial_offset", task.initial_offset},
          {"policy_hidden", task.policy_hidden}};
}

FitnessTask task_from_json(const nlohmann::json& j) {
  FitnessTask t;
  t.kind = task_kind_from_string(j.at("kind").get<std::string>());
  t.dim = j.at("dim").get<int>();
  t.horizon = j.at("horizon").get<int>();
  t.gamma = j.at("gamma").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.init = j.at("init").get<double>();
  t.shift_every = j.at("shift_every").get<int>();
  t.shift_norm = j.at("shift_norm").get<double>();
  t.initial_offset = j.at("initial_offset").get<double>();
  t.policy_hidden = j.at("policy_hidden").get<std::vector<int>>();
  return t;
}

namespace {

std::string shaping_name(Shaping s) { return s == Shaping::raw ? "raw" : "centered_rank"; }

Shaping shaping_named(const std::string& s) {
  if (s == "raw") return Shaping::raw;
  if (s == "centered_rank") return Shaping::centered_rank;
  throw FormatError("unknown shaping '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const LoopConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"seed", c.seed},
          {"es",
           {{"population", c.es.population},
            {"learning_rate", c.es.learning_rate},
            {"noise", c.es.noise},
            {"shaping", shaping_name(c.es.shaping)},
            {"antithetic", c.es.antithetic},
            {"workers", c.es.workers}}},
          {"meta",
           {{"population", c.meta.population},
            {"learning_rate", c.meta.learning_rate},
            {"noise", c.meta.noise},
            {"repeats", c.meta.repeats},
            {"interval", c.meta.interval},
            {"shaping", shaping_name(c.meta.shaping)},
            {"common_lookahead_noise", c.meta.common_lookahead_noise},
            {"workers", c.meta.workers},
            {"lstm_hidden", c.lstm_hidden},
            {"generator_hidden", c.generator_hidden}}},
          {"npm",
           {{"budget", c.bo.budget},
            {"candidates", c.bo.candidates},
            {"length_scale", c.bo.length_scale},
            {"noise_variance", c.bo.noise_variance},
            {"window_rounds", c.bo.window_rounds}}},
          {"ranges",
           {{"sigma", {c.ranges.sigma.lo, c.ranges.sigma.hi}},
            {"alpha", {c.ranges.alpha.lo, c.ranges.alpha.hi}},
            {"allow_degenerate", c.ranges.allow_degenerate}}},
          {"initial", {{"sigma", c.initial.sigma}, {"alpha", c.initial.alpha}}}};
}

LoopConfig loop_from_json(const nlohmann::json& j) {
  LoopConfig c;
  c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& es = j.at("es");
  c.es.population = es.at("population").get<int>();
  c.es.learning_rate = es.at("learning_rate").get<double>();
  c.es.noise = es.at("noise").get<double>();
  c.es.shaping = shaping_named(es.at("shaping").get<std::string>());
  c.es.antithetic = es.at("antithetic").get<bool>();
  c.es.workers = es.at("workers").get<int>();
  const auto& meta = j.at("meta");
  c.meta.population = meta.at("population").get<int>();
  c.meta.learning_rate = meta.at("learning_rate").get<double>();
  c.meta.noise = meta.at("noise").get<double>();
  c.meta.repeats = meta.at("repeats").get<int>();
  c.meta.interval = meta.at("interval").get<int>();
  c.meta.shaping = shaping_named(meta.at("shaping").get<std::string>());
  c.meta.common_lookahead_noise = meta.at("common_lookahead_noise").get<bool>();
  c.meta.workers = meta.at("workers").get<int>();
  c.lstm_hidden = meta.at("lstm_hidden").get<int>();
  c.generator_hidden = meta.at("generator_hidden").get<int>();
  const auto& bo = j.at("npm");
  c.bo.budget = bo.at("budget").get<int>();
  c.bo.candidates = bo.at("candidates").get<int>();
  c.bo.length_scale = bo.at("length_scale").get<double>();
  c.bo.noise_variance = bo.at("noise_variance").get<double>();
  c.bo.window_rounds = bo.at("window_rounds").get<int>();
  const auto& r = j.at("ranges");
  c.ranges.sigma = {r.at("sigma").at(0).get<double>(), r.at("sigma").at(1).get<double>()};
  c.ranges.alpha = {r.at("alpha").at(0).get<double>(), r.at("alpha").at(1).get<double>()};
  c.ranges.allow_degenerate = r.at("allow_degenerate").get<bool>();
  c.initial.sigma = j.at("initial").at("sigma").get<double>();
  c.initial.alpha = j.at("initial").at("alpha").get<double>();
  return c;
}

}  // namespace bierl
